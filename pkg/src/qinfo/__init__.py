"""Exact small-register quantum simulator with protocol and key-distribution tooling."""

from .linalg import hermitian_eig, matmul, partial_trace, partial_transpose, svd, tensor
from .qstate import (
    DensityOperator,
    MeasurementRecord,
    PureState,
    apply_gate,
    bell_state,
    computational_basis_state,
    fidelity,
    ket,
    measure_computational,
    measure_in_basis,
    purify,
    random_state,
    reduced_density,
    swap_states,
    to_density,
)
from .protocols import entanglement_swap, superdense_encode_decode, teleport
from .rng import Rng

__version__ = "0.1.0"
