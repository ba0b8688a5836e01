"""Multi-qubit states, standard gates and projective measurement.

Ordering convention: qubit 0 is the leftmost tensor factor, i.e. the most
significant bit of a computational-basis index. ``|01>`` is index 1 and
``computational_basis_state(3, 5)`` is ``|101>``.

States are compared by fidelity, never amplitude by amplitude, since protocol
corrections are only defined up to a global phase.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .linalg import (
    HERMITIAN_TOL,
    UNITARY_TOL,
    as_matrix,
    hermitian_eig,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    partial_trace,
)
from .rng import Rng

NORM_TOL = 1e-10
PSD_TOL = 1e-9
BORN_FLOOR = 1e-14


class StateError(ValueError):
    """Raised for invalid states, gates or qubit targets."""


# -- gates -------------------------------------------------------------------

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

# measurement-basis changes: columns are the basis vectors, outcome 0 first
Z_BASIS = I2
X_BASIS = H  # {|+>, |->}
Y_BASIS = np.array([[1, 1], [1j, -1j]], dtype=np.complex128) / np.sqrt(2)  # {|+i>, |-i>}


def axis_basis(theta: float) -> np.ndarray:
    """Eigenbasis of ``cos(theta) Z + sin(theta) X``; column 0 is the +1 eigenvector."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


# -- state types -------------------------------------------------------------

def _num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise StateError(f"dimension {dim} is not 2**n for n >= 1")
    return n


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized statevector of an n-qubit register."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = as_matrix(self.amplitudes, name="amplitudes")
        if amps.shape[1] != 1:
            raise StateError("amplitudes must be a single column")
        amps = amps[:, 0].copy()
        _num_qubits(amps.size)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state norm^2 is {norm}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.amplitudes.size)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"PureState(num_qubits={self.num_qubits}, amplitudes={np.round(self.amplitudes, 6)})"

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = as_matrix(amplitudes)[:, 0]
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise StateError("cannot normalize the zero vector")
        return cls(v / nrm)

    def inner(self, other: "PureState") -> complex:
        """``<self|other>``."""
        if other.dim != self.dim:
            raise StateError("dimension mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite operator on n qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        if m.shape[0] != m.shape[1]:
            raise StateError("density matrix must be square")
        _num_qubits(m.shape[0])
        if max_abs(m - m.conj().T) > HERMITIAN_TOL:
            raise StateError("density matrix is not Hermitian")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > NORM_TOL:
            raise StateError(f"density matrix trace is {tr}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.eigenvalues[-1] < -PSD_TOL:
            raise StateError(f"density matrix has eigenvalue {self.eigenvalues[-1]:.3e} < 0")

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eig(self) -> tuple[np.ndarray, np.ndarray]:
        return hermitian_eig(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Spectrum, descending."""
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eig[1]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self) -> str:
        return f"DensityOperator(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class MeasurementRecord:
    """Result of one projective measurement.

    ``outcome_index`` packs the measured bits with the first listed target as
    the most significant bit; ``bits`` gives them individually.
    """

    outcome_index: int
    probability: float
    post_state: PureState
    bits: tuple[int, ...] = field(default=())


# -- constructors ------------------------------------------------------------

def computational_basis_state(num_qubits: int, index: int) -> PureState:
    if num_qubits < 1:
        raise StateError("num_qubits must be positive")
    dim = 1 << num_qubits
    if not 0 <= index < dim:
        raise StateError(f"index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps)


def ket(bits: str) -> PureState:
    """``ket("01")`` is ``|01>``; also accepts ``"+"``, ``"-"``, ``"+i"``, ``"-i"`` for one qubit."""
    named = {
        "+": X_BASIS[:, 0],
        "-": X_BASIS[:, 1],
        "+i": Y_BASIS[:, 0],
        "-i": Y_BASIS[:, 1],
    }
    if bits in named:
        return PureState(named[bits])
    if not bits or set(bits) - {"0", "1"}:
        raise StateError(f"bad ket label {bits!r}")
    return computational_basis_state(len(bits), int(bits, 2))


BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
_BELL_ALIASES = {"Φ+": "phi+", "Φ-": "phi-", "Ψ+": "psi+", "Ψ-": "psi-", "Φ−": "phi-", "Ψ−": "psi-"}


def bell_state(which: str) -> PureState:
    """One of the four Bell states, named ``phi+``, ``phi-``, ``psi+``, ``psi-``."""
    label = _BELL_ALIASES.get(which, str(which).lower())
    r = 1 / np.sqrt(2)
    table = {
        "phi+": [r, 0, 0, r],
        "phi-": [r, 0, 0, -r],
        "psi+": [0, r, r, 0],
        "psi-": [0, r, -r, 0],
    }
    if label not in table:
        raise StateError(f"unknown Bell state {which!r}")
    return PureState(np.array(table[label], dtype=np.complex128))


def product_state(*states: PureState) -> PureState:
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
    return PureState(amps)


def bloch_state(theta: float, phi: float) -> PureState:
    """``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
    return PureState(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))


def random_state(num_qubits: int, rng: Rng) -> PureState:
    """Haar-random pure state from normalized complex Gaussians."""
    dim = 1 << num_qubits
    z = rng.normal(2 * dim)
    return PureState.normalized(z[:dim] + 1j * z[dim:])


def random_unitary(dim: int, rng: Rng) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the phase fix."""
    z = rng.normal(2 * dim * dim).reshape(2, dim, dim)
    q, r = np.linalg.qr((z[0] + 1j * z[1]) / np.sqrt(2))
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- evolution ---------------------------------------------------------------

def _check_targets(num_qubits: int, targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    if not targets:
        raise StateError("no target qubits given")
    if len(set(targets)) != len(targets):
        raise StateError(f"repeated target qubits {targets}")
    if min(targets) < 0 or max(targets) >= num_qubits:
        raise StateError(f"targets {targets} out of range for {num_qubits} qubits")
    return targets


def _apply_matrix(amps: np.ndarray, n: int, gate: np.ndarray, targets: list[int]) -> np.ndarray:
    k = len(targets)
    psi = np.moveaxis(amps.reshape((2,) * n), targets, range(k))
    psi = (gate @ psi.reshape(1 << k, -1)).reshape((2,) * n)
    return np.moveaxis(psi, range(k), targets).reshape(-1)


def apply_gate(state: PureState, gate, targets: Sequence[int]) -> PureState:
    """Apply a ``2**k x 2**k`` unitary to the ordered ``targets``.

    The first target is the most significant qubit of the gate's own index,
    so ``apply_gate(s, CNOT, [2, 0])`` uses qubit 2 as the control.
    """
    gate = as_matrix(gate, name="gate")
    targets = _check_targets(state.num_qubits, targets)
    if gate.shape != (1 << len(targets),) * 2:
        raise StateError(f"gate shape {gate.shape} does not act on {len(targets)} qubits")
    if not is_unitary(gate, UNITARY_TOL):
        raise StateError("gate is not unitary")
    out = _apply_matrix(state.amplitudes, state.num_qubits, gate, targets)
    # renormalize away rounding drift; unitarity already guarantees norm 1 to 1e-10
    return PureState(out / np.linalg.norm(out))


def probabilities(state: PureState, targets: Sequence[int]) -> np.ndarray:
    """Born probabilities of each outcome of measuring ``targets`` computationally."""
    n = state.num_qubits
    targets = _check_targets(n, targets)
    p = np.abs(state.amplitudes) ** 2
    p = np.moveaxis(p.reshape((2,) * n), targets, range(len(targets)))
    p = p.reshape(1 << len(targets), -1).sum(axis=1)
    # rounding residue on impossible outcomes must never be sampled
    p[p < BORN_FLOOR] = 0.0
    return p / p.sum()


def _draw(p: np.ndarray, u: float) -> int:
    k = int(np.searchsorted(np.cumsum(p), u, side="right"))
    k = min(k, p.size - 1)
    while p[k] == 0.0:  # never land on an impossible outcome through rounding
        k -= 1
    return k


def _project(state: PureState, targets: list[int], outcome: int) -> PureState:
    n = state.num_qubits
    k = len(targets)
    psi = np.moveaxis(state.amplitudes.reshape((2,) * n), targets, range(k)).reshape(1 << k, -1)
    keep = np.zeros_like(psi)
    keep[outcome] = psi[outcome]
    out = np.moveaxis(keep.reshape((2,) * n), range(k), targets).reshape(-1)
    return PureState.normalized(out)


def _bits(outcome: int, k: int) -> tuple[int, ...]:
    return tuple((outcome >> (k - 1 - i)) & 1 for i in range(k))


def measure_computational(state: PureState, targets: Sequence[int], rng: Rng) -> MeasurementRecord:
    """Projective measurement of ``targets`` in the computational basis.

    Draws exactly one uniform from ``rng``. The post-state is the renormalized
    projection, so measuring the same targets again repeats the outcome.
    """
    targets = _check_targets(state.num_qubits, targets)
    p = probabilities(state, targets)
    outcome = _draw(p, rng.random())
    post = _project(state, targets, outcome)
    return MeasurementRecord(outcome, float(p[outcome]), post, _bits(outcome, len(targets)))


def measure_in_basis(
    state: PureState, targets: Sequence[int], basis_unitary, rng: Rng
) -> MeasurementRecord:
    """Measure in the basis given by the columns of ``basis_unitary``.

    Equivalent to applying ``basis_unitary^dagger``, measuring computationally,
    then applying ``basis_unitary`` to the post-state.
    """
    u = as_matrix(basis_unitary, name="basis_unitary")
    rotated = apply_gate(state, u.conj().T, targets)
    rec = measure_computational(rotated, targets, rng)
    post = apply_gate(rec.post_state, u, targets)
    return MeasurementRecord(rec.outcome_index, rec.probability, post, rec.bits)


def sample_counts(
    state: PureState, targets: Sequence[int], shots: int, rng: Rng, basis_unitary=None
) -> np.ndarray:
    """Outcome counts from ``shots`` independent preparations of ``state``.

    Each shot measures a fresh copy, so this is the vectorized form of calling
    :func:`measure_in_basis` on ``shots`` identical states.
    """
    if shots < 1:
        raise StateError("shots must be positive")
    if basis_unitary is not None:
        state = apply_gate(state, as_matrix(basis_unitary).conj().T, targets)
    p = probabilities(state, targets)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.bincount(idx, minlength=p.size)


# -- conversions -------------------------------------------------------------

def to_density(state: PureState) -> DensityOperator:
    v = state.amplitudes
    return DensityOperator(np.outer(v, v.conj()))


def reduced_density(state, keep: Sequence[int]) -> DensityOperator:
    """Reduced state on qubits ``keep`` of a pure or mixed register."""
    m = np.outer(state.amplitudes, state.amplitudes.conj()) if isinstance(state, PureState) else state.matrix
    n = _num_qubits(m.shape[0])
    rho = partial_trace(m, [2] * n, keep)
    # enforce exact Hermiticity; partial trace of a Hermitian matrix is Hermitian up to rounding
    return DensityOperator(0.5 * (rho + rho.conj().T))


def purify(rho: DensityOperator) -> PureState:
    """Purification ``sum_i sqrt(l_i) |v_i> (x) |i>`` with an n-qubit ancilla on the right."""
    w, v = rho.eigenvalues, rho.eigenvectors
    w = np.clip(w, 0.0, None)
    dim = rho.dim
    amps = np.zeros(dim * dim, dtype=np.complex128)
    for i in range(dim):
        if w[i] > 0:
            amps += np.sqrt(w[i]) * np.kron(v[:, i], np.eye(dim)[i])
    return PureState.normalized(amps)


def swap_states(joint: PureState, subsystem_a: Sequence[int], subsystem_b: Sequence[int]) -> PureState:
    """Exchange the tensor factors of two equal-size, disjoint groups of qubits."""
    a = [int(q) for q in subsystem_a]
    b = [int(q) for q in subsystem_b]
    if len(a) != len(b):
        raise StateError("swapped subsystems must have equal qubit counts")
    _check_targets(joint.num_qubits, a + b)
    n = joint.num_qubits
    perm = list(range(n))
    for qa, qb in zip(a, b):
        perm[qa], perm[qb] = qb, qa
    psi = joint.amplitudes.reshape((2,) * n).transpose(perm)
    return PureState(psi.reshape(-1))


def fidelity(a, b) -> float:
    """Overlap fidelity. Pure-pure: ``|<a|b>|^2``; pure-mixed: ``<a|rho|a>``."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return float(abs(a.inner(b)) ** 2)
    if isinstance(a, DensityOperator):
        a, b = b, a
    if isinstance(a, PureState) and isinstance(b, DensityOperator):
        v = a.amplitudes
        return float(np.real(np.vdot(v, b.matrix @ v)))
    raise TypeError("fidelity needs at least one PureState")


# -- serialization -----------------------------------------------------------

def state_to_json(state: PureState) -> dict:
    return {
        "num_qubits": state.num_qubits,
        "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes],
    }


def state_from_json(obj: dict) -> PureState:
    try:
        arr = np.asarray(obj["amplitudes"], dtype=float)
        n = int(obj["num_qubits"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"bad state JSON: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise StateError("amplitudes must be a list of [re, im] pairs")
    state = PureState(arr[:, 0] + 1j * arr[:, 1])
    if state.num_qubits != n:
        raise StateError(f"num_qubits={n} but {arr.shape[0]} amplitudes given")
    return state


def density_to_json(rho: DensityOperator) -> dict:
    return {"num_qubits": rho.num_qubits, "matrix": matrix_to_json(rho.matrix)}


def density_from_json(obj) -> DensityOperator:
    """Accepts ``{num_qubits, matrix}``, a bare matrix array, or a pure-state object."""
    if isinstance(obj, dict) and "amplitudes" in obj:
        return to_density(state_from_json(obj))
    if isinstance(obj, dict):
        if "matrix" not in obj:
            raise StateError("density JSON needs a 'matrix' field")
        rho = DensityOperator(matrix_from_json(obj["matrix"]))
        if "num_qubits" in obj and int(obj["num_qubits"]) != rho.num_qubits:
            raise StateError("num_qubits does not match matrix size")
        return rho
    return DensityOperator(matrix_from_json(obj))


def load_state(path) -> PureState:
    with open(path) as fh:
        return state_from_json(json.load(fh))
