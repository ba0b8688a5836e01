"""Entropies, Holevo quantities, Schmidt decomposition and separability tests.

All entropies are in bits (log base 2). A pure bipartite state's entanglement
is the von Neumann entropy of either reduced state, measured in ebits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import max_abs, partial_transpose, hermitian_eig, svd
from .qstate import (
    DensityOperator,
    PureState,
    StateError,
    density_from_json,
    density_to_json,
    reduced_density,
    to_density,
)

PROB_TOL = 1e-10
EIG_CLAMP = 1e-9
SCHMIDT_TOL = 1e-9
PPT_TOL = 1e-9
CLONE_TOL = 1e-9
COMMUTE_TOL = 1e-9


class InfoError(ValueError):
    pass


def _plogp(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(probabilities: Sequence[float]) -> float:
    """``H = -sum p log2 p`` with ``0 log 0 = 0``."""
    p = np.asarray(probabilities, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InfoError(f"not a probability distribution: {p}")
    return _plogp(p)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise InfoError(f"binary entropy needs p in [0, 1], got {p}")
    return _plogp(np.array([p, 1.0 - p]))


def _clamped_spectrum(rho: DensityOperator) -> np.ndarray:
    w = rho.eigenvalues.copy()
    if w[-1] < -EIG_CLAMP:
        raise InfoError(f"corrupt state: eigenvalue {w[-1]:.3e}")
    w[w < 0] = 0.0
    return w


def von_neumann_entropy(rho: DensityOperator) -> float:
    """``S(rho) = -Tr rho log2 rho`` from the spectrum.

    Eigenvalues in ``[-1e-9, 0)`` are treated as rounding and clamped to 0;
    anything more negative is reported as a corrupt state.
    """
    return _plogp(_clamped_spectrum(rho))


# -- bipartitions ------------------------------------------------------------

def _split(state: PureState, cut) -> tuple[list[int], list[int]]:
    """Normalize a cut into (side A, side B) qubit lists.

    ``cut`` is either an int ``k`` (first k qubits vs the rest) or an explicit
    iterable of the qubits forming side A.
    """
    n = state.num_qubits
    side_a = list(range(int(cut))) if np.isscalar(cut) else sorted({int(q) for q in cut})
    side_b = [q for q in range(n) if q not in side_a]
    if not side_a or not side_b or min(side_a) < 0 or max(side_a) >= n:
        raise InfoError(f"cut {cut!r} is not a nontrivial bipartition of {n} qubits")
    return side_a, side_b


def _coefficient_matrix(state: PureState, side_a: list[int], side_b: list[int]) -> np.ndarray:
    n = state.num_qubits
    psi = state.amplitudes.reshape((2,) * n).transpose(side_a + side_b)
    return psi.reshape(1 << len(side_a), 1 << len(side_b))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``|psi> = sum_i c_i |a_i>|b_i>`` with ``c`` descending.

    ``basis_a`` and ``basis_b`` hold the vectors as columns. Only coefficients
    above the cutoff are kept, so ``rank == len(coefficients)``.
    """

    coefficients: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    @property
    def rank(self) -> int:
        return int(self.coefficients.size)

    def reconstruct(self) -> PureState:
        """Rebuild the state in the original qubit order."""
        m = (self.basis_a * self.coefficients) @ self.basis_b.T
        n = len(self.side_a) + len(self.side_b)
        order = list(self.side_a) + list(self.side_b)
        psi = m.reshape((2,) * n).transpose(np.argsort(order))
        return PureState.normalized(psi.reshape(-1))


def schmidt_decompose(state: PureState, cut) -> SchmidtDecomposition:
    """SVD of the amplitude matrix reshaped across the cut.

    Coefficients at or below ``1e-9`` times the largest are dropped; the
    number kept is the Schmidt rank.
    """
    side_a, side_b = _split(state, cut)
    u, s, v = svd(_coefficient_matrix(state, side_a, side_b))
    keep = s > SCHMIDT_TOL * s[0]
    # |b_i> = conj(v_i) because m = U S V^dagger
    return SchmidtDecomposition(
        coefficients=s[keep],
        basis_a=u[:, keep],
        basis_b=v[:, keep].conj(),
        side_a=tuple(side_a),
        side_b=tuple(side_b),
    )


def schmidt_rank(state: PureState, cut) -> int:
    return schmidt_decompose(state, cut).rank


def is_entangled_pure(state: PureState, cut) -> bool:
    return schmidt_rank(state, cut) >= 2


def entanglement_entropy(state: PureState, cut) -> float:
    """Entropy of the reduced state on side A of the cut, in ebits."""
    side_a, _ = _split(state, cut)
    return von_neumann_entropy(reduced_density(state, side_a))


def ppt_check(rho: DensityOperator) -> tuple[bool, float]:
    """Peres-Horodecki test for two qubits.

    Transposes the second qubit and returns ``(is_separable, min_eigenvalue)``.
    For 2x2 systems a positive partial transpose is necessary and sufficient
    for separability.
    """
    if rho.num_qubits != 2:
        raise InfoError("ppt_check is exact only for two qubits")
    return _ppt(rho.matrix, [2, 2])


def ppt_status(rho: DensityOperator, side_a) -> tuple[str, float]:
    """``"PPT"`` or ``"NPT"`` across an arbitrary qubit cut.

    Beyond 2x2 and 2x3 a positive partial transpose does not certify
    separability, so no "separable" verdict is offered here.
    """
    n = rho.num_qubits
    a = sorted({int(q) for q in side_a})
    b = [q for q in range(n) if q not in a]
    if not a or not b:
        raise InfoError("trivial cut")
    # regroup qubits as (A, B) before transposing B
    order = a + b
    t = rho.matrix.reshape((2,) * (2 * n)).transpose(order + [q + n for q in order])
    ok, lo = _ppt(t.reshape(rho.dim, rho.dim), [1 << len(a), 1 << len(b)])
    return ("PPT" if ok else "NPT"), lo


def _ppt(m: np.ndarray, dims: list[int]) -> tuple[bool, float]:
    pt = partial_transpose(m, dims, 1)
    w, _ = hermitian_eig(0.5 * (pt + pt.conj().T))
    lo = float(w[-1])
    return lo >= -PPT_TOL, lo


# -- ensembles and accessible information -------------------------------------

@dataclass(frozen=True, eq=False)
class Ensemble:
    """A source emitting ``states[i]`` with probability ``probabilities[i]``."""

    states: tuple[DensityOperator, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        states = tuple(to_density(s) if isinstance(s, PureState) else s for s in self.states)
        p = np.asarray(self.probabilities, dtype=float).ravel()
        if not states or len(states) != p.size:
            raise InfoError("need one probability per state")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise InfoError(f"probabilities must be positive and sum to 1: {p}")
        if len({s.num_qubits for s in states}) != 1:
            raise InfoError("ensemble states must share num_qubits")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probabilities", p)

    def average_state(self) -> DensityOperator:
        m = sum(p * s.matrix for p, s in zip(self.probabilities, self.states))
        return DensityOperator(0.5 * (m + m.conj().T))


def holevo_chi(ensemble: Ensemble) -> float:
    """``chi = S(sum p_i rho_i) - sum p_i S(rho_i)``."""
    chi = von_neumann_entropy(ensemble.average_state()) - sum(
        p * von_neumann_entropy(s) for p, s in zip(ensemble.probabilities, ensemble.states)
    )
    return max(chi, 0.0) if chi > -1e-9 else chi


def max_accessible_info(dimension: int) -> float:
    """log2 of the number of perfectly distinguishable states in ``dimension``."""
    if dimension < 1:
        raise InfoError("dimension must be at least 1")
    return float(np.log2(dimension))


def mutual_information(joint) -> float:
    """``I(A;B)`` in bits from a joint count or probability table ``joint[a, b]``."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2 or np.any(j < 0) or j.sum() <= 0:
        raise InfoError("joint table must be a nonnegative 2-D array with positive total")
    j = j / j.sum()
    return _plogp(j.sum(axis=1)) + _plogp(j.sum(axis=0)) - _plogp(j.ravel())


def ensemble_from_json(obj: dict) -> Ensemble:
    try:
        probs = obj["probabilities"]
        states = [density_from_json(s) for s in obj["states"]]
    except (KeyError, TypeError) as exc:
        raise InfoError(f"bad ensemble JSON: {exc}") from None
    return Ensemble(tuple(states), np.asarray(probs, dtype=float))


def ensemble_to_json(ensemble: Ensemble) -> dict:
    return {
        "probabilities": [float(p) for p in ensemble.probabilities],
        "states": [density_to_json(s) for s in ensemble.states],
    }


def load_ensemble(path) -> Ensemble:
    with open(path) as fh:
        return ensemble_from_json(json.load(fh))


# -- no-cloning / no-broadcasting ---------------------------------------------

def cloning_consistency(alpha: PureState, beta: PureState) -> tuple[complex, bool]:
    """Overlap ``<alpha|beta>`` and whether one unitary could clone both.

    A cloner preserves inner products, forcing ``<a|b> = <a|b>**2``; that
    holds only when the overlap modulus is 0 or 1.
    """
    if alpha.dim != beta.dim:
        raise StateError("states must have equal dimension")
    ov = alpha.inner(beta)
    r = abs(ov)
    return ov, bool(r <= CLONE_TOL or abs(r - 1.0) <= CLONE_TOL)


def broadcastable(rho_a: DensityOperator, rho_b: DensityOperator) -> bool:
    """Two states admit a common broadcasting map iff they commute."""
    if rho_a.dim != rho_b.dim:
        raise StateError("states must have equal dimension")
    a, b = rho_a.matrix, rho_b.matrix
    return max_abs(a @ b - b @ a) <= COMMUTE_TOL
