"""Dense complex linear algebra kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; column vectors are
``(n, 1)`` or flat ``(n,)`` arrays. Every public routine validates its inputs
and never silently repairs them (a matrix that is not Hermitian within
``HERMITIAN_TOL`` is an error, not something to symmetrize).

The eigensolver and the SVD are cyclic Jacobi schemes. They are slower than
LAPACK but fully deterministic, and the systems handled here never exceed
6 qubits (64 x 64).
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
JACOBI_TOL = 1e-12
MAX_SWEEPS = 100


class LinalgError(ValueError):
    """Raised on malformed matrices or incompatible dimensions."""


def as_matrix(data, *, name: str = "matrix") -> np.ndarray:
    """Return ``data`` as a 2-D complex128 array, rejecting NaN/Inf."""
    m = np.array(data, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise LinalgError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError(f"{name} contains non-finite entries")
    return m


def dagger(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, name="a")
    b = as_matrix(b, name="b")
    if a.shape[1] != b.shape[0]:
        raise LinalgError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def tensor(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not factors:
        raise LinalgError("tensor needs at least one factor")
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, as_matrix(f))
    return out


def max_abs(m) -> float:
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and max_abs(m - m.conj().T) <= tol


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs(m.conj().T @ m - np.eye(m.shape[0])) <= tol


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    m : array_like
        Square matrix on the composite space ``dims[0] x dims[1] x ...``.
    dims : sequence of int
        Subsystem dimensions, leftmost tensor factor first.
    keep : iterable of int
        Indices of the subsystems to keep. The result orders them ascending.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    if m.shape[0] != m.shape[1]:
        raise LinalgError("partial_trace needs a square matrix")
    if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
        raise LinalgError(f"dims {dims} do not factor a {m.shape[0]}-dimensional space")
    if not keep:
        raise LinalgError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise LinalgError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    n = len(dims)
    t = m.reshape(dims + dims)
    # trace the highest axes first so lower axis numbers stay valid
    for ax in sorted(set(range(n)) - set(keep), reverse=True):
        nleft = t.ndim // 2
        t = np.trace(t, axis1=ax, axis2=ax + nleft)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


def partial_transpose(m, dims: Sequence[int], subsystem: int) -> np.ndarray:
    """Transpose the indices of one subsystem of a bipartite/multipartite operator."""
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise LinalgError(f"dims {dims} do not factor a {m.shape} matrix")
    if not 0 <= subsystem < len(dims):
        raise LinalgError(f"subsystem {subsystem} out of range")
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[subsystem], axes[subsystem + n] = axes[subsystem + n], axes[subsystem]
    return t.transpose(axes).reshape(m.shape)


def _jacobi_rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    """2x2 unitary J with J^H [[app, apq], [apq*, aqq]] J diagonal."""
    r = abs(apq)
    phase = apq / r
    theta = (aqq - app) / (2.0 * r)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.hypot(theta, 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) makes the pair real-symmetric, then a real rotation
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128)


def _sort_desc(values: np.ndarray) -> np.ndarray:
    # stable, so exact ties keep their original index order
    return np.argsort(-values, kind="stable")


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns
    -------
    eigenvalues : ndarray of float
        Sorted descending.
    eigenvectors : ndarray
        Unitary matrix whose columns match ``eigenvalues``, so that
        ``m == V @ diag(eigenvalues) @ V.conj().T``.

    Raises
    ------
    LinalgError
        If ``m`` is not square or not Hermitian within ``tol``.
    """
    a = as_matrix(m).copy()
    n = a.shape[0]
    if a.shape[1] != n:
        raise LinalgError("hermitian_eig needs a square matrix")
    if max_abs(a - a.conj().T) > tol:
        raise LinalgError("matrix is not Hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(MAX_SWEEPS):
        if np.linalg.norm(a[offdiag]) <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                j = _jacobi_rotation(a[p, p].real, a[q, q].real, apq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ j

    w = np.real(np.diag(a))
    order = _sort_desc(w)
    return w[order], v[:, order]


def _complete_orthonormal(u: np.ndarray, filled: int) -> np.ndarray:
    """Fill columns ``filled:`` of ``u`` with an orthonormal completion."""
    rows, cols = u.shape
    k = filled
    for e in range(rows):
        if k == cols:
            break
        vec = np.zeros(rows, dtype=np.complex128)
        vec[e] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            vec -= u[:, :k] @ (u[:, :k].conj().T @ vec)
        nrm = np.linalg.norm(vec)
        if nrm > 1e-8:
            u[:, k] = vec / nrm
            k += 1
    return u


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin singular value decomposition by one-sided (Hestenes) Jacobi.

    Returns ``(u, s, v)`` with ``m == u @ diag(s) @ v.conj().T``. For an
    ``r x c`` input, ``k = min(r, c)``; ``u`` is ``r x k`` and ``v`` is
    ``c x k``, both with orthonormal columns, and ``s`` is non-negative and
    sorted descending.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if rows < cols:
        u, s, v = svd(a.conj().T)
        return v, s, u

    work = a.copy()
    v = np.eye(cols, dtype=np.complex128)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = float(np.vdot(work[:, p], work[:, p]).real)
                beta = float(np.vdot(work[:, q], work[:, q]).real)
                gamma = np.vdot(work[:, p], work[:, q])
                if abs(gamma) <= JACOBI_TOL * np.sqrt(alpha * beta) or abs(gamma) <= 1e-300:
                    continue
                rotated = True
                j = _jacobi_rotation(alpha, beta, gamma)
                idx = [p, q]
                work[:, idx] = work[:, idx] @ j
                v[:, idx] = v[:, idx] @ j
        if not rotated:
            break

    s = np.linalg.norm(work, axis=0)
    order = _sort_desc(s)
    s = s[order]
    work = work[:, order]
    v = v[:, order]
    u = np.zeros((rows, cols), dtype=np.complex128)
    cutoff = max(1.0, float(s[0])) * 1e-13
    filled = 0
    for i in range(cols):
        if s[i] > cutoff:
            u[:, i] = work[:, i] / s[i]
            filled = i + 1
        else:
            break
    s[filled:] = 0.0
    u = _complete_orthonormal(u, filled)
    return u, s, v


def matrix_from_json(obj) -> np.ndarray:
    """Decode the ``[[[re, im], ...], ...]`` array-of-arrays matrix format."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise LinalgError(f"bad matrix JSON: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise LinalgError(f"matrix JSON must be rows x cols x [re, im], got shape {arr.shape}")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])


def matrix_to_json(m) -> list:
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))
