"""Dense real symmetric linear algebra for small problems.

The eigensolver is cyclic Jacobi: on the n <= ~100 matrices this package
works with it is simpler than QR and accurate to a few ulps per eigenpair.
Generalized (pencil) problems A^{-1} B with A positive definite are reduced
by Cholesky congruence L^{-1} B L^{-T} so symmetry is never lost to an
explicit inverse.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoConvergence, NotPositiveDefinite, NotSymmetric

SYMMETRY_RTOL = 1e-10
OFFDIAG_RTOL = 1e-12
MAX_SWEEPS = 100
PIVOT_RTOL = 1e-14
DEGENERATE_RTOL = 1e-12
NORMALIZED_ATOL = 1e-12


def as_vector(x, min_dim: int = 2) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < min_dim:
        raise ValueError(f"expected a vector of dimension >= {min_dim}, got shape {v.shape}")
    return v


def as_normalized(x) -> np.ndarray:
    v = as_vector(x)
    if abs(np.linalg.norm(v) - 1.0) > NORMALIZED_ATOL:
        raise ValueError("vector is not normalized to 1e-12")
    return v


def as_square(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_symmetric(a, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    m = as_square(a)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T)) > rtol * scale:
        raise NotSymmetric(f"asymmetry exceeds {rtol:g} * max|A_ij|")
    return m


def asymmetry(a) -> float:
    """max|A - A^T| relative to max|A| (0 for the zero matrix)."""
    m = as_square(a)
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.T))) / scale


@dataclass(frozen=True)
class EigenDecomposition:
    """Descending eigenpairs of a symmetric matrix; eigenvectors are columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


@dataclass(frozen=True)
class DominantPair:
    """Largest-eigenvalue pair of a pencil, with the gap to the runner-up."""

    value: float
    vector: np.ndarray
    gap: float
    degenerate: bool


def sym_eig(a, *, sym_rtol: float = SYMMETRY_RTOL, offdiag_rtol: float = OFFDIAG_RTOL,
            max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Sweeps run until the off-diagonal Frobenius norm falls below
    ``offdiag_rtol * ||A||_F`` (the Frobenius norm is rotation invariant, so
    it is measured once). Raises NotSymmetric / NoConvergence.
    """
    m = check_symmetric(a, sym_rtol)
    work = 0.5 * (m + m.T)
    n = work.shape[0]
    basis = np.eye(n)
    threshold = offdiag_rtol * float(np.linalg.norm(work, "fro"))
    sweeps = _kernels.jacobi_sweeps(work, basis, threshold, max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"off-diagonal norm above target after {max_sweeps} sweeps")
    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    basis = basis[:, order]
    basis /= np.linalg.norm(basis, axis=0)
    return EigenDecomposition(values, basis, int(sweeps))


def cholesky(a, *, sym_rtol: float = SYMMETRY_RTOL, pivot_rtol: float = PIVOT_RTOL) -> np.ndarray:
    """Lower-triangular L with A = L L^T for symmetric positive definite A."""
    m = check_symmetric(a, sym_rtol)
    n = m.shape[0]
    floor = pivot_rtol * float(np.trace(m)) / n
    lower, bad = _kernels.cholesky(m, floor)
    if bad >= 0:
        raise NotPositiveDefinite(f"pivot {bad} at or below {floor:.3e}")
    return lower


def spd_solve(a, rhs, *, sym_rtol: float = SYMMETRY_RTOL, pivot_rtol: float = PIVOT_RTOL):
    """Solve A x = rhs for symmetric positive definite A (vector or matrix rhs)."""
    lower = cholesky(a, sym_rtol=sym_rtol, pivot_rtol=pivot_rtol)
    b = np.asarray(rhs, dtype=np.float64)
    if b.ndim == 1:
        return _kernels.solve_lower_t(lower, _kernels.solve_lower(lower, b))
    return _kernels.cholesky_solve_mat(lower, b)


def complete_orthonormal_basis(v1) -> np.ndarray:
    """Orthonormal basis whose first column is ``v1``.

    Gram-Schmidt over the standard basis, skipping the standard vector with
    the largest |component along v1| (lowest index on ties). One
    re-orthogonalization pass keeps V^T V = I to ~1e-15.
    """
    v = as_normalized(v1)
    n = v.size
    skip = int(np.argmax(np.abs(v)))
    cols = [v]
    for j in range(n):
        if j == skip:
            continue
        w = np.zeros(n)
        w[j] = 1.0
        for _ in range(2):
            for c in cols:
                w -= np.dot(c, w) * c
        norm = np.linalg.norm(w)
        cols.append(w / norm)
    return np.column_stack(cols)


def fix_sign(v) -> np.ndarray:
    """Flip so the largest-magnitude entry is positive (lowest index on ties).

    Idempotent; vectors are only determined up to sign by an eigensolver and
    this pins one representative so traces compare across runs.
    """
    w = np.asarray(v, dtype=np.float64)
    lead = int(np.argmax(np.abs(w)))
    if w[lead] < 0.0:
        return -w
    return w.copy()


def pencil_eig(a, b, *, sym_rtol: float = SYMMETRY_RTOL, pivot_rtol: float = PIVOT_RTOL,
               offdiag_rtol: float = OFFDIAG_RTOL, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """All eigenpairs of A^{-1} B for A positive definite, B symmetric.

    Reduction: L = chol(A), symmetric eigensolve of C = L^{-1} B L^{-T}, then
    back-substitution w = L^{-T} u and normalization. Eigenvalues descend.
    """
    lower = cholesky(a, sym_rtol=sym_rtol, pivot_rtol=pivot_rtol)
    bm = check_symmetric(b, sym_rtol)
    reduced = _kernels.congruence_reduce(lower, bm)
    inner = sym_eig(reduced, sym_rtol=1e-8, offdiag_rtol=offdiag_rtol, max_sweeps=max_sweeps)
    n = lower.shape[0]
    vectors = np.empty((n, n))
    for k in range(n):
        w = _kernels.solve_lower_t(lower, inner.eigenvectors[:, k])
        vectors[:, k] = w / np.linalg.norm(w)
    return EigenDecomposition(inner.eigenvalues, vectors, inner.sweeps)


def dominant_pencil_eigvec(a, b, *, degenerate_rtol: float = DEGENERATE_RTOL,
                           **tol_kwargs) -> DominantPair:
    """Largest eigenpair of A^{-1} B, sign-fixed.

    A gap at or below ``degenerate_rtol * |lambda_1|`` is reported via the
    ``degenerate`` flag rather than raised: the returned vector is then an
    arbitrary member of the dominant eigenspace.
    """
    eig = pencil_eig(a, b, **tol_kwargs)
    value = float(eig.eigenvalues[0])
    gap = float(eig.eigenvalues[0] - eig.eigenvalues[1])
    vector = fix_sign(eig.eigenvectors[:, 0])
    return DominantPair(value, vector, gap, gap <= degenerate_rtol * abs(value))


def sign_invariant_distance(u, v) -> float:
    """min(||u - v||, ||u + v||); the natural metric for direction estimates."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def sign_invariant_angle(u, v) -> float:
    """Angle in radians between the lines spanned by u and v."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        raise ValueError("angle undefined for zero vector")
    c = abs(float(np.dot(a, b))) / denom
    return float(np.arccos(min(1.0, c)))
