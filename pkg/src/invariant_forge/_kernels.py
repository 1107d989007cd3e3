"""Loop-heavy numeric kernels with a numba fast path.

Every kernel below is written as a plain Python function over numpy arrays.
When numba is importable, an ``@njit``-compiled twin is created for each; the
active set is chosen once at import time by ``INVARIANT_FORGE_BACKEND``
(``numba`` or ``numpy``, default: numba when available). Both variants stay
addressable (``*_py`` / ``*_jit``) so benchmarks/bench_backends.py can compare
them in a single process.
"""

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

_ENV_BACKEND = os.environ.get("INVARIANT_FORGE_BACKEND", "").strip().lower()
if _ENV_BACKEND not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"INVARIANT_FORGE_BACKEND must be 'numba' or 'numpy', got {_ENV_BACKEND!r}"
    )
if _ENV_BACKEND == "numba" and not HAVE_NUMBA:
    raise RuntimeError("INVARIANT_FORGE_BACKEND=numba but numba is not importable")

USE_NUMBA = HAVE_NUMBA and _ENV_BACKEND != "numpy"


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def jacobi_sweeps_py(a, v, threshold, max_sweeps):
    """Cyclic Jacobi rotations on symmetric ``a`` (in place).

    ``v`` accumulates the rotations (columns become eigenvectors). Returns the
    number of sweeps used, or -1 if the off-diagonal Frobenius norm is still
    above ``threshold`` after ``max_sweeps`` sweeps.
    """
    n = a.shape[0]
    sweeps = 0
    while True:
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        off = math.sqrt(off)
        if off <= threshold:
            return sweeps
        if sweeps >= max_sweeps:
            return -1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                # rotation would be lost in roundoff: just zero the entry
                if abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[p, i] = a[i, p]
                        a[i, q] = s * aip + c * aiq
                        a[q, i] = a[i, q]
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
        sweeps += 1


def cholesky_py(a, pivot_floor):
    """Lower Cholesky factor of ``a``. Returns (L, index of bad pivot or -1)."""
    n = a.shape[0]
    lower = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            acc = a[i, j]
            for k in range(j):
                acc -= lower[i, k] * lower[j, k]
            if i == j:
                if acc <= pivot_floor or acc <= 0.0 or acc != acc:
                    return lower, i
                lower[i, i] = math.sqrt(acc)
            else:
                lower[i, j] = acc / lower[j, j]
    return lower, -1


def congruence_reduce_py(lower, b):
    """C = L^{-1} B L^{-T}, symmetrized. ``lower`` must be the Cholesky factor."""
    n = lower.shape[0]
    y = np.empty((n, n))
    for j in range(n):
        for i in range(n):
            acc = b[i, j]
            for k in range(i):
                acc -= lower[i, k] * y[k, j]
            y[i, j] = acc / lower[i, i]
    c = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            acc = y[i, j]
            for k in range(j):
                acc -= lower[j, k] * c[i, k]
            c[i, j] = acc / lower[j, j]
    for i in range(n):
        for j in range(i + 1, n):
            m = 0.5 * (c[i, j] + c[j, i])
            c[i, j] = m
            c[j, i] = m
    return c


def solve_lower_py(lower, rhs):
    """Solve L y = rhs."""
    n = lower.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = rhs[i]
        for k in range(i):
            acc -= lower[i, k] * y[k]
        y[i] = acc / lower[i, i]
    return y


def solve_lower_t_py(lower, rhs):
    """Solve L^T x = rhs."""
    n = lower.shape[0]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        for k in range(i + 1, n):
            acc -= lower[k, i] * x[k]
        x[i] = acc / lower[i, i]
    return x


def cholesky_solve_mat_py(lower, b):
    """Solve (L L^T) X = B column by column."""
    n = lower.shape[0]
    m = b.shape[1]
    x = np.empty((n, m))
    for j in range(m):
        for i in range(n):
            acc = b[i, j]
            for k in range(i):
                acc -= lower[i, k] * x[k, j]
            x[i, j] = acc / lower[i, i]
        for i in range(n - 1, -1, -1):
            acc = x[i, j]
            for k in range(i + 1, n):
                acc -= lower[k, i] * x[k, j]
            x[i, j] = acc / lower[i, i]
    return x


def ring_deriv_py(rates, x):
    """Flow balance on the ring: in from site i-1 minus out to site i+1."""
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        out[i] = rates[im] * x[im] * (1.0 - x[i]) - rates[i] * x[i] * (1.0 - x[ip])
    return out


def rk4_ring_py(rates, x0, dt, steps, substeps, lo, hi):
    """Classical RK4 on the ring ODE, ``substeps`` internal steps per ``dt``.

    Returns (states, bad_step) where states[k] = x(k*dt) and bad_step is the
    index of the first recording interval in which a component left
    [lo, hi] (-1 when none did).
    """
    n = x0.shape[0]
    states = np.empty((steps + 1, n))
    states[0, :] = x0
    x = x0.copy()
    xt = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    h = dt / substeps
    for step in range(steps):
        for _ in range(substeps):
            for i in range(n):
                im = i - 1 if i > 0 else n - 1
                ip = i + 1 if i < n - 1 else 0
                k1[i] = rates[im] * x[im] * (1.0 - x[i]) - rates[i] * x[i] * (1.0 - x[ip])
            for i in range(n):
                xt[i] = x[i] + 0.5 * h * k1[i]
            for i in range(n):
                im = i - 1 if i > 0 else n - 1
                ip = i + 1 if i < n - 1 else 0
                k2[i] = rates[im] * xt[im] * (1.0 - xt[i]) - rates[i] * xt[i] * (1.0 - xt[ip])
            for i in range(n):
                xt[i] = x[i] + 0.5 * h * k2[i]
            for i in range(n):
                im = i - 1 if i > 0 else n - 1
                ip = i + 1 if i < n - 1 else 0
                k3[i] = rates[im] * xt[im] * (1.0 - xt[i]) - rates[i] * xt[i] * (1.0 - xt[ip])
            for i in range(n):
                xt[i] = x[i] + h * k3[i]
            for i in range(n):
                im = i - 1 if i > 0 else n - 1
                ip = i + 1 if i < n - 1 else 0
                k4[i] = rates[im] * xt[im] * (1.0 - xt[i]) - rates[i] * xt[i] * (1.0 - xt[ip])
            for i in range(n):
                x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(n):
                if not (lo <= x[i] <= hi):
                    states[step + 1, :] = x
                    return states, step
        states[step + 1, :] = x
    return states, -1


if HAVE_NUMBA:
    _jit = numba.njit(cache=True)
    jacobi_sweeps_jit = _jit(jacobi_sweeps_py)
    cholesky_jit = _jit(cholesky_py)
    congruence_reduce_jit = _jit(congruence_reduce_py)
    solve_lower_jit = _jit(solve_lower_py)
    solve_lower_t_jit = _jit(solve_lower_t_py)
    cholesky_solve_mat_jit = _jit(cholesky_solve_mat_py)
    ring_deriv_jit = _jit(ring_deriv_py)
    rk4_ring_jit = _jit(rk4_ring_py)

if USE_NUMBA:
    jacobi_sweeps = jacobi_sweeps_jit
    cholesky = cholesky_jit
    congruence_reduce = congruence_reduce_jit
    solve_lower = solve_lower_jit
    solve_lower_t = solve_lower_t_jit
    cholesky_solve_mat = cholesky_solve_mat_jit
    ring_deriv = ring_deriv_jit
    rk4_ring = rk4_ring_jit
else:
    jacobi_sweeps = jacobi_sweeps_py
    cholesky = cholesky_py
    congruence_reduce = congruence_reduce_py
    solve_lower = solve_lower_py
    solve_lower_t = solve_lower_t_py
    cholesky_solve_mat = cholesky_solve_mat_py
    ring_deriv = ring_deriv_py
    rk4_ring = rk4_ring_py
