"""Compare the numba and pure-Python kernel paths in one process.

Usage: python benchmarks/bench_backends.py [--repeat N]

Both variants of every kernel stay importable regardless of the
INVARIANT_FORGE_BACKEND setting, so this script times them side by side.
"""

import argparse
import time

import numpy as np

from invariant_forge import _kernels


def _time(fn, *args, repeat: int) -> float:
    def fresh():
        # some kernels mutate their array arguments; every call gets copies
        return tuple(a.copy() if isinstance(a, np.ndarray) else a for a in args)

    fn(*fresh())  # warm up (and trigger JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        args_copy = fresh()
        start = time.perf_counter()
        fn(*args_copy)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)

    cases = []

    a = rng.standard_normal((40, 40))
    a = 0.5 * (a + a.T)
    v = np.eye(40)
    threshold = 1e-12 * np.linalg.norm(a, "fro")
    cases.append((
        "jacobi eigensolve 40x40",
        _kernels.jacobi_sweeps_py,
        _kernels.jacobi_sweeps_jit,
        (a, v, threshold, 100),
    ))

    spd = a @ a.T + 40.0 * np.eye(40)
    cases.append((
        "cholesky 40x40",
        _kernels.cholesky_py,
        _kernels.cholesky_jit,
        (spd, 1e-14 * np.trace(spd) / 40),
    ))

    lower, _ = _kernels.cholesky_py(spd, 0.0)
    b = rng.standard_normal((40, 40))
    b = 0.5 * (b + b.T)
    cases.append((
        "pencil congruence 40x40",
        _kernels.congruence_reduce_py,
        _kernels.congruence_reduce_jit,
        (lower, b),
    ))

    rates = np.array([2.0, 5.0, 5.0, 0.0, 1.0])
    x0 = np.array([0.71, 0.9, 0.28, 0.8, 0.76])
    cases.append((
        "rk4 ring 2000x50 substeps",
        _kernels.rk4_ring_py,
        _kernels.rk4_ring_jit,
        (rates, x0, 1e-3, 2000, 50, -1e-6, 1.0 + 1e-6),
    ))

    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for name, py_fn, jit_fn, call_args in cases:
        t_py = _time(py_fn, *call_args, repeat=args.repeat)
        t_jit = _time(jit_fn, *call_args, repeat=args.repeat)
        print(f"{name:<28}{t_py * 1e3:>10.2f}ms{t_jit * 1e3:>10.2f}ms{t_py / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
