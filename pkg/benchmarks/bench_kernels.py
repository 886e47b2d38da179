"""Compare the compiled RK4 kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Workloads mirror the satellite pipeline: a 12-state Riccati sweep over a
1000-step period and a 18-state closed-loop simulation over one orbit.
"""

import argparse
import time

import numpy as np

from perisat import _kernels_py

try:
    from perisat import _kernels
except ImportError:  # extension not built
    _kernels = None


def riccati_case(n=12, steps=1000, seed=0):
    rng = np.random.default_rng(seed)
    G0 = rng.standard_normal((n, n)) - 2.0 * n**0.5 * np.eye(n)
    s = np.linspace(0, 2 * np.pi, 2 * steps + 1)
    G = np.ascontiguousarray(G0[None] * (1 + 0.2 * np.cos(s))[:, None, None])
    B = rng.standard_normal((n, 2))
    Q = np.ascontiguousarray(np.broadcast_to(B @ B.T, (2 * steps + 1, n, n)))
    R = np.ascontiguousarray(np.broadcast_to(np.eye(n), (2 * steps + 1, n, n)))
    out = np.empty((steps + 1, n, n))
    return (G, Q, R, np.zeros((n, n)), 1e-3, 1, out)


def rk4_case(n=18, steps=10000, seed=1):
    rng = np.random.default_rng(seed)
    A0 = rng.standard_normal((n, n)) - 2.0 * n**0.5 * np.eye(n)
    s = np.linspace(0, 2 * np.pi, 2 * steps, endpoint=False)
    A = np.ascontiguousarray(A0[None] * (1 + 0.2 * np.sin(s))[:, None, None])
    f = np.ascontiguousarray(np.outer(np.cos(s), np.ones(n)))
    out = np.empty((steps + 1, n))
    return (A, f, np.ones(n), 1e-3, steps, out)


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = [("riccati_period", riccati_case()), ("linear_rk4", rk4_case())]
    print(f"{'kernel':<16}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max diff':>12}")
    for name, case in cases:
        py_args = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in case)
        t_py = best_time(getattr(_kernels_py, name), py_args, args.repeat)
        if _kernels is None:
            print(f"{name:<16}{t_py:>12.4f}{'n/a':>14}")
            continue
        c_args = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in case)
        t_c = best_time(getattr(_kernels, name), c_args, args.repeat)
        diff = np.max(np.abs(py_args[-1] - c_args[-1]))
        print(f"{name:<16}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
