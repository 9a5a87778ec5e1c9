"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, and the
speed-up of the compiled kernels where both are available.
"""
import argparse
import timeit

import numpy as np

from dscofs import SolverConfig, available_backends, center_columns, get_backend, run
from dscofs.core import beta_lower_bound


def cases(rng):
    W = rng.standard_normal((500, 10))
    A = center_columns(rng.standard_normal((200, 400))) / 20.0
    X = np.linalg.qr(rng.standard_normal((200, 5)))[0]
    beta = 1.05 * beta_lower_bound(A, SolverConfig(m=5)).beta_min
    rho = 1.5 * np.sqrt(5)
    P = rng.standard_normal((2000, 4))
    C = P[rng.choice(2000, 5, replace=False)]
    solve_A = center_columns(rng.standard_normal((60, 300))) / np.sqrt(300)
    solve_cfg = SolverConfig(m=3, r=10, alpha=0.5, rng_seed=0)
    return {
        "threshold_elements 500x10": lambda k: k.threshold_elements(W, 1000),
        "threshold_rows 500x10": lambda k: k.threshold_rows(W, 50),
        "penalty_descent 200x5 (100 it)": lambda k: k.penalty_descent(
            A, X, X, X, 1.0, 1.0, 0.5, beta, rho, 0.0, 100),
        "lloyd 2000x4, k=5": lambda k: k.lloyd(P, C.copy(), 300, 1e-6),
        "full solve 60x300": lambda name: run(solve_A, solve_cfg, backend=name),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        times = []
        for b in backends:
            arg = b if label.startswith("full") else get_backend(b)
            times.append(min(timeit.repeat(lambda: fn(arg), number=1, repeat=args.repeat)))
        row = f"{label:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[backends.index('python')] / times[backends.index('cython')]:12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
