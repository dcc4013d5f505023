"""Compare the compiled posterior kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--rows 4096] [--source 32] [--repeat 20]

Prints one line per (backend, pass) with the best wall time and the speedup
of the compiled kernel; also checks that both backends agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gmasimt import kernels


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4096)
    ap.add_argument("--source", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    N, J = args.rows, args.source
    scores = rng.normal(size=(N, J))
    p = rng.uniform(1.0, J, size=N)
    sigma = p / 2.0
    g = np.minimum(np.floor(p + 1.0).astype(np.int64), J)
    grad = rng.normal(size=(N, J))

    backends = kernels.available_backends()
    print(f"rows={N} source={J} backends={backends}")
    results = {}
    for name in backends:
        fwd = best_time(lambda: kernels.posterior_forward(scores, p, sigma, g, kernels.GAUSSIAN, name),
                        args.repeat)
        beta = kernels.posterior_forward(scores, p, sigma, g, kernels.GAUSSIAN, name)
        bwd = best_time(lambda: kernels.posterior_backward(beta, grad, p, sigma, g, kernels.GAUSSIAN,
                                                           name), args.repeat)
        results[name] = (fwd, bwd, beta)
        print(f"{name:9s} forward {fwd * 1e3:8.3f} ms   backward {bwd * 1e3:8.3f} ms")
    if "compiled" in results:
        py, cc = results["python"], results["compiled"]
        print(f"speedup   forward {py[0] / cc[0]:6.2f}x   backward {py[1] / cc[1]:6.2f}x")
        print(f"max |beta_python - beta_compiled| = {np.abs(py[2] - cc[2]).max():.2e}")


if __name__ == "__main__":
    main()
