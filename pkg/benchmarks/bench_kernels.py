"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from fcert import _pykernels, kernels
from fcert.oracle import candidate_values


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    d8 = np.sort(rng.uniform(0, 5, 8))
    cand = candidate_values(d8)
    stack = np.sort(rng.uniform(0, 1, (20000, 5, 15)) + rng.uniform(0, 2, (20000, 5, 1)), axis=2)
    pred = _pykernels.robust_scores(stack, 7).argmin(axis=1)
    return {
        "extrema K=8 T=3 (56k tuples)": lambda b: b.extrema(d8, 3, cand),
        "robust_scores 20000x5x15": lambda b: b.robust_scores(stack, 7),
        "certify_batch individual 20000x5x15": lambda b: b.certify_batch(stack, pred, 7, False),
        "certify_batch group 20000x5x15": lambda b: b.certify_batch(stack, pred, 7, True),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    names = sorted(backends)
    print(f"{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases(rng).items():
        times = {n: _time(lambda: fn(backends[n]), args.repeat) for n in names}
        line = f"{label:40s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        if len(names) > 1:
            line += f"{times['python'] / times['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
