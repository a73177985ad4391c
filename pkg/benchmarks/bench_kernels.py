"""Timing comparison of the compiled kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [repeats]

Sizes mirror the desk-scale defaults (50 answers, 15-item sublists) plus a
larger setting closer to the real-vocabulary regime.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from rankdistill import backend


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def make_inputs(rng, n):
    student = rng.normal(size=n)
    teacher = rng.normal(size=n)
    margins = np.abs(rng.normal(size=(n, n)))
    np.fill_diagonal(margins, 0.0)
    target = np.abs(rng.normal(size=n)) + 0.01
    target /= target.sum()
    mask = (teacher[:, None] > teacher[None, :]).astype(np.uint8)
    kern = np.exp(-np.abs(rng.normal(size=(n, n))))
    kern = np.ascontiguousarray((kern + kern.T) / 2)
    np.fill_diagonal(kern, 0.0)
    return student, teacher, margins, target, mask, kern


def main() -> int:
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 200
    impls = backend.available_backends()
    if "compiled" not in impls:
        print("compiled extension not built; showing python fallback only")
    rng = np.random.default_rng(0)
    rows = []
    for n in (15, 50, 200):
        student, teacher, margins, target, mask, kern = make_inputs(rng, n)
        cases = {
            f"softmax_xent[{n}]": lambda k, s=student, t=target: k.softmax_xent(s, t),
            f"pairwise_hinge[{n}]": lambda k, s=student, t=teacher, m=margins: k.pairwise_hinge(s, t, m),
            f"listmle[{n}]": lambda k, s=student: k.listmle(s),
            f"lambda_pairs[{n}]": lambda k, s=student, w=margins, ms=mask: k.lambda_pair_logistic(s, w, ms, 1.0),
            f"sinkhorn[{n}]": lambda k, c=kern: k.sinkhorn_scaling(c, 1e-8, 10_000),
        }
        for name, call in cases.items():
            timings = {impl: time_call(lambda k=k: call(k), repeats=repeats) for impl, k in impls.items()}
            rows.append((name, timings))
    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{impl:>12}" for impl in impls)
    if len(impls) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    for name, timings in rows:
        line = f"{name:<{width}}  " + "  ".join(
            f"{timings[impl] * 1e6:>10.1f}us" for impl in impls
        )
        if len(impls) == 2:
            line += f"  {timings['python'] / timings['compiled']:>8.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
