"""Compiled vs numpy kernels on resampling-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on identical inputs through both paths; the first numba call
(compilation or cache load) is excluded from timing. Outputs are checked for
equality before anything is reported.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import timeit

import numpy as np

from feedback_mediator import kernels
from feedback_mediator._accel import NUMBA_AVAILABLE


def cases(rng: np.random.Generator):
    # exposure-AUC shape: 2 vs 31 learners, 2000 bootstrap replicates
    a = rng.random(2)
    b = rng.random(31)
    yield "bootstrap_auc 2x31, 2000 reps", "bootstrap_auc", (
        a, b, rng.integers(0, 2, (2000, 2)), rng.integers(0, 31, (2000, 31)))
    a = rng.random(40)
    b = rng.random(200)
    yield "bootstrap_auc 40x200, 2000 reps", "bootstrap_auc", (
        a, b, rng.integers(0, 40, (2000, 40)), rng.integers(0, 200, (2000, 200)))
    pooled = rng.random(279)
    idx = np.argsort(rng.random((8192, 279)), axis=1)[:, :25]
    yield "row_take_sum 8192 perms, n=279 k=25", "row_take_sum", (pooled, np.ascontiguousarray(idx), 25)
    x = rng.random(19)
    x -= x.mean()
    perms = np.argsort(rng.random((8192, 19)), axis=1)
    yield "row_paired_dot 8192 perms, n=19", "row_paired_dot", (x, rng.random(19), perms)
    yield "auc_u 2000x2000", "auc_u", (rng.random(2000), rng.random(2000))


def best_of(fn, args, repeat: int) -> float:
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2 and number < 10_000:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results as JSON")
    args = ap.parse_args()
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    results = []
    print(f"python {platform.python_version()}, numpy {np.__version__}")
    print(f"{'case':<40} {'numba':>11} {'numpy':>11} {'speedup':>8}")
    for label, name, inputs in cases(rng):
        fast, slow = kernels.NUMBA_KERNELS[name], kernels.NUMPY_KERNELS[name]
        out_fast, out_slow = fast(*inputs), slow(*inputs)  # compile, and check agreement
        if not np.allclose(out_fast, out_slow, rtol=0, atol=1e-9):
            raise SystemExit(f"{label}: numba and numpy outputs differ")
        t_fast = best_of(fast, inputs, args.repeat)
        t_slow = best_of(slow, inputs, args.repeat)
        results.append({"case": label, "numba_s": t_fast, "numpy_s": t_slow, "speedup": t_slow / t_fast})
        print(f"{label:<40} {t_fast * 1e3:>9.3f}ms {t_slow * 1e3:>9.3f}ms {t_slow / t_fast:>7.1f}x")
    geo = math.exp(sum(math.log(r["speedup"]) for r in results) / len(results))
    print(f"geometric-mean speedup {geo:.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"results": results, "geomean_speedup": geo}, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
