"""Slow, loop-based reference implementations used only by the tests.

Nothing here imports the package's statistics code; each function is written
from the textbook definition so that agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def ranks_by_counting(xs):
    # rank = (#strictly smaller) + (#equal + 1) / 2
    return [sum(1 for y in xs if y < x) + (sum(1 for y in xs if y == x) + 1) / 2 for x in xs]


def pearson(xs, ys):
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    return sxy / math.sqrt(sxx * syy)


def spearman(xs, ys):
    return pearson(ranks_by_counting(xs), ranks_by_counting(ys))


def cohens_d(a, b):
    ma, mb = math.fsum(a) / len(a), math.fsum(b) / len(b)
    va = math.fsum((x - ma) ** 2 for x in a)
    vb = math.fsum((x - mb) ** 2 for x in b)
    return (ma - mb) / math.sqrt((va + vb) / (len(a) + len(b) - 2))


def auc(a, b):
    score = 0.0
    for x in a:
        for y in b:
            score += 1.0 if x > y else 0.5 if x == y else 0.0
    return score / (len(a) * len(b))


def permutation_p_two_group(a, b, stat):
    """Enumerate every relabeling, recomputing ``stat`` from scratch each time."""
    pooled = list(a) + list(b)
    n, k = len(pooled), len(a)
    observed = stat(a, b)
    hits = total = 0
    for chosen in itertools.combinations(range(n), k):
        sel = set(chosen)
        ga = [pooled[i] for i in chosen]
        gb = [pooled[i] for i in range(n) if i not in sel]
        total += 1
        if stat(ga, gb) >= observed - 1e-12:
            hits += 1
    return hits / total, total


def mean_diff(a, b):
    return math.fsum(a) / len(a) - math.fsum(b) / len(b)


def bootstrap_auc_ci(a, b, reps, seed, level=0.95):
    """Second implementation: draw indices, then loop replicate by replicate."""
    rng = np.random.Generator(np.random.PCG64(seed))
    ia = rng.integers(0, len(a), size=(reps, len(a)))
    ib = rng.integers(0, len(b), size=(reps, len(b)))
    stats = sorted(auc([a[i] for i in ia[r]], [b[j] for j in ib[r]]) for r in range(reps))

    def quantile(q):
        # linear interpolation between order statistics
        h = (reps - 1) * q
        lo = math.floor(h)
        hi = min(lo + 1, reps - 1)
        return stats[lo] + (h - lo) * (stats[hi] - stats[lo])

    alpha = 1 - level
    return max(0.0, quantile(alpha / 2)), min(1.0, quantile(1 - alpha / 2))


def priority(r, d, f, w):
    return w[0] * r + w[1] * d + w[2] * f
