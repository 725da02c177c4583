"""Correlation, effect-size, AUC and resampling statistics.

All p-values are permutation based. Randomness comes from numpy's PCG64 bit
generator seeded with ``ResampleConfig.seed``; the draw protocol of each
resampling routine is documented on the routine so results can be reproduced
outside this package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels

# Monte Carlo permutations are drawn in blocks of this many rows.
_MC_BLOCK = 8192


class DegenerateSampleError(ValueError):
    """A statistic is undefined for the given sample (e.g. zero variance)."""


@dataclass(frozen=True)
class PairedSample:
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "xs", tuple(float(v) for v in self.xs))
        object.__setattr__(self, "ys", tuple(float(v) for v in self.ys))
        if len(self.xs) != len(self.ys):
            raise ValueError(f"paired sample lengths differ: {len(self.xs)} vs {len(self.ys)}")
        if len(self.xs) < 2:
            raise ValueError("paired sample needs n >= 2")
        if any(math.isnan(v) for v in self.xs + self.ys):
            raise ValueError("paired sample contains NaN")

    @property
    def n(self) -> int:
        return len(self.xs)


@dataclass(frozen=True)
class TwoGroupSample:
    group_a: tuple[float, ...]
    group_b: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "group_a", tuple(float(v) for v in self.group_a))
        object.__setattr__(self, "group_b", tuple(float(v) for v in self.group_b))
        if not self.group_a or not self.group_b:
            raise ValueError("both groups must be nonempty")
        if any(math.isnan(v) for v in self.group_a + self.group_b):
            raise ValueError("two-group sample contains NaN")

    def swapped(self) -> "TwoGroupSample":
        return TwoGroupSample(self.group_b, self.group_a)


@dataclass(frozen=True)
class ResampleConfig:
    seed: int = 0
    permutations: int = 10_000
    bootstrap_reps: int = 2_000
    exact_cutoff: int = 200_000

    def __post_init__(self) -> None:
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        for name in ("permutations", "bootstrap_reps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.exact_cutoff < 0:
            raise ValueError("exact_cutoff must be >= 0")


@dataclass(frozen=True)
class PermutationResult:
    p: float
    method: str  # "exact" or "monte_carlo"
    draws: int
    observed: float


def make_rng(seed: int) -> np.random.Generator:
    """The package's only random source: ``Generator(PCG64(seed))``."""
    return np.random.Generator(np.random.PCG64(seed))


def midranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray, what: str) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSampleError(what)
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman_rho(sample: PairedSample) -> float:
    """Pearson correlation of the mid-ranks of ``xs`` and ``ys``.

    Raises:
        DegenerateSampleError: if either side has a single distinct value.
    """
    return _pearson(midranks(sample.xs), midranks(sample.ys), "degenerate ranking")


def pearson_r(sample: PairedSample) -> float:
    return _pearson(
        np.asarray(sample.xs, dtype=np.float64),
        np.asarray(sample.ys, dtype=np.float64),
        "degenerate sample",
    )


def cohens_d(sample: TwoGroupSample) -> float:
    """Standardized mean difference ``a - b`` over the pooled standard deviation.

    The pooled variance uses ``n_a + n_b - 2`` degrees of freedom, so each
    group needs at least two observations.
    """
    a = np.asarray(sample.group_a, dtype=np.float64)
    b = np.asarray(sample.group_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise DegenerateSampleError("cohens_d needs at least two observations per group")
    ss = float(np.sum((a - a.mean()) ** 2) + np.sum((b - b.mean()) ** 2))
    pooled = ss / (len(a) + len(b) - 2)
    if pooled == 0.0:
        raise DegenerateSampleError("zero pooled variance")
    return (float(a.mean()) - float(b.mean())) / math.sqrt(pooled)


def rank_auc(sample: TwoGroupSample) -> float:
    """P(a > b) + 0.5 P(a == b) over all cross-group pairs; ``group_a`` is positive."""
    a = np.asarray(sample.group_a, dtype=np.float64)
    b = np.asarray(sample.group_b, dtype=np.float64)
    return kernels.auc_u(a, b) / (len(a) * len(b))


def _tail_count(stats: np.ndarray, observed: float, alternative: str, center: float) -> int:
    if alternative == "greater":
        t, t0 = stats, observed
    elif alternative == "less":
        t, t0 = -stats, -observed
    elif alternative == "two-sided":
        t, t0 = np.abs(stats - center), abs(observed - center)
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    # Relabelings tying the observed value must count; absorb summation-order noise.
    eps = 1e-9 * max(1.0, abs(t0))
    return int(np.count_nonzero(t >= t0 - eps))


def _combinations(n: int, k: int, total: int) -> np.ndarray:
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.intp,
        count=total * k,
    )
    return flat.reshape(total, k)


def _permutations(n: int, total: int) -> np.ndarray:
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(n))),
        dtype=np.intp,
        count=total * n,
    )
    return flat.reshape(total, n)


def _mc_blocks(rng: np.random.Generator, n: int, draws: int):
    base = np.arange(n, dtype=np.intp)
    remaining = draws
    while remaining > 0:
        m = min(_MC_BLOCK, remaining)
        yield rng.permuted(np.broadcast_to(base, (m, n)), axis=1)
        remaining -= m


def permutation_p(
    sample: TwoGroupSample | PairedSample,
    statistic: str = "auc",
    cfg: ResampleConfig = ResampleConfig(),
    alternative: str = "greater",
) -> PermutationResult:
    """Permutation p-value, counting the observed assignment among the null set.

    ``auc`` and ``mean_diff`` take a :class:`TwoGroupSample` and relabel the
    pooled values (all ``C(n_a + n_b, n_a)`` subsets when that count is at most
    ``cfg.exact_cutoff``). ``spearman`` and ``pearson`` take a
    :class:`PairedSample` and permute ``ys`` against ``xs`` (all ``n!``
    orderings under the same cutoff).

    Monte Carlo protocol: ``make_rng(cfg.seed)`` then, in blocks of 8192 rows,
    ``rng.permuted`` of ``arange(n)`` along each row. Two-group draws take the
    first ``n_a`` positions of a row as group a; paired draws use the row as the
    ``ys`` index order. ``p = (hits + 1) / (draws + 1)``.
    """
    if statistic in ("auc", "mean_diff"):
        if not isinstance(sample, TwoGroupSample):
            raise TypeError(f"{statistic} needs a TwoGroupSample")
        return _two_group_permutation(sample, statistic, cfg, alternative)
    if statistic in ("spearman", "pearson"):
        if not isinstance(sample, PairedSample):
            raise TypeError(f"{statistic} needs a PairedSample")
        return _paired_permutation(sample, statistic, cfg, alternative)
    raise ValueError(f"unknown permutation statistic {statistic!r}")


def _two_group_permutation(
    sample: TwoGroupSample, statistic: str, cfg: ResampleConfig, alternative: str
) -> PermutationResult:
    pooled = np.asarray(sample.group_a + sample.group_b, dtype=np.float64)
    n, k = len(pooled), len(sample.group_a)
    # Both statistics are increasing functions of the group-a sum of these values.
    values = midranks(pooled) if statistic == "auc" else pooled
    observed_sum = float(values[:k].sum())
    center = k * float(values.mean())
    if statistic == "auc":
        observed = rank_auc(sample)
    else:
        observed = float(np.mean(sample.group_a) - np.mean(sample.group_b))

    total = math.comb(n, k)
    if total <= cfg.exact_cutoff:
        sums = kernels.row_take_sum(values, _combinations(n, k, total), k)
        hits = _tail_count(sums, observed_sum, alternative, center)
        return PermutationResult(hits / total, "exact", total, observed)

    rng = make_rng(cfg.seed)
    hits = 0
    for block in _mc_blocks(rng, n, cfg.permutations):
        sums = kernels.row_take_sum(values, np.ascontiguousarray(block[:, :k]), k)
        hits += _tail_count(sums, observed_sum, alternative, center)
    return PermutationResult(
        (hits + 1) / (cfg.permutations + 1), "monte_carlo", cfg.permutations, observed
    )


def _paired_permutation(
    sample: PairedSample, statistic: str, cfg: ResampleConfig, alternative: str
) -> PermutationResult:
    if statistic == "spearman":
        observed = spearman_rho(sample)
        x, y = midranks(sample.xs), midranks(sample.ys)
    else:
        observed = pearson_r(sample)
        x = np.asarray(sample.xs, dtype=np.float64)
        y = np.asarray(sample.ys, dtype=np.float64)
    # With xs centered, the correlation is an increasing function of sum(x * y[perm]).
    x = x - x.mean()
    n = sample.n
    observed_dot = float(np.dot(x, y))

    total = math.factorial(n)
    if total <= cfg.exact_cutoff:
        dots = kernels.row_paired_dot(x, y, _permutations(n, total))
        hits = _tail_count(dots, observed_dot, alternative, 0.0)
        return PermutationResult(hits / total, "exact", total, observed)

    rng = make_rng(cfg.seed)
    hits = 0
    for block in _mc_blocks(rng, n, cfg.permutations):
        dots = kernels.row_paired_dot(x, y, np.ascontiguousarray(block))
        hits += _tail_count(dots, observed_dot, alternative, 0.0)
    return PermutationResult(
        (hits + 1) / (cfg.permutations + 1), "monte_carlo", cfg.permutations, observed
    )


def bootstrap_ci(
    sample: TwoGroupSample,
    statistic: str = "auc",
    level: float = 0.95,
    cfg: ResampleConfig = ResampleConfig(),
) -> tuple[float, float]:
    """Stratified percentile bootstrap interval.

    Draw protocol: ``rng = make_rng(cfg.seed)``; ``ia = rng.integers(0, n_a,
    size=(reps, n_a))``; then ``ib = rng.integers(0, n_b, size=(reps, n_b))``.
    The interval is ``np.quantile`` (linear interpolation) of the replicate
    statistics at ``(1 - level) / 2`` and ``(1 + level) / 2``. AUC bounds are
    clamped to [0, 1].
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    a = np.asarray(sample.group_a, dtype=np.float64)
    b = np.asarray(sample.group_b, dtype=np.float64)
    reps = cfg.bootstrap_reps
    rng = make_rng(cfg.seed)
    ia = rng.integers(0, len(a), size=(reps, len(a)))
    ib = rng.integers(0, len(b), size=(reps, len(b)))
    if statistic == "auc":
        stats = kernels.bootstrap_auc(a, b, ia, ib)
    elif statistic == "mean_diff":
        stats = a[ia].mean(axis=1) - b[ib].mean(axis=1)
    else:
        raise ValueError(f"unknown bootstrap statistic {statistic!r}")
    alpha = 1.0 - level
    lo, hi = np.quantile(stats, [alpha / 2, 1.0 - alpha / 2])
    lo, hi = float(lo), float(hi)
    if statistic == "auc":
        lo, hi = max(0.0, lo), min(1.0, hi)
    return lo, hi


def top_k_overlap(ranking_a: Sequence[str], ranking_b: Sequence[str], k: int) -> int:
    """Size of the intersection of the two top-``k`` sets."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > len(ranking_a) or k > len(ranking_b):
        raise ValueError(f"k={k} exceeds ranking length ({len(ranking_a)}, {len(ranking_b)})")
    return len(set(ranking_a[:k]) & set(ranking_b[:k]))
