"""Learner risk channels, the synthesis score, and isolated-learner classification.

A learner is *isolated* when the weighted synthesis score crosses its threshold
while none of the three channels crosses the per-channel threshold on its own.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import CohortDataset, SurveyItemMap
from .mediation import DecisionRecord
from .stats import midranks

NORMALIZATIONS = ("percentile", "minmax")
CATEGORIES = ("isolated", "joint", "channel_only", "unidentified")

Channels = tuple[float, float, float]


@dataclass(frozen=True)
class ChannelWeights:
    w_raw: float = 0.35
    w_help: float = 0.35
    w_refl: float = 0.30

    def __post_init__(self) -> None:
        ws = (self.w_raw, self.w_help, self.w_refl)
        if any(w < 0 for w in ws):
            raise ValueError(f"channel weights must be >= 0, got {ws}")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"channel weights sum to {sum(ws)!r}, not 1")

    def as_tuple(self) -> Channels:
        return (self.w_raw, self.w_help, self.w_refl)


@dataclass(frozen=True)
class SynthesisConfig:
    sigma_threshold: float = 0.50
    channel_threshold: float = 0.75
    channel_weights: ChannelWeights = field(default_factory=ChannelWeights)
    normalization: str = "percentile"
    # Raw help risk for a learner with no help events at all.
    absent_help_value: float = 0.5

    def __post_init__(self) -> None:
        for name in ("sigma_threshold", "channel_threshold", "absent_help_value"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


@dataclass(frozen=True)
class LearnerRiskProfile:
    learner: str
    rho_raw: float
    rho_help: float
    rho_refl: float
    sigma: float
    channel_flags: tuple[bool, bool, bool]
    sigma_flag: bool
    isolated: bool

    @property
    def category(self) -> str:
        any_channel = any(self.channel_flags)
        if self.sigma_flag:
            return "joint" if any_channel else "isolated"
        return "channel_only" if any_channel else "unidentified"

    def as_dict(self) -> dict:
        return {
            "learner": self.learner,
            "rho_raw": self.rho_raw,
            "rho_help": self.rho_help,
            "rho_refl": self.rho_refl,
            "sigma": self.sigma,
            "channel_flags": {
                "raw": self.channel_flags[0],
                "help": self.channel_flags[1],
                "refl": self.channel_flags[2],
            },
            "sigma_flag": self.sigma_flag,
            "isolated": self.isolated,
            "category": self.category,
        }


@dataclass(frozen=True)
class ChannelResult:
    normalized: dict[str, Channels]
    raw: dict[str, Channels]
    skipped: dict[str, str]


def normalize(values: Sequence[float], method: str = "percentile") -> np.ndarray:
    """Map a cohort's channel values onto [0, 1].

    ``percentile`` gives ``(midrank - 1) / (n - 1)``; ``minmax`` is the linear
    map from [min, max]. A single learner or a constant channel maps to 0.5.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        return x
    if method == "percentile":
        if n == 1:
            return np.full(1, 0.5)
        return (midranks(x) - 1.0) / (n - 1)
    if method == "minmax":
        lo, hi = float(x.min()), float(x.max())
        if hi == lo:
            return np.full(n, 0.5)
        return (x - lo) / (hi - lo)
    raise ValueError(f"unknown normalization {method!r}")


def raw_channels(
    data: CohortDataset, item_map: SurveyItemMap, absent_help_value: float = 0.5
) -> tuple[dict[str, Channels], dict[str, str]]:
    """Un-normalized channel risks per learner, plus learners that had to be skipped.

    Understanding and reflection average ``(scale_max - v) / (scale_max - scale_min)``
    over the learner's Q5 items and RTQ Understanding/Reflection items
    respectively. Help risk is the unresolved fraction of help events.
    """
    q5_items = {i.item_id for i in item_map.items_for("Q5_topic")}
    refl_items = {i.item_id for i in item_map.items_for("rtq_understanding", "rtq_reflection")}
    q5: dict[str, list[float]] = defaultdict(list)
    refl: dict[str, list[float]] = defaultdict(list)
    surveyed = set()
    for r in data.survey_responses:
        surveyed.add(r.learner)
        if r.item not in item_map:
            continue
        item = item_map[r.item]
        inv = (item.scale_max - r.value) / (item.scale_max - item.scale_min)
        if r.item in q5_items:
            q5[r.learner].append(inv)
        elif r.item in refl_items:
            refl[r.learner].append(inv)
    helped: dict[str, list[bool]] = defaultdict(list)
    for h in data.help_events:
        helped[h.learner].append(h.resolved)

    out: dict[str, Channels] = {}
    skipped: dict[str, str] = {}
    for learner in sorted(data.learners):
        if learner not in surveyed:
            skipped[learner] = "no survey data"
        elif not q5.get(learner):
            skipped[learner] = "no Q5 topic-understanding responses"
        elif not refl.get(learner):
            skipped[learner] = "no RTQ understanding/reflection responses"
        else:
            events = helped.get(learner, [])
            if events:
                help_risk = sum(1 for ok in events if not ok) / len(events)
            else:
                help_risk = absent_help_value
            out[learner] = (
                math.fsum(sorted(q5[learner])) / len(q5[learner]),
                help_risk,
                math.fsum(sorted(refl[learner])) / len(refl[learner]),
            )
    return out, skipped


def normalize_channels(raw: Mapping[str, Channels], method: str) -> dict[str, Channels]:
    learners = sorted(raw)
    if not learners:
        return {}
    cols = [normalize([raw[l][c] for l in learners], method) for c in range(3)]
    return {l: (float(cols[0][i]), float(cols[1][i]), float(cols[2][i])) for i, l in enumerate(learners)}


def compute_channels(
    data: CohortDataset, item_map: SurveyItemMap, cfg: SynthesisConfig = SynthesisConfig()
) -> ChannelResult:
    raw, skipped = raw_channels(data, item_map, cfg.absent_help_value)
    return ChannelResult(normalize_channels(raw, cfg.normalization), raw, skipped)


def compute_sigma(channels: Channels, w: ChannelWeights = ChannelWeights()) -> float:
    return w.w_raw * channels[0] + w.w_help * channels[1] + w.w_refl * channels[2]


def classify_learners(
    channels: Mapping[str, Channels], cfg: SynthesisConfig = SynthesisConfig()
) -> list[LearnerRiskProfile]:
    """Risk profiles sorted by descending sigma, then learner id."""
    out = []
    for learner, ch in channels.items():
        for v in ch:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"learner {learner!r}: channel value {v} outside [0, 1]")
        sigma = compute_sigma(ch, cfg.channel_weights)
        flags = tuple(v >= cfg.channel_threshold for v in ch)
        sigma_flag = sigma >= cfg.sigma_threshold
        out.append(LearnerRiskProfile(
            learner, ch[0], ch[1], ch[2], sigma, flags, sigma_flag, sigma_flag and not any(flags)
        ))
    out.sort(key=lambda p: (-p.sigma, p.learner))
    return out


def summarize(profiles: Iterable[LearnerRiskProfile]) -> dict[str, int]:
    counts = dict.fromkeys(CATEGORIES, 0)
    for p in profiles:
        counts[p.category] += 1
    return counts


def compute_exposure_scores(
    records: Iterable[DecisionRecord],
    data: CohortDataset,
    difficulty_weeks: Mapping[str, Iterable[int]],
) -> dict[str, float]:
    """Mean priority of the distinct topics a learner asked about in their difficulty weeks.

    Learners with no question in any of their difficulty weeks score 0.
    """
    priority = {r.topic: r.priority_p for r in records}
    weeks = {learner: set(ws) for learner, ws in difficulty_weeks.items()}
    touched: dict[str, set[str]] = defaultdict(set)
    for q in data.question_records:
        if q.week in weeks.get(q.learner, ()) and q.topic in priority:
            touched[q.learner].add(q.topic)
    out = {}
    for learner in sorted(weeks):
        topics = sorted(touched.get(learner, ()))
        out[learner] = math.fsum(priority[t] for t in topics) / len(topics) if topics else 0.0
    return out
