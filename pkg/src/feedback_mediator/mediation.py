"""Topic priority scoring, ranking with decision records, and weight sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .signals import TopicSignals
from .stats import PairedSample, spearman_rho, top_k_overlap

WEIGHT_TOLERANCE = 1e-9
SURVEY_MISSING_NOTE = "survey missing; D forced to 0"


class MediationError(ValueError):
    pass


@dataclass(frozen=True)
class WeightProfile:
    name: str
    w_r: float
    w_d: float
    w_f: float

    def __post_init__(self) -> None:
        ws = (self.w_r, self.w_d, self.w_f)
        if any(not math.isfinite(w) or w < 0 for w in ws):
            raise MediationError(f"profile {self.name!r}: weights must be finite and >= 0, got {ws}")
        if abs(sum(ws) - 1.0) > WEIGHT_TOLERANCE:
            raise MediationError(
                f"profile {self.name!r}: weights sum to {sum(ws)!r}, not 1 (use renormalize to rescale)"
            )

    @classmethod
    def from_weights(
        cls, name: str, w_r: float, w_d: float, w_f: float, renormalize: bool = False
    ) -> "WeightProfile":
        if renormalize:
            total = w_r + w_d + w_f
            if not total > 0:
                raise MediationError(f"profile {name!r}: cannot renormalize zero weights")
            w_r, w_d, w_f = w_r / total, w_d / total, w_f / total
        return cls(name, w_r, w_d, w_f)

    def as_dict(self) -> dict:
        return {"name": self.name, "w_r": self.w_r, "w_d": self.w_d, "w_f": self.w_f}


DEFAULT_PROFILE = WeightProfile("default", 0.70, 0.20, 0.10)
HIGHER_DISAGREEMENT_PROFILE = WeightProfile("higher-disagreement", 0.60, 0.40, 0.00)
ABLATION_NAME = "no-disagreement ablation"


def no_disagreement_ablation(base: WeightProfile = DEFAULT_PROFILE) -> WeightProfile:
    """``base`` with the disagreement weight removed and the rest rescaled to sum 1."""
    return WeightProfile.from_weights(ABLATION_NAME, base.w_r, 0.0, base.w_f, renormalize=True)


@dataclass(frozen=True)
class DecisionRecord:
    topic: str
    prevalence_r: float
    disagreement_d: float
    friction_f: float
    survey_available: bool
    survey_difficulty_s: float | None
    weights: WeightProfile
    contributions: tuple[float, float, float]
    priority_p: float
    rank: int
    diagnostics: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        c_r, c_d, c_f = self.contributions
        return {
            "topic": self.topic,
            "inputs": {
                "prevalence_r": self.prevalence_r,
                "disagreement_d": self.disagreement_d,
                "friction_f": self.friction_f,
                "survey_available": self.survey_available,
                "survey_difficulty_s": self.survey_difficulty_s,
            },
            "weights": self.weights.as_dict(),
            "contributions": {"prevalence": c_r, "disagreement": c_d, "friction": c_f},
            "priority_p": self.priority_p,
            "rank": self.rank,
            "diagnostics": list(self.diagnostics),
        }


@dataclass(frozen=True)
class SensitivityReport:
    profile_a: str
    profile_b: str
    spearman_rho: float
    top_k_overlap: tuple[int, int]  # (k, overlap)
    rankings: tuple[tuple[str, ...], tuple[str, ...]] = field(repr=False)

    def as_dict(self) -> dict:
        k, overlap = self.top_k_overlap
        return {
            "profile_a": self.profile_a,
            "profile_b": self.profile_b,
            "spearman_rho": self.spearman_rho,
            "k": k,
            "top_k_overlap": overlap,
            "ranking_a": list(self.rankings[0]),
            "ranking_b": list(self.rankings[1]),
        }


def compute_disagreement(prevalence_r: float, survey: tuple[bool, float | None]) -> float:
    available, s = survey
    if not available or s is None:
        return 0.0
    return abs(prevalence_r - s)


def _contributions(signals: TopicSignals, friction_f: float, w: WeightProfile) -> tuple[float, float, float]:
    return (w.w_r * signals.prevalence_r, w.w_d * signals.disagreement_d, w.w_f * friction_f)


def compute_priority(signals: TopicSignals, friction_f: float, w: WeightProfile) -> float:
    c_r, c_d, c_f = _contributions(signals, friction_f, w)
    return c_r + c_d + c_f


def build_topic_signals(
    prevalence: Mapping[str, float],
    survey: Mapping[str, tuple[bool, float | None]] | None = None,
) -> list[TopicSignals]:
    """One :class:`TopicSignals` per prevalence key, sorted by topic id."""
    out = []
    for topic in sorted(prevalence):
        available, s = (survey or {}).get(topic, (False, None))
        r = prevalence[topic]
        out.append(TopicSignals(topic, r, available, s, compute_disagreement(r, (available, s))))
    return out


_TERM_NAMES = ("prevalence", "disagreement", "friction")


def rank_topics(
    signals: Sequence[TopicSignals], friction_f: float, w: WeightProfile
) -> list[DecisionRecord]:
    """Decision records ordered by descending priority, ranks 1..N.

    Ties on priority go to the higher prevalence, then to the smaller topic id;
    affected records say so in their diagnostics.
    """
    if not signals:
        raise MediationError("nothing to rank")
    if not 0.0 <= friction_f <= 1.0:
        raise MediationError(f"friction {friction_f} outside [0, 1]")
    scored = []
    for s in signals:
        c = _contributions(s, friction_f, w)
        scored.append((s, c, c[0] + c[1] + c[2]))
    scored.sort(key=lambda item: (-item[2], -item[0].prevalence_r, item[0].topic))

    records = []
    for i, (s, c, p) in enumerate(scored):
        notes = []
        if not s.survey_available:
            notes.append(SURVEY_MISSING_NOTE)
        tied = [o for j, (o, _, q) in enumerate(scored) if j != i and q == p]
        if tied:
            same_r = [o.topic for o in tied if o.prevalence_r == s.prevalence_r]
            others = ", ".join(sorted(o.topic for o in tied))
            rule = "topic id" if same_r else "higher R"
            notes.append(f"tied on P with {others}; order broken by {rule}")
        if p > 0:
            top = max(range(3), key=lambda k: c[k])
            notes.append(f"largest contribution: {_TERM_NAMES[top]} ({c[top]:.3f} of {p:.3f})")
        records.append(DecisionRecord(
            topic=s.topic,
            prevalence_r=s.prevalence_r,
            disagreement_d=s.disagreement_d,
            friction_f=friction_f,
            survey_available=s.survey_available,
            survey_difficulty_s=s.survey_difficulty_s,
            weights=w,
            contributions=c,
            priority_p=p,
            rank=i + 1,
            diagnostics=tuple(notes),
        ))
    return records


def _compare(
    signals: Sequence[TopicSignals],
    friction_f: float,
    a: WeightProfile,
    b: WeightProfile,
    k: int,
) -> SensitivityReport:
    ra = rank_topics(signals, friction_f, a)
    rb = rank_topics(signals, friction_f, b)
    order_a = tuple(r.topic for r in ra)
    order_b = tuple(r.topic for r in rb)
    pos_b = {r.topic: r.rank for r in rb}
    rho = spearman_rho(PairedSample([r.rank for r in ra], [pos_b[r.topic] for r in ra]))
    return SensitivityReport(a.name, b.name, rho, (k, top_k_overlap(order_a, order_b, k)), (order_a, order_b))


def sensitivity_sweep(
    signals: Sequence[TopicSignals],
    friction_f: float,
    profiles: Sequence[WeightProfile],
    k: int = 10,
    include_ablation: bool = True,
) -> list[SensitivityReport]:
    """Compare every profile's ranking with the first profile's (the reference).

    The first report is the reference against itself. With ``include_ablation``
    the reference with its disagreement weight removed is appended unless a
    profile of that name is already present. Spearman's rho is taken over the
    rank positions, so tied priorities are ordered by the usual tie-break.
    """
    if len(profiles) < 2:
        raise MediationError("a sweep needs at least two profiles")
    if k > len(signals):
        raise MediationError(f"k={k} exceeds topic count {len(signals)}")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise MediationError(f"duplicate profile names in {names}")
    profiles = list(profiles)
    reference = profiles[0]
    if include_ablation and ABLATION_NAME not in names:
        profiles.append(no_disagreement_ablation(reference))
    return [_compare(signals, friction_f, reference, p, k) for p in profiles]
