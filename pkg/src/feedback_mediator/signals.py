"""Per-topic gap prevalence and survey difficulty, and global teacher friction."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable

from .core import CodedSegment, CohortDataset, SurveyItemMap


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class GapConfig:
    # A learner has a gap on a topic with at least this many incorrect-labeled questions.
    min_incorrect: int = 1

    def __post_init__(self) -> None:
        if self.min_incorrect < 1:
            raise ValueError("min_incorrect must be >= 1")


@dataclass(frozen=True)
class TopicSignals:
    topic: str
    prevalence_r: float
    survey_available: bool
    survey_difficulty_s: float | None
    disagreement_d: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.prevalence_r <= 1.0:
            raise ValueError(f"{self.topic}: prevalence {self.prevalence_r} outside [0, 1]")
        if not 0.0 <= self.disagreement_d <= 1.0:
            raise ValueError(f"{self.topic}: disagreement {self.disagreement_d} outside [0, 1]")
        if self.survey_available and self.survey_difficulty_s is None:
            raise ValueError(f"{self.topic}: survey marked available without a difficulty")
        if not self.survey_available and self.disagreement_d != 0.0:
            raise ValueError(f"{self.topic}: disagreement must be 0 without survey data")


@dataclass(frozen=True)
class FrictionSummary:
    friction_count: int
    total_count: int
    friction_f: float


def compute_gap_prevalence(data: CohortDataset, cfg: GapConfig = GapConfig()) -> dict[str, float]:
    """Fraction of the trace population with a gap on each graph topic.

    The trace population is every learner with at least one question record.
    A learner counts once per topic however many incorrect answers they gave.
    """
    trace = {q.learner for q in data.question_records}
    if not trace:
        raise SignalError("no trace learners")
    incorrect = Counter((q.learner, q.topic) for q in data.question_records if q.label == "incorrect")
    gap_learners: dict[str, set[str]] = defaultdict(set)
    for (learner, topic), n in incorrect.items():
        if n >= cfg.min_incorrect:
            gap_learners[topic].add(learner)
    denom = len(trace)
    return {t: len(gap_learners.get(t, ())) / denom for t in sorted(data.graph.topic_ids)}


def compute_survey_difficulty(
    data: CohortDataset, item_map: SurveyItemMap
) -> dict[str, tuple[bool, float | None]]:
    """Per-topic ``(available, s_t)`` from Q5 understanding self-ratings.

    ``s_t = (scale_max - m) / (scale_max - scale_min)``, clamped to [0, 1], where
    ``m`` is the mean rating over every response to the topic's Q5 items. On the
    standard 1-6 scale this is ``(6 - m) / 5``.
    """
    by_topic = item_map.topic_items()
    item_topic = {i.item_id: i.topic for items in by_topic.values() for i in items}
    sums: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    for r in data.survey_responses:
        topic = item_topic.get(r.item)
        if topic is not None:
            sums[topic] += r.value
            counts[topic] += 1
    out: dict[str, tuple[bool, float | None]] = {}
    for topic in sorted(data.graph.topic_ids):
        if counts.get(topic, 0) == 0:
            out[topic] = (False, None)
            continue
        item = by_topic[topic][0]
        mean = sums[topic] / counts[topic]
        s = (item.scale_max - mean) / (item.scale_max - item.scale_min)
        out[topic] = (True, min(1.0, max(0.0, s)))
    return out


def compute_friction(segments: Iterable[CodedSegment]) -> FrictionSummary:
    segments = list(segments)
    if not segments:
        raise SignalError("no coded segments")
    k = sum(1 for s in segments if s.is_friction)
    return FrictionSummary(k, len(segments), k / len(segments))

