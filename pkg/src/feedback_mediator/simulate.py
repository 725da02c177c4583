"""Seeded synthetic cohorts with planted isolated learners.

Everything is drawn from one ``make_rng(seed)`` stream in a fixed order, so a
(spec, seed) pair always regenerates the same files byte for byte.

Planted learners get survey answers and help events whose *cohort percentile*
lands near ``PLANTED_PERCENTILE`` in every channel: under the default
percentile normalization each channel stays below the 0.75 flag threshold while
the weighted synthesis score sits well above 0.50.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    CodedSegment,
    Codebook,
    CohortDataset,
    HelpEvent,
    KnowledgeGraph,
    QuestionRecord,
    SurveyItem,
    SurveyItemMap,
    SurveyResponse,
    Topic,
)
from .io import load_codebook, write_csv, write_dataset
from .stats import make_rng, midranks
from .synthesis import raw_channels

PLANTED_PERCENTILE = 0.64
# Accepted percentile band for a planted channel; outside it the spec is infeasible.
PLANTED_BAND = (0.52, 0.72)


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class CohortSpec:
    n_learners: int = 279
    n_topics: int = 54
    planted_isolated: int = 3
    n_weeks: int = 8
    survey_topics: int = 19
    trace_fraction: float = 159 / 279
    n_segments: int = 41
    friction_segments: int = 9

    def check(self) -> None:
        if self.n_learners < 1 or self.n_topics < 1 or self.n_weeks < 1:
            raise SimulationError("cohort, topic and week counts must be positive")
        if not 0 <= self.planted_isolated <= self.n_learners:
            raise SimulationError(
                f"cannot plant {self.planted_isolated} isolated learners in a cohort of {self.n_learners}"
            )
        if self.planted_isolated and self.n_learners - self.planted_isolated < 4:
            raise SimulationError("planting needs at least 4 unplanted learners to rank against")
        if not 1 <= self.survey_topics <= self.n_topics:
            raise SimulationError("survey_topics must lie in [1, n_topics]")
        if not 0.0 < self.trace_fraction <= 1.0:
            raise SimulationError("trace_fraction must lie in (0, 1]")
        if not 0 <= self.friction_segments <= self.n_segments or self.n_segments < 1:
            raise SimulationError("need 0 <= friction_segments <= n_segments and n_segments >= 1")


@dataclass(frozen=True)
class SyntheticCohort:
    data: CohortDataset
    item_map: SurveyItemMap
    codebook: Codebook
    difficulty_weeks: dict[str, tuple[int, ...]]
    concerns: dict[str, float]
    planted: tuple[str, ...] = field(default=())

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        write_dataset(self.data, out, self.item_map, self.codebook)
        write_csv(
            out / "difficulty_weeks.csv",
            "difficulty_weeks",
            ((l, w) for l in sorted(self.difficulty_weeks) for w in self.difficulty_weeks[l]),
        )
        write_csv(out / "concerns.csv", "concerns", ((t, f"{c:.4f}") for t, c in sorted(self.concerns.items())))
        write_csv(out / "ground_truth.csv", ("learner_id", "label"), ((l, "planted_isolated") for l in self.planted))
        return out


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def _item_map(topic_ids: list[str]) -> SurveyItemMap:
    items = [SurveyItem(f"Q5_{t}", "Q5_topic", t, 1, 6) for t in topic_ids]
    items += [SurveyItem(f"Q{k}", "help_seeking", None, 1, 6) for k in range(6, 12)]
    items += [SurveyItem(f"Q13_{k}", "self_efficacy", None, 1, 6) for k in range(1, 8)]
    for prefix, construct in (
        ("RTQ_U", "rtq_understanding"),
        ("RTQ_R", "rtq_reflection"),
        ("RTQ_C", "rtq_critical_reflection"),
        ("RTQ_H", "rtq_other"),
    ):
        items += [SurveyItem(f"{prefix}{k}", construct, None, 1, 5) for k in range(1, 5)]
    return SurveyItemMap({i.item_id: i for i in items})


def _likert(x: float, lo: int, hi: int) -> int:
    return int(min(hi, max(lo, round(x))))


def _percentile_of(population: np.ndarray, value: float, copies: int) -> float:
    pooled = np.concatenate([population, np.full(copies, value)])
    return float((midranks(pooled)[-1] - 1.0) / (len(pooled) - 1))


def _pick_level(population: np.ndarray, candidates: list[float], copies: int) -> float:
    best = min(candidates, key=lambda v: (abs(_percentile_of(population, v, copies) - PLANTED_PERCENTILE), v))
    pct = _percentile_of(population, best, copies)
    if not PLANTED_BAND[0] <= pct <= PLANTED_BAND[1]:
        raise SimulationError(f"no planted level reaches the target percentile (best {pct:.3f})")
    return best


def generate_cohort(spec: CohortSpec = CohortSpec(), seed: int = 0) -> SyntheticCohort:
    spec.check()
    rng = make_rng(seed)
    width = max(2, len(str(spec.n_topics)))
    topic_ids = [f"t{i:0{width}d}" for i in range(1, spec.n_topics + 1)]
    topics = tuple(Topic(t, f"topic {t[1:]}") for t in topic_ids)

    # Prerequisites follow a random topological order, so the graph is a DAG.
    order = [topic_ids[i] for i in rng.permutation(spec.n_topics)]
    pairs = [(order[i], order[j]) for i in range(spec.n_topics) for j in range(i + 1, spec.n_topics)]
    n_edges = min(len(pairs), round(spec.n_topics * 47 / 54))
    chosen = sorted(rng.choice(len(pairs), size=n_edges, replace=False).tolist()) if n_edges else []
    graph = KnowledgeGraph(topics, tuple(pairs[i] for i in chosen))

    difficulty = {t: float(d) for t, d in zip(topic_ids, rng.beta(2.0, 6.0, size=spec.n_topics))}
    survey_topics = sorted(topic_ids[i] for i in rng.choice(spec.n_topics, size=spec.survey_topics, replace=False))
    item_map = _item_map(survey_topics)
    codebook = load_codebook()

    width_l = max(3, len(str(spec.n_learners)))
    learners = [f"L{i:0{width_l}d}" for i in range(1, spec.n_learners + 1)]
    planted = tuple(sorted(learners[i] for i in rng.choice(spec.n_learners, size=spec.planted_isolated, replace=False)))
    planted_set = set(planted)
    n_trace = max(1, round(spec.trace_fraction * spec.n_learners))
    trace = set(learners[i] for i in rng.choice(spec.n_learners, size=n_trace, replace=False))

    understanding = dict(zip(learners, rng.normal(size=spec.n_learners).tolist()))
    reflection = {l: 0.5 * u + 0.85 * float(z) for (l, u), z in zip(understanding.items(), rng.normal(size=spec.n_learners))}
    resolve = {l: 0.9 + 0.6 * u + 0.7 * float(z) for (l, u), z in zip(understanding.items(), rng.normal(size=spec.n_learners))}
    efficacy = {l: 0.55 * u + 0.8 * float(z) for (l, u), z in zip(understanding.items(), rng.normal(size=spec.n_learners))}

    survey: list[SurveyResponse] = []
    questions: list[QuestionRecord] = []
    help_events: list[HelpEvent] = []
    difficulty_weeks: dict[str, tuple[int, ...]] = {}
    topic_p = np.array([0.5 + difficulty[t] for t in topic_ids])
    topic_p /= topic_p.sum()

    for l in learners:
        u = understanding[l]
        if l not in planted_set:
            for t in survey_topics:
                survey.append(SurveyResponse(l, f"Q5_{t}", _likert(5.9 + 0.7 * u - 3.0 * difficulty[t] + rng.normal(0, 0.7), 1, 6)))
            for k in range(6, 12):
                survey.append(SurveyResponse(l, f"Q{k}", _likert(3.5 + 0.3 * u + rng.normal(0, 1.0), 1, 6)))
            for k in range(1, 8):
                survey.append(SurveyResponse(l, f"Q13_{k}", _likert(4.2 + 0.8 * efficacy[l] + rng.normal(0, 0.6), 1, 6)))
            r = reflection[l]
            for prefix, loading in (("RTQ_U", 0.6), ("RTQ_R", 0.6), ("RTQ_C", 0.2), ("RTQ_H", 0.1)):
                for k in range(1, 5):
                    survey.append(SurveyResponse(l, f"{prefix}{k}", _likert(3.6 + loading * r + rng.normal(0, 0.6), 1, 5)))
            p_resolve = _sigmoid(resolve[l])
            for _ in range(int(rng.poisson(1.8))):
                help_events.append(HelpEvent(l, int(rng.integers(1, spec.n_weeks + 1)), bool(rng.random() < p_resolve)))
        if l in trace:
            for _ in range(1 + int(rng.poisson(30.0))):
                t = topic_ids[int(rng.choice(spec.n_topics, p=topic_p))]
                week = int(rng.integers(1, spec.n_weeks + 1))
                if rng.random() < 0.1:
                    label = "unknown"
                elif rng.random() < _sigmoid(-1.8 + 5.0 * difficulty[t] - 0.8 * u):
                    label = "incorrect"
                else:
                    label = "correct"
                questions.append(QuestionRecord(l, t, label, week))
        n_hard = 1 + int(rng.binomial(min(3, spec.n_weeks) - 1, _sigmoid(-u))) if spec.n_weeks > 1 else 1
        difficulty_weeks[l] = tuple(sorted(int(w) + 1 for w in rng.choice(spec.n_weeks, size=n_hard, replace=False)))

    weeks = tuple(range(1, spec.n_weeks + 1))
    if planted:
        survey, help_events = _plant(spec, rng, learners, planted, survey, help_events, graph, weeks, item_map, survey_topics)

    friction = sorted(codebook.friction_themes)
    other = [t for t in codebook.themes if t not in codebook.friction_themes]
    seg_kinds = [True] * spec.friction_segments + [False] * (spec.n_segments - spec.friction_segments)
    seg_kinds = [seg_kinds[i] for i in rng.permutation(len(seg_kinds))]
    segments = []
    for i, is_friction in enumerate(seg_kinds):
        pool = friction if is_friction else other
        segments.append(CodedSegment(f"S{i + 1:03d}", pool[int(rng.integers(len(pool)))], is_friction))
    concerns = {t: round(5.0 * difficulty[t] + float(rng.normal(0, 0.3)), 4) for t in topic_ids}

    data = CohortDataset(
        graph=graph,
        learners=frozenset(learners),
        question_records=tuple(questions),
        survey_responses=tuple(survey),
        help_events=tuple(help_events),
        teacher_segments=tuple(segments),
        weeks=weeks,
    )
    return SyntheticCohort(data, item_map, codebook, difficulty_weeks, concerns, planted)


def _plant(spec, rng, learners, planted, survey, help_events, graph, weeks, item_map, survey_topics):
    population = CohortDataset(
        graph=graph,
        learners=frozenset(l for l in learners if l not in set(planted)),
        survey_responses=tuple(survey),
        help_events=tuple(help_events),
        weeks=weeks,
    )
    raw, _ = raw_channels(population, item_map)
    cols = [np.array([raw[l][c] for l in sorted(raw)]) for c in range(3)]
    copies = len(planted)

    n_q5 = len(survey_topics)
    q5_level = _pick_level(cols[0], [j / (5 * n_q5) for j in range(5 * n_q5 + 1)], copies)
    help_levels = sorted({u / k for k in range(1, 7) for u in range(k + 1)})
    help_level = _pick_level(cols[1], help_levels, copies)
    refl_level = _pick_level(cols[2], [j / 32 for j in range(33)], copies)

    survey = list(survey)
    help_events = list(help_events)
    for l in planted:
        survey += _spread(rng, l, [f"Q5_{t}" for t in survey_topics], round(q5_level * 5 * n_q5), 6)
        for k in range(6, 12):
            survey.append(SurveyResponse(l, f"Q{k}", int(rng.integers(3, 6))))
        for k in range(1, 8):
            survey.append(SurveyResponse(l, f"Q13_{k}", int(rng.integers(3, 6))))
        refl_items = [f"RTQ_U{k}" for k in range(1, 5)] + [f"RTQ_R{k}" for k in range(1, 5)]
        survey += _spread(rng, l, refl_items, round(refl_level * 32), 5)
        for prefix in ("RTQ_C", "RTQ_H"):
            for k in range(1, 5):
                survey.append(SurveyResponse(l, f"{prefix}{k}", int(rng.integers(2, 5))))
        k, u = min(
            ((k, u) for k in range(1, 7) for u in range(k + 1) if abs(u / k - help_level) < 1e-12),
            key=lambda ku: ku[0],
        )
        flags = [True] * u + [False] * (k - u)
        for unresolved in flags:
            help_events.append(HelpEvent(l, int(rng.integers(1, spec.n_weeks + 1)), not unresolved))
    return survey, help_events


def _spread(rng, learner: str, items: list[str], deficit: int, scale_max: int) -> list[SurveyResponse]:
    """Answers whose total shortfall from ``scale_max`` is exactly ``deficit``, spread evenly."""
    n = len(items)
    base, extra = divmod(deficit, n)
    shortfalls = [base + 1] * extra + [base] * (n - extra)
    shortfalls = [shortfalls[i] for i in rng.permutation(n)]
    return [SurveyResponse(learner, item, scale_max - d) for item, d in zip(items, shortfalls)]
