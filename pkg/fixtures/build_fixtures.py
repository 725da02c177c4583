"""Regenerate the shipped fixtures.

    python fixtures/build_fixtures.py

Writes ``priority_reference/`` (hand-built raw cohort), ``channel_reference/channels.csv``,
``synthetic/`` (seeded generator output) and the JSON profile / pairing files.
Output is deterministic; tests check that the committed files match.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from feedback_mediator.core import (
    CohortDataset,
    KnowledgeGraph,
    QuestionRecord,
    SurveyItem,
    SurveyItemMap,
    SurveyResponse,
    Topic,
)
from feedback_mediator.io import load_codebook, write_csv, write_dataset, write_json
from feedback_mediator.simulate import CohortSpec, generate_cohort

HERE = Path(__file__).resolve().parent
SYNTHETIC_SEED = 7
N_LEARNERS = 279
N_TRACE = 159

# topic id, display name, learners with an incorrect answer (of 159), Q5 rating sum over 279 (None = no item)
REFERENCE_TOPICS = [
    ("analogical-reasoning", "Analogical reasoning", 25, 1505),
    ("frames", "Frames", 22, 1551),
    ("planning", "Planning", 16, 1483),
    ("case-based-reasoning", "Case-based reasoning", 14, 1509),
    ("knowledge-based-ai", "Knowledge-based AI", 12, None),
    ("semantic-networks", "Semantic networks", 10, 1558),
    ("production-systems", "Production systems", 5, None),
]
REFERENCE_EDGES = [
    ("semantic-networks", "frames"),
    ("frames", "case-based-reasoning"),
    ("case-based-reasoning", "analogical-reasoning"),
    ("production-systems", "planning"),
    ("knowledge-based-ai", "semantic-networks"),
]
# 9 of 41 coded segments fall in the friction themes.
FRICTION_SEGMENTS, TOTAL_SEGMENTS = 9, 41


def build_priority_reference(out: Path) -> None:
    rng = np.random.Generator(np.random.PCG64(8))
    learners = [f"L{i:03d}" for i in range(1, N_LEARNERS + 1)]
    trace = learners[:N_TRACE]
    graph = KnowledgeGraph(tuple(Topic(t, name) for t, name, _, _ in REFERENCE_TOPICS), tuple(REFERENCE_EDGES))
    topic_ids = [t for t, *_ in REFERENCE_TOPICS]

    questions = []
    for topic, _, n_gap, _ in REFERENCE_TOPICS:
        for idx in rng.choice(N_TRACE, size=n_gap, replace=False):
            questions.append(QuestionRecord(trace[idx], topic, "incorrect", int(rng.integers(1, 9))))
    for i, learner in enumerate(trace):
        topic = topic_ids[i % len(topic_ids)]
        label = "unknown" if i % 10 == 0 else "correct"
        questions.append(QuestionRecord(learner, topic, label, int(rng.integers(1, 9))))
    questions.sort(key=lambda q: (q.learner, q.topic, q.week, q.label))

    items = {}
    survey = []
    for topic, _, _, total in REFERENCE_TOPICS:
        if total is None:
            continue
        item_id = f"Q5_{topic}"
        items[item_id] = SurveyItem(item_id, "Q5_topic", topic, 1, 6)
        sixes = set(rng.choice(N_LEARNERS, size=total - 5 * N_LEARNERS, replace=False).tolist())
        for i, learner in enumerate(learners):
            survey.append(SurveyResponse(learner, item_id, 6 if i in sixes else 5))

    codebook = load_codebook()
    friction = sorted(codebook.friction_themes)
    other = [t for t in codebook.themes if t not in codebook.friction_themes]
    kinds = [True] * FRICTION_SEGMENTS + [False] * (TOTAL_SEGMENTS - FRICTION_SEGMENTS)
    kinds = [kinds[i] for i in rng.permutation(TOTAL_SEGMENTS)]
    segments = []
    for i, is_friction in enumerate(kinds):
        pool = friction if is_friction else other
        segments.append(codebook.segment(f"SEG{i + 1:02d}", pool[int(rng.integers(len(pool)))]))

    data = CohortDataset(
        graph=graph,
        learners=frozenset(learners),
        question_records=tuple(questions),
        survey_responses=tuple(survey),
        teacher_segments=tuple(segments),
        weeks=tuple(range(1, 9)),
    )
    write_dataset(data, out, SurveyItemMap(items), codebook)
    # The friction summary is all the mediation needs from interviews; no help events here.
    (out / "help_events.csv").unlink()


def build_channel_reference(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "channels.csv", "channels", [
        ("case_a", "0.31", "0.70", "0.52"),
        ("baseline_flagged", "0.90", "0.20", "0.15"),
    ])


def build_json(out: Path) -> None:
    write_json(out / "weight_profiles.json", {"profiles": [
        {"name": "default", "w_r": 0.70, "w_d": 0.20, "w_f": 0.10},
        {"name": "higher-disagreement", "w_r": 0.60, "w_d": 0.40, "w_f": 0.00},
    ]})
    write_json(out / "pairing_survey_constructs.json", {"analyses": [
        {"name": "self-efficacy Q13 -> Q5", "statistic": "pearson", "x": "learner:self_efficacy", "y": "learner:q5"},
        {"name": "RTQ understanding -> Q5", "statistic": "pearson", "x": "learner:rtq_understanding", "y": "learner:q5"},
        {"name": "help-seeking -> Q5", "statistic": "pearson", "x": "learner:help_seeking", "y": "learner:q5"},
        {"name": "found vs not-found (Q5)", "statistic": "cohens_d",
         "group_a": "learner:q5|help_found", "group_b": "learner:q5|help_not_found"},
    ]})
    write_json(out / "pairing_validation.json", {"analyses": [
        {"name": "instructor agreement", "statistic": "spearman", "x": "topic:priority", "y": "topic:concern"},
        {"name": "student alignment", "statistic": "spearman", "x": "topic:priority", "y": "topic:survey_difficulty"},
        {"name": "prevalence alone vs survey", "statistic": "spearman", "x": "topic:prevalence", "y": "topic:survey_difficulty"},
        {"name": "isolated exposure AUC", "statistic": "auc",
         "group_a": "learner:exposure|isolated", "group_b": "learner:exposure|unidentified"},
    ]})


def main() -> int:
    build_priority_reference(HERE / "priority_reference")
    build_channel_reference(HERE / "channel_reference")
    build_json(HERE)
    generate_cohort(CohortSpec(), SYNTHETIC_SEED).write(HERE / "synthetic")
    return 0


if __name__ == "__main__":
    sys.exit(main())
