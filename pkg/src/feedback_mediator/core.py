"""Domain vocabulary: topics, the prerequisite graph, learners and cohort records."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

LABELS = ("correct", "incorrect", "unknown")
LIKERT_MIN, LIKERT_MAX = 1, 6


@dataclass(frozen=True)
class Topic:
    id: str
    name: str = ""


@dataclass(frozen=True)
class KnowledgeGraph:
    topics: tuple[Topic, ...] = ()
    prerequisites: tuple[tuple[str, str], ...] = ()

    @property
    def topic_ids(self) -> frozenset[str]:
        return frozenset(t.id for t in self.topics)

    def topological_order(self) -> list[str] | None:
        """Kahn's algorithm with lexicographic tie-breaks; ``None`` if cyclic."""
        ids = sorted(self.topic_ids)
        indeg = {t: 0 for t in ids}
        out: dict[str, list[str]] = {t: [] for t in ids}
        for src, dst in set(self.prerequisites):
            if src in indeg and dst in indeg:
                out[src].append(dst)
                indeg[dst] += 1
        ready = sorted(t for t in ids if indeg[t] == 0)
        order: list[str] = []
        while ready:
            t = ready.pop(0)
            order.append(t)
            for nxt in sorted(out[t]):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
            ready.sort()
        return order if len(order) == len(ids) else None


@dataclass(frozen=True)
class QuestionRecord:
    learner: str
    topic: str
    label: str
    week: int


@dataclass(frozen=True)
class SurveyResponse:
    learner: str
    item: str
    value: int


@dataclass(frozen=True)
class HelpEvent:
    learner: str
    week: int
    resolved: bool


@dataclass(frozen=True)
class CodedSegment:
    segment_id: str
    theme: str
    is_friction: bool


@dataclass(frozen=True)
class Codebook:
    """Interview themes and the subset that counts as teacher friction."""

    themes: tuple[str, ...]
    friction_themes: frozenset[str]

    def __post_init__(self) -> None:
        unknown = set(self.friction_themes) - set(self.themes)
        if unknown:
            raise ValueError(f"friction themes not in codebook: {sorted(unknown)}")

    def segment(self, segment_id: str, theme: str) -> CodedSegment:
        if theme not in self.themes:
            raise ValueError(f"theme {theme!r} is not in the codebook")
        return CodedSegment(segment_id, theme, theme in self.friction_themes)


CONSTRUCTS = (
    "Q5_topic",
    "help_seeking",
    "self_efficacy",
    "rtq_understanding",
    "rtq_reflection",
    "rtq_critical_reflection",
    "rtq_other",
    "open_feedback",
)


@dataclass(frozen=True)
class SurveyItem:
    item_id: str
    construct: str
    topic: str | None = None
    scale_min: int = LIKERT_MIN
    scale_max: int = LIKERT_MAX

    def __post_init__(self) -> None:
        if self.construct not in CONSTRUCTS:
            raise ValueError(f"item {self.item_id!r}: unknown construct {self.construct!r}")
        if self.construct == "Q5_topic" and not self.topic:
            raise ValueError(f"item {self.item_id!r}: Q5_topic items need a topic id")
        if self.construct != "Q5_topic" and self.topic is not None:
            raise ValueError(f"item {self.item_id!r}: only Q5_topic items carry a topic")
        if self.scale_min >= self.scale_max:
            raise ValueError(f"item {self.item_id!r}: scale_min must be < scale_max")


@dataclass(frozen=True)
class SurveyItemMap:
    entries: Mapping[str, SurveyItem]

    def __post_init__(self) -> None:
        for key, item in self.entries.items():
            if key != item.item_id:
                raise ValueError(f"item map key {key!r} does not match item id {item.item_id!r}")

    def __contains__(self, item_id: object) -> bool:
        return item_id in self.entries

    def __getitem__(self, item_id: str) -> SurveyItem:
        return self.entries[item_id]

    def items_for(self, *constructs: str) -> list[SurveyItem]:
        return sorted(
            (i for i in self.entries.values() if i.construct in constructs),
            key=lambda i: i.item_id,
        )

    def topic_items(self) -> dict[str, list[SurveyItem]]:
        """Q5 items grouped by topic id."""
        out: dict[str, list[SurveyItem]] = {}
        for item in self.items_for("Q5_topic"):
            out.setdefault(item.topic, []).append(item)
        return out


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    locator: str = ""

    def __str__(self) -> str:
        where = f" [{self.locator}]" if self.locator else ""
        return f"{self.kind}: {self.message}{where}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class CohortDataset:
    graph: KnowledgeGraph
    learners: frozenset[str]
    question_records: tuple[QuestionRecord, ...] = ()
    survey_responses: tuple[SurveyResponse, ...] = ()
    help_events: tuple[HelpEvent, ...] = ()
    teacher_segments: tuple[CodedSegment, ...] = ()
    weeks: tuple[int, ...] = ()
    # Source locators ("file:line") for each record, parallel to the tuples above.
    locators: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False)

    def locator(self, stream: str, index: int) -> str:
        locs = self.locators.get(stream, ())
        return locs[index] if index < len(locs) else f"{stream}[{index}]"


def _find_cycle(graph: KnowledgeGraph) -> list[str]:
    """One directed cycle among valid edges, as a node path; [] when acyclic."""
    ids = graph.topic_ids
    adj: dict[str, list[str]] = {t: [] for t in ids}
    for src, dst in sorted(set(graph.prerequisites)):
        if src in ids and dst in ids and src != dst:
            adj[src].append(dst)
    color = dict.fromkeys(ids, 0)
    parent: dict[str, str] = {}
    for root in sorted(ids):
        if color[root]:
            continue
        stack = [(root, iter(adj[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                continue
            if color[nxt] == 0:
                color[nxt] = 1
                parent[nxt] = node
                stack.append((nxt, iter(adj[nxt])))
            elif color[nxt] == 1:
                path = [node]
                while path[-1] != nxt:
                    path.append(parent[path[-1]])
                return list(reversed(path)) + [nxt]
    return []


def validate_graph(graph: KnowledgeGraph) -> ValidationResult:
    """Check topic-id uniqueness, edge endpoints, self-loops and acyclicity."""
    found: list[Violation] = []
    counts = Counter(t.id for t in graph.topics)
    for t in graph.topics:
        if not t.id:
            found.append(Violation("empty-topic-id", "topic id must be nonempty", f"name={t.name!r}"))
    for tid, c in sorted(counts.items()):
        if c > 1 and tid:
            found.append(Violation("duplicate-topic", f"topic id {tid!r} appears {c} times", tid))
    ids = graph.topic_ids
    for src, dst in graph.prerequisites:
        edge = f"{src}->{dst}"
        if src not in ids:
            found.append(Violation("dangling-edge", f"unknown prerequisite topic {src!r}", edge))
        if dst not in ids:
            found.append(Violation("dangling-edge", f"unknown dependent topic {dst!r}", edge))
        if src == dst:
            found.append(Violation("self-loop", f"topic {src!r} lists itself as prerequisite", edge))
    cycle = _find_cycle(graph)
    if cycle:
        found.append(Violation("cycle", "prerequisite cycle " + " -> ".join(cycle), cycle[0]))
    return ValidationResult(tuple(found))


def validate_cohort(
    data: CohortDataset,
    item_map: SurveyItemMap | None = None,
    codebook: Codebook | None = None,
) -> ValidationResult:
    """Referential and range checks over every record of ``data``.

    Survey items and their scales are checked when ``item_map`` is given, and
    segment themes when ``codebook`` is given. Violations come back sorted.
    """
    found = list(validate_graph(data.graph).violations)
    topics = data.graph.topic_ids
    learners = data.learners
    weeks = set(data.weeks)

    def check_learner(stream: str, i: int, learner: str) -> None:
        if not learner:
            found.append(Violation("empty-learner-id", "learner id must be nonempty", data.locator(stream, i)))
        elif learner not in learners:
            found.append(Violation("dangling-learner", f"unknown learner {learner!r}", data.locator(stream, i)))

    def check_week(stream: str, i: int, week: int) -> None:
        if week not in weeks:
            found.append(Violation("week-out-of-range", f"week {week} not in cohort weeks", data.locator(stream, i)))

    for w in data.weeks:
        if w < 1:
            found.append(Violation("bad-week", f"week index {w} must be >= 1", "weeks"))

    for i, q in enumerate(data.question_records):
        check_learner("questions", i, q.learner)
        if q.topic not in topics:
            found.append(Violation("dangling-topic", f"unknown topic {q.topic!r}", data.locator("questions", i)))
        if q.label not in LABELS:
            found.append(Violation("bad-label", f"label {q.label!r} not in {LABELS}", data.locator("questions", i)))
        check_week("questions", i, q.week)

    for i, s in enumerate(data.survey_responses):
        check_learner("survey", i, s.learner)
        if not LIKERT_MIN <= s.value <= LIKERT_MAX:
            found.append(Violation(
                "likert-out-of-range",
                f"value {s.value} outside [{LIKERT_MIN}, {LIKERT_MAX}]",
                data.locator("survey", i),
            ))
        if item_map is not None:
            if s.item not in item_map:
                found.append(Violation("unknown-item", f"survey item {s.item!r} not in item map", data.locator("survey", i)))
            else:
                item = item_map[s.item]
                if not item.scale_min <= s.value <= item.scale_max:
                    found.append(Violation(
                        "likert-out-of-range",
                        f"value {s.value} outside item scale [{item.scale_min}, {item.scale_max}]",
                        data.locator("survey", i),
                    ))
                if item.topic is not None and item.topic not in topics:
                    found.append(Violation("dangling-topic", f"item {s.item!r} maps to unknown topic {item.topic!r}", data.locator("survey", i)))

    for i, h in enumerate(data.help_events):
        check_learner("help_events", i, h.learner)
        check_week("help_events", i, h.week)

    for i, seg in enumerate(data.teacher_segments):
        if codebook is None:
            continue
        if seg.theme not in codebook.themes:
            found.append(Violation("unknown-theme", f"theme {seg.theme!r} not in codebook", data.locator("segments", i)))
        elif seg.is_friction != (seg.theme in codebook.friction_themes):
            found.append(Violation("friction-mismatch", f"segment {seg.segment_id!r} friction flag disagrees with codebook", data.locator("segments", i)))

    seg_ids = Counter(s.segment_id for s in data.teacher_segments)
    for sid, c in sorted(seg_ids.items()):
        if c > 1:
            found.append(Violation("duplicate-segment", f"segment id {sid!r} appears {c} times", sid))

    found.sort(key=lambda v: (v.kind, v.locator, v.message))
    return ValidationResult(tuple(found))
