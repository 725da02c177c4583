"""File formats: CSV record streams, JSON structures, run manifests.

Record streams are UTF-8 CSV with these exact headers::

    questions.csv          learner_id,topic_id,label,week
    survey.csv             learner_id,item_id,value
    help_events.csv        learner_id,week,resolved
    segments.csv           segment_id,theme
    channels.csv           learner_id,rho_raw,rho_help,rho_refl
    difficulty_weeks.csv   learner_id,week
    learners.csv           learner_id
    concerns.csv           topic_id,concern

Structured inputs (graph, item map, codebook, weight profiles, config) and all
structured outputs are JSON.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

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
    validate_cohort,
)
from .mediation import WeightProfile

HEADERS = {
    "questions": ("learner_id", "topic_id", "label", "week"),
    "survey": ("learner_id", "item_id", "value"),
    "help_events": ("learner_id", "week", "resolved"),
    "segments": ("segment_id", "theme"),
    "channels": ("learner_id", "rho_raw", "rho_help", "rho_refl"),
    "difficulty_weeks": ("learner_id", "week"),
    "learners": ("learner_id",),
    "concerns": ("topic_id", "concern"),
}

_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f"}


class DataError(ValueError):
    """Unreadable, malformed, or inconsistent input data."""


@dataclass(frozen=True)
class DatasetPaths:
    graph: Path | None = None
    item_map: Path | None = None
    codebook: Path | None = None
    cohort: Path | None = None
    learners: Path | None = None
    questions: Path | None = None
    survey: Path | None = None
    help_events: Path | None = None
    segments: Path | None = None
    difficulty_weeks: Path | None = None
    concerns: Path | None = None
    channels: Path | None = None

    FILENAMES = {
        "graph": "graph.json",
        "item_map": "item_map.json",
        "codebook": "codebook.json",
        "cohort": "cohort.json",
        "learners": "learners.csv",
        "questions": "questions.csv",
        "survey": "survey.csv",
        "help_events": "help_events.csv",
        "segments": "segments.csv",
        "difficulty_weeks": "difficulty_weeks.csv",
        "concerns": "concerns.csv",
        "channels": "channels.csv",
    }

    @classmethod
    def from_dir(cls, directory: str | Path) -> "DatasetPaths":
        """Conventional file names inside ``directory``; absent files stay ``None``."""
        d = Path(directory)
        found = {k: d / name for k, name in cls.FILENAMES.items() if (d / name).is_file()}
        return cls(**found)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str], base: str | Path = ".") -> "DatasetPaths":
        base = Path(base)
        names = {f.name for f in fields(cls)}
        unknown = set(mapping) - names - {"dir"}
        if unknown:
            raise DataError(f"unknown dataset keys: {sorted(unknown)}")
        paths = cls.from_dir(base / mapping["dir"]) if "dir" in mapping else cls()
        explicit = {k: base / v for k, v in mapping.items() if k != "dir" and v is not None}
        return replace(paths, **explicit)

    def present(self) -> list[Path]:
        return [p for p in (getattr(self, f.name) for f in fields(self)) if p is not None]


@dataclass(frozen=True)
class Bundle:
    """A validated dataset plus the side inputs the pipelines read with it."""

    dataset: CohortDataset
    item_map: SurveyItemMap | None
    codebook: Codebook
    difficulty_weeks: dict[str, frozenset[int]] = field(default_factory=dict)
    concerns: dict[str, float] = field(default_factory=dict)


# --- low level readers -------------------------------------------------------


def _read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc


def read_csv(path: str | Path, stream: str) -> list[tuple[str, dict[str, str]]]:
    """Rows of a record stream as ``(locator, row)``; the header must match exactly."""
    path = Path(path)
    expected = HEADERS[stream]
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}:1: empty file; expected header {','.join(expected)}")
            if tuple(h.strip() for h in header) != expected:
                raise DataError(f"{path}:1: header {','.join(header)!r} != {','.join(expected)!r}")
            rows = []
            for row in reader:
                line = reader.line_num
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(expected):
                    raise DataError(f"{path}:{line}: expected {len(expected)} fields, got {len(row)}")
                rows.append((f"{path}:{line}", dict(zip(expected, (c.strip() for c in row)))))
            return rows
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8") from exc


def _int(value: str, what: str, loc: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"{loc}: {what} {value!r} is not an integer") from None


def _float(value: str, what: str, loc: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(f"{loc}: {what} {value!r} is not a number") from None


def _bool(value: str, what: str, loc: str) -> bool:
    v = value.lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise DataError(f"{loc}: {what} {value!r} is not a boolean")


# --- structured inputs -------------------------------------------------------


def load_graph(path: str | Path) -> KnowledgeGraph:
    raw = _read_json(Path(path))
    try:
        topics = tuple(Topic(str(t["id"]), str(t.get("name", ""))) for t in raw["topics"])
        edges = tuple((str(a), str(b)) for a, b in raw.get("prerequisites", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed graph ({exc})") from exc
    return KnowledgeGraph(topics, edges)


def graph_to_json(graph: KnowledgeGraph) -> dict:
    return {
        "topics": [{"id": t.id, "name": t.name} for t in graph.topics],
        "prerequisites": [list(e) for e in graph.prerequisites],
    }


def load_item_map(path: str | Path) -> SurveyItemMap:
    raw = _read_json(Path(path))
    try:
        items = [
            SurveyItem(
                item_id=str(e["item_id"]),
                construct=str(e["construct"]),
                topic=e.get("topic"),
                scale_min=int(e.get("scale_min", 1)),
                scale_max=int(e.get("scale_max", 6)),
            )
            for e in raw["items"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed item map ({exc})") from exc
    ids = [i.item_id for i in items]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate item ids")
    return SurveyItemMap({i.item_id: i for i in items})


def item_map_to_json(item_map: SurveyItemMap) -> dict:
    items = []
    for item in item_map.entries.values():
        entry = {"item_id": item.item_id, "construct": item.construct}
        if item.topic is not None:
            entry["topic"] = item.topic
        entry["scale_min"] = item.scale_min
        entry["scale_max"] = item.scale_max
        items.append(entry)
    return {"items": items}


def load_codebook(path: str | Path | None = None) -> Codebook:
    """The codebook at ``path``, or the packaged default."""
    if path is None:
        raw = json.loads(resources.files("feedback_mediator").joinpath("data/codebook.json").read_text("utf-8"))
    else:
        raw = _read_json(Path(path))
    try:
        return Codebook(tuple(raw["themes"]), frozenset(raw["friction_themes"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path or 'default codebook'}: malformed codebook ({exc})") from exc


def codebook_to_json(codebook: Codebook) -> dict:
    return {"themes": list(codebook.themes), "friction_themes": sorted(codebook.friction_themes)}


def load_profiles(path: str | Path, renormalize: bool = False) -> list[WeightProfile]:
    raw = _read_json(Path(path))
    entries = raw["profiles"] if isinstance(raw, dict) else raw
    try:
        return [
            WeightProfile.from_weights(
                str(e["name"]), float(e["w_r"]), float(e["w_d"]), float(e["w_f"]), renormalize
            )
            for e in entries
        ]
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed profiles ({exc})") from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


# --- record streams ----------------------------------------------------------


def _questions(path: Path) -> tuple[list[QuestionRecord], list[str]]:
    recs, locs = [], []
    for loc, row in read_csv(path, "questions"):
        recs.append(QuestionRecord(row["learner_id"], row["topic_id"], row["label"], _int(row["week"], "week", loc)))
        locs.append(loc)
    return recs, locs


def _survey(path: Path) -> tuple[list[SurveyResponse], list[str]]:
    recs, locs = [], []
    for loc, row in read_csv(path, "survey"):
        recs.append(SurveyResponse(row["learner_id"], row["item_id"], _int(row["value"], "value", loc)))
        locs.append(loc)
    return recs, locs


def _help(path: Path) -> tuple[list[HelpEvent], list[str]]:
    recs, locs = [], []
    for loc, row in read_csv(path, "help_events"):
        recs.append(HelpEvent(row["learner_id"], _int(row["week"], "week", loc), _bool(row["resolved"], "resolved", loc)))
        locs.append(loc)
    return recs, locs


def _segments(path: Path, codebook: Codebook) -> tuple[list[CodedSegment], list[str]]:
    recs, locs = [], []
    for loc, row in read_csv(path, "segments"):
        theme = row["theme"]
        if theme not in codebook.themes:
            raise DataError(f"{loc}: theme {theme!r} is not in the codebook")
        recs.append(codebook.segment(row["segment_id"], theme))
        locs.append(loc)
    return recs, locs


def load_channels(path: str | Path) -> dict[str, tuple[float, float, float]]:
    """Pre-normalized channel values, accepted verbatim (each must lie in [0, 1])."""
    out: dict[str, tuple[float, float, float]] = {}
    for loc, row in read_csv(path, "channels"):
        learner = row["learner_id"]
        if not learner:
            raise DataError(f"{loc}: empty learner id")
        if learner in out:
            raise DataError(f"{loc}: duplicate learner {learner!r}")
        vals = tuple(_float(row[c], c, loc) for c in ("rho_raw", "rho_help", "rho_refl"))
        for name, v in zip(("rho_raw", "rho_help", "rho_refl"), vals):
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{loc}: {name} = {v} outside [0, 1]")
        out[learner] = vals
    return out


def load_difficulty_weeks(path: str | Path) -> dict[str, frozenset[int]]:
    weeks: dict[str, set[int]] = {}
    for loc, row in read_csv(path, "difficulty_weeks"):
        weeks.setdefault(row["learner_id"], set()).add(_int(row["week"], "week", loc))
    return {k: frozenset(v) for k, v in sorted(weeks.items())}


def load_concerns(path: str | Path) -> dict[str, float]:
    out: dict[str, float] = {}
    for loc, row in read_csv(path, "concerns"):
        if row["topic_id"] in out:
            raise DataError(f"{loc}: duplicate topic {row['topic_id']!r}")
        out[row["topic_id"]] = _float(row["concern"], "concern", loc)
    return out


def load_dataset(
    paths: DatasetPaths,
    item_map: SurveyItemMap | None = None,
    codebook: Codebook | None = None,
) -> CohortDataset:
    """Parse and validate a cohort; any violation raises :class:`DataError`.

    The learner roster is ``learners.csv`` when present, otherwise every learner
    id seen in the record streams. Weeks come from ``cohort.json`` when present,
    otherwise ``1..max week observed``.
    """
    if paths.graph is None:
        raise DataError("dataset has no graph file")
    graph = load_graph(paths.graph)
    if codebook is None:
        codebook = load_codebook(paths.codebook)
    if item_map is None and paths.item_map is not None:
        item_map = load_item_map(paths.item_map)

    questions, q_locs = _questions(paths.questions) if paths.questions else ([], [])
    survey, s_locs = _survey(paths.survey) if paths.survey else ([], [])
    if survey and item_map is None:
        raise DataError(f"{paths.survey}: survey responses need an item map")
    help_events, h_locs = _help(paths.help_events) if paths.help_events else ([], [])
    segments, g_locs = _segments(paths.segments, codebook) if paths.segments else ([], [])

    if paths.learners is not None:
        learners = [row["learner_id"] for _, row in read_csv(paths.learners, "learners")]
        if len(set(learners)) != len(learners):
            raise DataError(f"{paths.learners}: duplicate learner ids")
        roster = frozenset(learners)
    else:
        roster = frozenset(
            [q.learner for q in questions] + [s.learner for s in survey] + [h.learner for h in help_events]
        ) - {""}

    if paths.cohort is not None:
        meta = _read_json(paths.cohort)
        try:
            weeks = tuple(int(w) for w in meta["weeks"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{paths.cohort}: malformed cohort metadata ({exc})") from exc
    else:
        seen = [q.week for q in questions] + [h.week for h in help_events]
        weeks = tuple(range(1, max(seen, default=1) + 1))

    data = CohortDataset(
        graph=graph,
        learners=roster,
        question_records=tuple(questions),
        survey_responses=tuple(survey),
        help_events=tuple(help_events),
        teacher_segments=tuple(segments),
        weeks=weeks,
        locators={
            "questions": tuple(q_locs),
            "survey": tuple(s_locs),
            "help_events": tuple(h_locs),
            "segments": tuple(g_locs),
        },
    )
    result = validate_cohort(data, item_map, codebook)
    if not result.ok:
        shown = "\n  ".join(str(v) for v in result.violations[:50])
        more = len(result.violations) - 50
        tail = f"\n  ... and {more} more" if more > 0 else ""
        raise DataError(f"dataset failed validation ({len(result.violations)} violations):\n  {shown}{tail}")
    return data


def load_bundle(paths: DatasetPaths) -> Bundle:
    item_map = load_item_map(paths.item_map) if paths.item_map else None
    codebook = load_codebook(paths.codebook)
    data = load_dataset(paths, item_map, codebook)
    weeks = load_difficulty_weeks(paths.difficulty_weeks) if paths.difficulty_weeks else {}
    for learner in weeks:
        if learner not in data.learners:
            raise DataError(f"{paths.difficulty_weeks}: unknown learner {learner!r}")
    concerns = load_concerns(paths.concerns) if paths.concerns else {}
    for topic in concerns:
        if topic not in data.graph.topic_ids:
            raise DataError(f"{paths.concerns}: unknown topic {topic!r}")
    return Bundle(data, item_map, codebook, weeks, concerns)


# --- writers -----------------------------------------------------------------


def write_csv(path: str | Path, stream: str | Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    header = HEADERS[stream] if isinstance(stream, str) else tuple(stream)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_dataset(
    data: CohortDataset,
    out_dir: str | Path,
    item_map: SurveyItemMap | None = None,
    codebook: Codebook | None = None,
) -> DatasetPaths:
    """Write every stream of ``data`` under conventional names; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "graph.json", graph_to_json(data.graph))
    write_json(out / "cohort.json", {"weeks": list(data.weeks)})
    write_csv(out / "learners.csv", "learners", ([l] for l in sorted(data.learners)))
    write_csv(out / "questions.csv", "questions", ((q.learner, q.topic, q.label, q.week) for q in data.question_records))
    write_csv(out / "survey.csv", "survey", ((s.learner, s.item, s.value) for s in data.survey_responses))
    write_csv(
        out / "help_events.csv",
        "help_events",
        ((h.learner, h.week, "true" if h.resolved else "false") for h in data.help_events),
    )
    write_csv(out / "segments.csv", "segments", ((s.segment_id, s.theme) for s in data.teacher_segments))
    if item_map is not None:
        write_json(out / "item_map.json", item_map_to_json(item_map))
    if codebook is not None:
        write_json(out / "codebook.json", codebook_to_json(codebook))
    return DatasetPaths.from_dir(out)


# --- manifests ---------------------------------------------------------------


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    inputs: tuple[tuple[str, str], ...]  # (path, sha256)
    config: dict
    tool_version: str
    timestamp: str

    @classmethod
    def build(cls, command: str, inputs: Iterable[str | Path], config: Mapping) -> "RunManifest":
        from . import __version__

        unique = sorted({str(p) for p in inputs})
        return cls(
            command=command,
            inputs=tuple((p, sha256_file(p)) for p in unique),
            config=dict(config),
            tool_version=__version__,
            timestamp=datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        )

    def as_dict(self) -> dict:
        return {
            "tool": "feedback-mediator",
            "tool_version": self.tool_version,
            "command": self.command,
            "timestamp": self.timestamp,
            "inputs": [{"path": p, "sha256": d} for p, d in self.inputs],
            "config": self.config,
        }
