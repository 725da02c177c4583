"""End-to-end runs behind the CLI subcommands. Each writes its outputs plus a manifest."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .core import CohortDataset
from .io import Bundle, DataError, RunManifest, write_csv, write_json
from .mediation import (
    DecisionRecord,
    WeightProfile,
    build_topic_signals,
    rank_topics,
    sensitivity_sweep,
)
from .signals import FrictionSummary, GapConfig, TopicSignals, compute_friction, compute_gap_prevalence, compute_survey_difficulty
from .stats import (
    DegenerateSampleError,
    PairedSample,
    ResampleConfig,
    TwoGroupSample,
    bootstrap_ci,
    cohens_d,
    pearson_r,
    permutation_p,
    rank_auc,
    spearman_rho,
)
from .synthesis import (
    LearnerRiskProfile,
    SynthesisConfig,
    classify_learners,
    compute_channels,
    compute_exposure_scores,
    summarize,
)

NO_TRACE_NOTE = "no trace evidence; R forced to 0"


def fmt3(x: float) -> str:
    return f"{x:.3f}"


def write_manifest(out_dir: Path, command: str, inputs: Iterable[str | Path], config: Mapping) -> None:
    write_json(out_dir / "manifest.json", RunManifest.build(command, inputs, config).as_dict())


# --- mediate -----------------------------------------------------------------


@dataclass(frozen=True)
class MediationResult:
    signals: list[TopicSignals]
    friction: FrictionSummary
    records: list[DecisionRecord]


def mediate_dataset(
    data: CohortDataset,
    item_map,
    weights: WeightProfile,
    gap_cfg: GapConfig = GapConfig(),
) -> MediationResult:
    """Signals, friction and ranked decision records for a validated cohort.

    With no question records at all, every prevalence is 0 and each record
    carries a note saying so; with no survey responses every D is 0.
    """
    if data.question_records:
        prevalence = compute_gap_prevalence(data, gap_cfg)
    else:
        prevalence = {t: 0.0 for t in sorted(data.graph.topic_ids)}
    survey = None
    if data.survey_responses and item_map is not None:
        survey = compute_survey_difficulty(data, item_map)
    friction = compute_friction(data.teacher_segments)
    signals = build_topic_signals(prevalence, survey)
    records = rank_topics(signals, friction.friction_f, weights)
    if not data.question_records:
        records = [replace(r, diagnostics=(NO_TRACE_NOTE,) + r.diagnostics) for r in records]
    return MediationResult(signals, friction, records)


def run_mediate(
    bundle: Bundle,
    weights: WeightProfile,
    out_dir: str | Path,
    gap_cfg: GapConfig = GapConfig(),
    inputs: Sequence[str | Path] = (),
    config: Mapping | None = None,
) -> MediationResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = mediate_dataset(bundle.dataset, bundle.item_map, weights, gap_cfg)
    write_csv(
        out / "priorities.csv",
        ("topic", "R", "D", "F", "P", "rank", "survey_available"),
        (
            (r.topic, fmt3(r.prevalence_r), fmt3(r.disagreement_d), fmt3(r.friction_f), fmt3(r.priority_p), r.rank,
             "true" if r.survey_available else "false")
            for r in result.records
        ),
    )
    write_json(out / "decision_records.json", {
        "weights": weights.as_dict(),
        "gap_config": asdict(gap_cfg),
        "friction": asdict(result.friction),
        "records": [r.as_dict() for r in result.records],
    })
    write_manifest(out, "mediate", inputs, config or {})
    return result


# --- synthesize --------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    profiles: list[LearnerRiskProfile]
    skipped: dict[str, str]
    summary: dict[str, int]


def synthesize_dataset(data: CohortDataset, item_map, cfg: SynthesisConfig) -> SynthesisResult:
    if item_map is None:
        raise DataError("synthesis from raw data needs an item map")
    channels = compute_channels(data, item_map, cfg)
    profiles = classify_learners(channels.normalized, cfg)
    return SynthesisResult(profiles, channels.skipped, summarize(profiles))


def run_synthesize(
    source: Bundle | Mapping[str, tuple[float, float, float]],
    cfg: SynthesisConfig,
    out_dir: str | Path,
    inputs: Sequence[str | Path] = (),
    config: Mapping | None = None,
) -> SynthesisResult:
    """Synthesize from a cohort bundle, or from pre-normalized channels taken verbatim."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(source, Bundle):
        result = synthesize_dataset(source.dataset, source.item_map, cfg)
        origin = "dataset"
    else:
        profiles = classify_learners(source, cfg)
        result = SynthesisResult(profiles, {}, summarize(profiles))
        origin = "channels"
    write_json(out / "synthesis.json", {
        "source": origin,
        "config": synthesis_config_dict(cfg),
        "summary": result.summary,
        "profiles": [p.as_dict() for p in result.profiles],
        "skipped": [{"learner": l, "reason": r} for l, r in sorted(result.skipped.items())],
    })
    write_csv(out / "skipped_learners.csv", ("learner_id", "reason"), sorted(result.skipped.items()))
    write_manifest(out, "synthesize", inputs, config or {})
    return result


def synthesis_config_dict(cfg: SynthesisConfig) -> dict:
    return asdict(cfg)


# --- sweep -------------------------------------------------------------------


def run_sweep(
    bundle: Bundle,
    profiles: Sequence[WeightProfile],
    k: int,
    out_dir: str | Path,
    gap_cfg: GapConfig = GapConfig(),
    inputs: Sequence[str | Path] = (),
    config: Mapping | None = None,
):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = mediate_dataset(bundle.dataset, bundle.item_map, profiles[0], gap_cfg)
    reports = sensitivity_sweep(base.signals, base.friction.friction_f, profiles, k)
    write_csv(
        out / "sweep.csv",
        ("profile_a", "profile_b", "spearman_rho", "k", "top_k_overlap"),
        ((r.profile_a, r.profile_b, fmt3(r.spearman_rho), r.top_k_overlap[0], r.top_k_overlap[1]) for r in reports),
    )
    write_json(out / "sweep.json", {
        "profiles": [p.as_dict() for p in profiles],
        "friction_f": base.friction.friction_f,
        "reports": [r.as_dict() for r in reports],
    })
    write_manifest(out, "sweep", inputs, config or {})
    return reports


# --- validate ----------------------------------------------------------------

LEARNER_CONSTRUCTS = {
    "q5": ("Q5_topic",),
    "help_seeking": ("help_seeking",),
    "self_efficacy": ("self_efficacy",),
    "rtq_understanding": ("rtq_understanding",),
    "rtq_reflection": ("rtq_reflection",),
    "rtq_critical_reflection": ("rtq_critical_reflection",),
}
TOPIC_SOURCES = ("priority", "prevalence", "survey_difficulty", "disagreement", "concern")
GROUPS = (
    "all",
    "isolated",
    "joint",
    "channel_only",
    "unidentified",
    "not_isolated",
    "help_found",
    "help_not_found",
)


class ValidationContext:
    """Lazily computed vectors that pairing specs refer to by name."""

    def __init__(self, bundle: Bundle, weights: WeightProfile, synth_cfg: SynthesisConfig, gap_cfg: GapConfig):
        self.bundle = bundle
        self.weights = weights
        self.synth_cfg = synth_cfg
        self.gap_cfg = gap_cfg
        self._mediation: MediationResult | None = None
        self._synthesis: SynthesisResult | None = None

    @property
    def mediation(self) -> MediationResult:
        if self._mediation is None:
            self._mediation = mediate_dataset(self.bundle.dataset, self.bundle.item_map, self.weights, self.gap_cfg)
        return self._mediation

    @property
    def synthesis(self) -> SynthesisResult:
        if self._synthesis is None:
            self._synthesis = synthesize_dataset(self.bundle.dataset, self.bundle.item_map, self.synth_cfg)
        return self._synthesis

    def topic_values(self, name: str, scope: str) -> dict[str, float]:
        recs = self.mediation.records
        if scope == "survey":
            recs = [r for r in recs if r.survey_available]
        elif scope != "all":
            raise DataError(f"unknown topic scope {scope!r}")
        if name == "priority":
            return {r.topic: r.priority_p for r in recs}
        if name == "prevalence":
            return {r.topic: r.prevalence_r for r in recs}
        if name == "disagreement":
            return {r.topic: r.disagreement_d for r in recs}
        if name == "survey_difficulty":
            return {r.topic: r.survey_difficulty_s for r in recs if r.survey_available}
        if name == "concern":
            concerns = self.bundle.concerns
            if not concerns:
                raise DataError("topic:concern needs a concerns.csv input")
            return {r.topic: concerns[r.topic] for r in recs if r.topic in concerns}
        raise DataError(f"unknown topic source {name!r}; expected one of {TOPIC_SOURCES}")

    def learner_values(self, name: str) -> dict[str, float]:
        data = self.bundle.dataset
        if name in LEARNER_CONSTRUCTS:
            if self.bundle.item_map is None:
                raise DataError(f"learner:{name} needs an item map")
            items = {i.item_id for i in self.bundle.item_map.items_for(*LEARNER_CONSTRUCTS[name])}
            vals: dict[str, list[int]] = {}
            for r in data.survey_responses:
                if r.item in items:
                    vals.setdefault(r.learner, []).append(r.value)
            return {l: math.fsum(v) / len(v) for l, v in sorted(vals.items())}
        if name == "help_resolved_rate":
            events: dict[str, list[bool]] = {}
            for h in data.help_events:
                events.setdefault(h.learner, []).append(h.resolved)
            return {l: sum(v) / len(v) for l, v in sorted(events.items())}
        if name == "sigma":
            return {p.learner: p.sigma for p in self.synthesis.profiles}
        if name == "exposure":
            if not self.bundle.difficulty_weeks:
                raise DataError("learner:exposure needs a difficulty_weeks.csv input")
            return compute_exposure_scores(self.mediation.records, data, self.bundle.difficulty_weeks)
        raise DataError(f"unknown learner source {name!r}")

    def group(self, name: str) -> set[str] | None:
        if name == "all":
            return None
        if name in ("isolated", "joint", "channel_only", "unidentified"):
            return {p.learner for p in self.synthesis.profiles if p.category == name}
        if name == "not_isolated":
            return {p.learner for p in self.synthesis.profiles if not p.isolated}
        if name in ("help_found", "help_not_found"):
            found: dict[str, bool] = {}
            for h in self.bundle.dataset.help_events:
                found[h.learner] = found.get(h.learner, False) or h.resolved
            want = name == "help_found"
            return {l for l, f in found.items() if f == want}
        raise DataError(f"unknown learner group {name!r}; expected one of {GROUPS}")

    def vector(self, source: Any, scope: str) -> dict[str, float] | list[float]:
        """A named source as ``{key: value}``, or an inline list as given."""
        if isinstance(source, list):
            return [float(v) for v in source]
        if not isinstance(source, str) or ":" not in source:
            raise DataError(f"source {source!r} must be a number list or 'topic:<name>' / 'learner:<name>[|group]'")
        kind, _, rest = source.partition(":")
        name, _, group = rest.partition("|")
        if kind == "topic":
            if group:
                raise DataError(f"topic sources take no group: {source!r}")
            return self.topic_values(name, scope)
        if kind == "learner":
            vals = self.learner_values(name)
            members = self.group(group or "all")
            return vals if members is None else {l: v for l, v in vals.items() if l in members}
        raise DataError(f"unknown source kind {kind!r} in {source!r}")


def _paired(x, y) -> tuple[list[float], list[float]]:
    if isinstance(x, list) and isinstance(y, list):
        return x, y
    if isinstance(x, list) or isinstance(y, list):
        raise DataError("paired analyses need two inline lists or two named sources")
    keys = sorted(set(x) & set(y))
    return [x[k] for k in keys], [y[k] for k in keys]


def _values(v) -> list[float]:
    return v if isinstance(v, list) else [v[k] for k in sorted(v)]


def run_analysis(spec: Mapping[str, Any], ctx: ValidationContext | None, cfg: ResampleConfig) -> dict:
    name = spec.get("name", spec.get("statistic", "analysis"))
    stat = spec.get("statistic")
    alternative = spec.get("alternative", "greater")
    scope = spec.get("topics", "survey")
    row: dict[str, Any] = {
        "name": name,
        "statistic": stat,
        "alternative": alternative,
        "value": None,
        "n": None,
        "n_a": None,
        "n_b": None,
        "p": None,
        "method": None,
        "draws": None,
        "ci": None,
        "error": None,
    }

    def resolve(key: str):
        if key not in spec:
            raise DataError(f"analysis {name!r} is missing {key!r}")
        if ctx is None and not isinstance(spec[key], list):
            raise DataError(f"analysis {name!r}: named sources need a dataset")
        return ctx.vector(spec[key], scope) if ctx is not None else [float(v) for v in spec[key]]

    try:
        if stat in ("spearman", "pearson"):
            xs, ys = _paired(resolve("x"), resolve("y"))
            sample = PairedSample(xs, ys)
            row["n"] = sample.n
            row["value"] = spearman_rho(sample) if stat == "spearman" else pearson_r(sample)
            perm = permutation_p(sample, stat, cfg, alternative)
        elif stat in ("auc", "cohens_d"):
            sample = TwoGroupSample(_values(resolve("group_a")), _values(resolve("group_b")))
            row["n_a"], row["n_b"] = len(sample.group_a), len(sample.group_b)
            if stat == "auc":
                row["value"] = rank_auc(sample)
                perm = permutation_p(sample, "auc", cfg, alternative)
                row["ci"] = list(bootstrap_ci(sample, "auc", float(spec.get("level", 0.95)), cfg))
            else:
                row["value"] = cohens_d(sample)
                perm = permutation_p(sample, "mean_diff", cfg, alternative)
        else:
            raise DataError(f"analysis {name!r}: unknown statistic {stat!r}")
        row["p"], row["method"], row["draws"] = perm.p, perm.method, perm.draws
    except (DegenerateSampleError, DataError, ValueError, TypeError) as exc:
        row["error"] = str(exc)
    return row


def run_validate(
    ctx: ValidationContext | None,
    pairing: Mapping[str, Any],
    cfg: ResampleConfig,
    out_dir: str | Path,
    inputs: Sequence[str | Path] = (),
    config: Mapping | None = None,
) -> list[dict]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    analyses = pairing.get("analyses")
    if not isinstance(analyses, list) or not analyses:
        raise DataError("pairing spec needs a nonempty 'analyses' list")
    rows = [run_analysis(a, ctx, cfg) for a in analyses]
    write_json(out / "validation.json", {"resample": asdict(cfg), "analyses": rows})

    def cell(v):
        if v is None:
            return ""
        return fmt3(v) if isinstance(v, float) else v

    write_csv(
        out / "validation.csv",
        ("name", "statistic", "value", "n", "p", "method", "draws", "ci_lo", "ci_hi", "error"),
        (
            (
                r["name"], r["statistic"], cell(r["value"]),
                r["n"] if r["n"] is not None else (f"{r['n_a']}+{r['n_b']}" if r["n_a"] is not None else ""),
                "" if r["p"] is None else f"{r['p']:.4f}", cell(r["method"]), cell(r["draws"]),
                "" if r["ci"] is None else fmt3(r["ci"][0]), "" if r["ci"] is None else fmt3(r["ci"][1]),
                cell(r["error"]),
            )
            for r in rows
        ),
    )
    write_manifest(out, "validate", inputs, config or {})
    return rows
