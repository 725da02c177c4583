"""Command-line entry point: ``feedback-mediator <command> [options]``.

Exit codes: 0 success, 1 data or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .io import DataError, DatasetPaths, load_bundle, load_channels, load_profiles
from .mediation import DEFAULT_PROFILE, HIGHER_DISAGREEMENT_PROFILE, MediationError, WeightProfile
from .pipeline import ValidationContext, run_mediate, run_synthesize, run_sweep, run_validate, write_manifest
from .report import render_report
from .signals import GapConfig, SignalError
from .simulate import CohortSpec, SimulationError, generate_cohort
from .stats import DegenerateSampleError, ResampleConfig
from .synthesis import ChannelWeights, SynthesisConfig

COMMANDS = ("mediate", "synthesize", "sweep", "validate", "simulate", "report")


class UsageError(Exception):
    pass


def _globals(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand without clobbering.
    parser.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON config file")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="unsigned 64-bit seed")
    parser.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feedback-mediator", description=__doc__.splitlines()[0])
    _globals(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        _globals(p)
        return p

    def data_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", type=Path, help="dataset directory with conventional file names")

    p = add("mediate", "rank topics and write decision records")
    data_arg(p)
    p.add_argument("--weights", help="w_r,w_d,w_f (overrides config)")
    p.add_argument("--renormalize", action="store_true", help="rescale weights that do not sum to 1")

    p = add("synthesize", "learner risk synthesis and isolated-learner flags")
    data_arg(p)
    p.add_argument("--channels", type=Path, help="pre-normalized channels.csv (used verbatim)")

    p = add("sweep", "weight-profile sensitivity report")
    data_arg(p)
    p.add_argument("--profiles", type=Path, help="JSON weight profiles; first is the reference")
    p.add_argument("--k", type=int, default=None, help="top-k overlap size (default 10)")
    p.add_argument("--renormalize", action="store_true")

    p = add("validate", "statistics report from a pairing spec")
    data_arg(p)
    p.add_argument("--pairing", type=Path, required=True, help="JSON pairing spec")

    p = add("simulate", "write a seeded synthetic cohort")
    p.add_argument("--learners", type=int, default=279)
    p.add_argument("--topics", type=int, default=54)
    p.add_argument("--planted", type=int, default=3, help="planted isolated learners")
    p.add_argument("--weeks", type=int, default=8)
    p.add_argument("--survey-topics", type=int, default=None)

    p = add("report", "markdown summary of previous outputs")
    p.add_argument("--from", dest="sources", type=Path, action="append", default=[],
                   help="directory holding mediate/synthesize/sweep/validate outputs (repeatable)")
    return parser


def _load_config(path: Path | None) -> tuple[dict, Path]:
    if path is None:
        return {}, Path(".")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: cannot read config ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(cfg, dict):
        raise DataError(f"{path}: config must be a JSON object")
    return cfg, path.parent


def _dataset_paths(args, cfg: dict, base: Path) -> DatasetPaths:
    if getattr(args, "data", None) is not None:
        return DatasetPaths.from_dir(args.data)
    if "dataset" in cfg:
        return DatasetPaths.from_mapping(cfg["dataset"], base)
    raise UsageError("no dataset: pass --data DIR or a config with a 'dataset' block")


def _weights(args, cfg: dict) -> WeightProfile:
    renorm = bool(getattr(args, "renormalize", False) or cfg.get("renormalize", False))
    if getattr(args, "weights", None):
        try:
            w = [float(v) for v in args.weights.split(",")]
        except ValueError:
            raise UsageError(f"--weights must be three comma-separated numbers, got {args.weights!r}") from None
        if len(w) != 3:
            raise UsageError("--weights needs exactly three values")
        return WeightProfile.from_weights("custom", *w, renormalize=renorm)
    if "weights" in cfg:
        w = cfg["weights"]
        return WeightProfile.from_weights(
            str(w.get("name", "custom")), float(w["w_r"]), float(w["w_d"]), float(w["w_f"]), renorm
        )
    return DEFAULT_PROFILE


def _synthesis_config(cfg: dict) -> SynthesisConfig:
    raw = dict(cfg.get("synthesis", {}))
    if "channel_weights" in raw:
        raw["channel_weights"] = ChannelWeights(**raw["channel_weights"])
    return SynthesisConfig(**raw)


def _resample_config(args, cfg: dict) -> ResampleConfig:
    raw = dict(cfg.get("resample", {}))
    if "seed" in cfg:
        raw.setdefault("seed", int(cfg["seed"]))
    if hasattr(args, "seed"):
        raw["seed"] = args.seed
    return ResampleConfig(**raw)


def _out_dir(args, cfg: dict, base: Path) -> Path:
    if hasattr(args, "out"):
        return args.out
    if "out" in cfg:
        return base / cfg["out"]
    raise UsageError("no output directory: pass --out DIR")


def _run(args) -> int:
    cfg, base = _load_config(getattr(args, "config", None))
    config_inputs = [args.config] if hasattr(args, "config") else []
    gap_cfg = GapConfig(**cfg.get("gap", {}))
    cmd = args.command

    if cmd == "simulate":
        out = _out_dir(args, cfg, base)
        seed = getattr(args, "seed", cfg.get("seed", 0))
        spec = CohortSpec(
            n_learners=args.learners,
            n_topics=args.topics,
            planted_isolated=args.planted,
            n_weeks=args.weeks,
            survey_topics=args.survey_topics if args.survey_topics is not None else min(19, args.topics),
        )
        cohort = generate_cohort(spec, seed)
        cohort.write(out)
        write_manifest(out, "simulate", config_inputs, {"seed": seed, "cohort_spec": asdict(spec)})
        print(f"wrote synthetic cohort ({spec.n_learners} learners, {spec.n_topics} topics, "
              f"{len(cohort.planted)} planted) to {out}")
        return 0

    if cmd == "report":
        sources = args.sources or ([args.out] if hasattr(args, "out") else [])
        if not sources:
            raise UsageError("report needs --from DIR (or --out DIR holding earlier outputs)")
        out = args.out if hasattr(args, "out") else sources[0]
        out.mkdir(parents=True, exist_ok=True)
        text = render_report(sources)
        (out / "report.md").write_text(text, encoding="utf-8")
        print(f"wrote {out / 'report.md'}")
        return 0

    out = _out_dir(args, cfg, base)

    if cmd == "synthesize":
        synth_cfg = _synthesis_config(cfg)
        effective = {"synthesis": asdict(synth_cfg)}
        if args.channels is not None:
            channels = load_channels(args.channels)
            result = run_synthesize(channels, synth_cfg, out, config_inputs + [args.channels], effective)
        else:
            paths = _dataset_paths(args, cfg, base)
            bundle = load_bundle(paths)
            result = run_synthesize(bundle, synth_cfg, out, config_inputs + paths.present(), effective)
        s = result.summary
        print(f"synthesized {len(result.profiles)} learners: {s['isolated']} isolated, {s['joint']} joint, "
              f"{s['channel_only']} channel-only, {s['unidentified']} unidentified; {len(result.skipped)} skipped")
        return 0

    if cmd == "validate":
        pairing = _load_config(args.pairing)[0]
        resample = _resample_config(args, cfg)
        weights = _weights(args, cfg)
        synth_cfg = _synthesis_config(cfg)
        inputs = config_inputs + [args.pairing]
        ctx = None
        # Pairing specs made only of inline number lists need no dataset.
        if args.data is not None or "dataset" in cfg:
            paths = _dataset_paths(args, cfg, base)
            ctx = ValidationContext(load_bundle(paths), weights, synth_cfg, gap_cfg)
            inputs += paths.present()
        effective = {
            "weights": weights.as_dict(),
            "synthesis": asdict(synth_cfg),
            "resample": asdict(resample),
            "gap": asdict(gap_cfg),
        }
        rows = run_validate(ctx, pairing, resample, out, inputs, effective)
        failed = [r for r in rows if r["error"]]
        for r in rows:
            if r["error"]:
                print(f"{r['name']}: error: {r['error']}", file=sys.stderr)
            else:
                print(f"{r['name']}: {r['statistic']} = {r['value']:.4f}, p = {r['p']:.4f} ({r['method']}, {r['draws']} draws)")
        return 1 if failed else 0

    paths = _dataset_paths(args, cfg, base)
    bundle = load_bundle(paths)
    inputs = config_inputs + paths.present()

    if cmd == "mediate":
        weights = _weights(args, cfg)
        effective = {"weights": weights.as_dict(), "gap": asdict(gap_cfg)}
        result = run_mediate(bundle, weights, out, gap_cfg, inputs, effective)
        top = ", ".join(f"{r.topic} ({r.priority_p:.3f})" for r in result.records[:5])
        print(f"ranked {len(result.records)} topics; F = {result.friction.friction_f:.3f}; top: {top}")
        return 0

    if cmd == "sweep":
        renorm = bool(args.renormalize or cfg.get("renormalize", False))
        if args.profiles is not None:
            profiles = load_profiles(args.profiles, renorm)
            inputs.append(args.profiles)
        elif "profiles" in cfg:
            profiles = [
                WeightProfile.from_weights(p["name"], p["w_r"], p["w_d"], p["w_f"], renorm) for p in cfg["profiles"]
            ]
        else:
            profiles = [DEFAULT_PROFILE, HIGHER_DISAGREEMENT_PROFILE]
        k = args.k if args.k is not None else int(cfg.get("k", 10))
        effective = {"profiles": [p.as_dict() for p in profiles], "k": k, "gap": asdict(gap_cfg)}
        reports = run_sweep(bundle, profiles, k, out, gap_cfg, inputs, effective)
        for r in reports:
            print(f"{r.profile_a} vs {r.profile_b}: rho = {r.spearman_rho:.3f}, "
                  f"top-{r.top_k_overlap[0]} overlap {r.top_k_overlap[1]}/{r.top_k_overlap[0]}")
        return 0

    raise UsageError(f"unknown command {cmd!r}")  # pragma: no cover


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, MediationError, SignalError, SimulationError, DegenerateSampleError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
