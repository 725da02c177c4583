"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line; ``conftest.py`` prints them at the
end of the pytest run. ``python tests/test_acceptance.py`` runs them directly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import tempfile
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
import oracles  # noqa: E402

from feedback_mediator.cli import main as cli_main  # noqa: E402
from feedback_mediator.core import CodedSegment  # noqa: E402
from feedback_mediator.mediation import WeightProfile, rank_topics  # noqa: E402
from feedback_mediator.signals import TopicSignals, compute_friction  # noqa: E402
from feedback_mediator.stats import (  # noqa: E402
    PairedSample,
    ResampleConfig,
    TwoGroupSample,
    cohens_d,
    pearson_r,
    permutation_p,
    rank_auc,
    spearman_rho,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    print(RESULTS[-1])
    assert ok, RESULTS[-1]


def cli(*argv) -> int:
    with redirect_stdout(io.StringIO()):
        return cli_main([str(a) for a in argv])


def csv_rows(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_01_priority_reference():
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        code = cli("mediate", "--data", FIXTURES / "priority_reference", "--out", tmp)
        elapsed = time.perf_counter() - t0
        table = {r["topic"]: r for r in csv_rows(Path(tmp) / "priorities.csv")}
        doc = json.loads((Path(tmp) / "decision_records.json").read_text())
    full = {r["topic"]: r["priority_p"] for r in doc["records"]}
    a, p = table["analogical-reasoning"], table["planning"]
    ok = (
        code == 0
        and (a["R"], a["D"], a["F"], a["P"], a["rank"]) == ("0.157", "0.036", "0.220", "0.139", "1")
        and (p["R"], p["D"], p["F"], p["P"], p["rank"]) == ("0.101", "0.036", "0.220", "0.100", "3")
        and abs(full["analogical-reasoning"] - 0.139) <= 0.0005
        and abs(full["planning"] - 0.100) <= 0.0005
        and elapsed < 1.0
    )
    record(1, "reference priority rows", ok,
           f"P={full['analogical-reasoning']:.4f} rank {a['rank']}, P={full['planning']:.4f} rank {p['rank']}, "
           f"{elapsed:.2f}s")


def test_criterion_02_channel_reference():
    with tempfile.TemporaryDirectory() as tmp:
        code = cli("synthesize", "--channels", FIXTURES / "channel_reference" / "channels.csv", "--out", tmp)
        doc = json.loads((Path(tmp) / "synthesis.json").read_text())
    by = {p["learner"]: p for p in doc["profiles"]}
    a, b = by["case_a"], by["baseline_flagged"]
    cfg = doc["config"]
    ok = (
        code == 0
        and cfg["sigma_threshold"] == 0.5 and cfg["channel_threshold"] == 0.75
        and abs(a["sigma"] - 0.509) <= 0.0005 and a["isolated"]
        and abs(b["sigma"] - 0.430) <= 0.0005 and not b["isolated"]
    )
    record(2, "reference channel rows", ok,
           f"case_a sigma={a['sigma']:.4f} isolated={a['isolated']}, "
           f"baseline_flagged sigma={b['sigma']:.4f} isolated={b['isolated']}")


def test_criterion_03_friction():
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 1001))
        flags = rng.random(n) < rng.random()
        segs = [CodedSegment(str(i), "t", bool(f)) for i, f in enumerate(flags)]
        k = len([s for s in segs if s.is_friction])
        summary = compute_friction(segs)
        if (summary.friction_count, summary.total_count, summary.friction_f) != (k, n, k / n):
            mismatches += 1
    with tempfile.TemporaryDirectory() as tmp:
        cli("mediate", "--data", FIXTURES / "priority_reference", "--out", tmp)
        f = float(csv_rows(Path(tmp) / "priorities.csv")[0]["F"])
    ok = mismatches == 0 and f"{f:.3f}" == "0.220"
    record(3, "friction formula", ok, f"1000 random lists, {mismatches} mismatches; fixture F={f:.3f}")


def test_criterion_04_structural_invariants():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    f_fail = dom_fail = 0
    for _ in range(1000):
        n = int(rng.integers(2, 55))
        r = rng.random(n)
        avail = rng.random(n) < 0.4
        d = np.where(avail, rng.random(n), 0.0)
        signals = [TopicSignals(f"t{i:02d}", float(r[i]), bool(avail[i]), float(r[i]) if avail[i] else None, float(d[i]))
                   for i in range(n)]
        raw = rng.random(3) + 1e-3
        w = WeightProfile.from_weights("w", *raw, renormalize=True)
        base = rank_topics(signals, float(rng.random()), w)
        moved = rank_topics(signals, float(rng.random()), w)
        if [x.topic for x in base] != [x.topic for x in moved]:
            f_fail += 1
        dom = rank_topics(signals, float(rng.random()), WeightProfile("r", 1.0, 0.0, 0.0))
        if [x.topic for x in dom] != [f"t{i:02d}" for i in np.lexsort((np.arange(n), -r))]:
            dom_fail += 1
    elapsed = time.perf_counter() - t0
    ok = f_fail == 0 and dom_fail == 0 and elapsed < 10
    record(4, "priority structural invariants", ok,
           f"1000 sets: F-invariance failures {f_fail}, R-ordering failures {dom_fail}, {elapsed:.2f}s")


def test_criterion_05_statistics_oracles():
    rng = np.random.default_rng(5)
    worst = 0.0
    counts = dict.fromkeys(("spearman", "pearson", "cohens_d", "auc"), 0)
    while min(counts.values()) < 500:
        n = int(rng.integers(2, 9))
        ties = rng.random() < 0.5
        draw = (lambda m: rng.integers(0, 4, m).astype(float)) if ties else (lambda m: rng.normal(size=m))
        xs, ys = draw(n).tolist(), draw(n).tolist()
        if len(set(xs)) > 1 and len(set(ys)) > 1:
            s = PairedSample(xs, ys)
            worst = max(worst, abs(spearman_rho(s) - oracles.spearman(xs, ys)))
            worst = max(worst, abs(pearson_r(s) - max(-1.0, min(1.0, oracles.pearson(xs, ys)))))
            counts["spearman"] += 1
            counts["pearson"] += 1
        na, nb = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        a, b = draw(na).tolist(), draw(nb).tolist()
        worst = max(worst, abs(rank_auc(TwoGroupSample(a, b)) - oracles.auc(a, b)))
        counts["auc"] += 1
        if na >= 2 and nb >= 2 and (len(set(a)) > 1 or len(set(b)) > 1):
            worst = max(worst, abs(cohens_d(TwoGroupSample(a, b)) - oracles.cohens_d(a, b)))
            counts["cohens_d"] += 1
    examples = (
        abs(spearman_rho(PairedSample([1, 2, 3, 4, 5], [1, 3, 2, 5, 4])) - 0.8) <= 1e-12
        and abs(rank_auc(TwoGroupSample([0.9, 0.7], [0.8, 0.5, 0.2])) - 5 / 6) <= 1e-12
        and abs(cohens_d(TwoGroupSample([2, 4], [1, 3])) - 1 / math.sqrt(2)) <= 1e-12
    )
    ok = worst <= 1e-12 and examples
    record(5, "statistics oracle equivalence", ok,
           f"cases {counts}, max |diff| {worst:.1e}, worked examples {'ok' if examples else 'wrong'}")


def test_criterion_06_permutation_exactness():
    rng = np.random.default_rng(6)
    a = rng.uniform(0.55, 1.0, 2).tolist()
    b = rng.uniform(0.0, 1.0, 31).tolist()
    s = TwoGroupSample(a, b)
    exact = permutation_p(s, "auc")
    p_oracle, total = oracles.permutation_p_two_group(a, b, oracles.auc)
    mc = permutation_p(s, "auc", ResampleConfig(seed=6, permutations=100_000, exact_cutoff=0))
    se = math.sqrt(exact.p * (1 - exact.p) / mc.draws)
    ok = (
        exact.method == "exact" and exact.draws == total == 528
        and abs(exact.p - p_oracle) <= 1e-15
        and mc.method == "monte_carlo" and mc.draws >= 100_000
        and abs(mc.p - exact.p) <= 3 * se
    )
    record(6, "permutation exactness", ok,
           f"exact p={exact.p:.5f} over {exact.draws} (oracle {p_oracle:.5f}), "
           f"MC p={mc.p:.5f} with {mc.draws} draws, |diff|={abs(mc.p - exact.p):.5f} <= 3SE={3 * se:.5f}")


def test_criterion_07_sweep():
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        code = cli("sweep", "--data", FIXTURES / "synthetic", "--profiles", FIXTURES / "weight_profiles.json",
                   "--k", 10, "--out", tmp)
        elapsed = time.perf_counter() - t0
        doc = json.loads((Path(tmp) / "sweep.json").read_text())
    reports = {(r["profile_a"], r["profile_b"]): r for r in doc["reports"]}
    self_cmp = reports[("default", "default")]
    cross = reports[("default", "higher-disagreement")]
    ablation = reports[("default", "no-disagreement ablation")]
    ok = (
        code == 0 and elapsed < 5
        and len(self_cmp["ranking_a"]) == 54
        and self_cmp["spearman_rho"] == 1.0 and self_cmp["top_k_overlap"] == 10
    )
    record(7, "sensitivity sweep on synthetic cohort", ok,
           f"{elapsed:.2f}s; self rho={self_cmp['spearman_rho']:.3f} overlap {self_cmp['top_k_overlap']}/10; "
           f"cross rho={cross['spearman_rho']:.3f} overlap {cross['top_k_overlap']}/10; "
           f"ablation rho={ablation['spearman_rho']:.3f} (cross-profile and ablation targets need classroom data)")


def test_criterion_08_isolated_recovery():
    passed = 0
    for seed in range(20):
        with tempfile.TemporaryDirectory() as tmp:
            sim, out = Path(tmp) / "sim", Path(tmp) / "syn"
            cli("simulate", "--learners", 279, "--planted", 3, "--seed", seed, "--out", sim)
            cli("synthesize", "--data", sim, "--out", out)
            truth = [r["learner_id"] for r in csv_rows(sim / "ground_truth.csv")]
            by = {p["learner"]: p for p in json.loads((out / "synthesis.json").read_text())["profiles"]}
        recovered = sum(by[l]["isolated"] for l in truth)
        single = any(any(by[l]["channel_flags"].values()) for l in truth)
        passed += recovered >= 2 and not single
    record(8, "isolated-learner recovery", passed >= 18, f"{passed}/20 seeds recover >= 2 of 3 with no channel flag")


def _snapshot(d: Path) -> dict[str, bytes]:
    out = {}
    for p in sorted(d.rglob("*")):
        if not p.is_file():
            continue
        data = p.read_bytes()
        if p.name == "manifest.json":
            doc = json.loads(data)
            doc.pop("timestamp")
            data = json.dumps(doc, sort_keys=True).encode()
        out[str(p.relative_to(d))] = data
    return out


def test_criterion_09_determinism():
    fx = FIXTURES
    commands = {
        "simulate": ["simulate", "--learners", 120, "--topics", 20, "--seed", 17],
        "mediate": ["mediate", "--data", fx / "synthetic"],
        "synthesize": ["synthesize", "--data", fx / "synthetic"],
        "sweep": ["sweep", "--data", fx / "synthetic", "--profiles", fx / "weight_profiles.json"],
        "validate": ["validate", "--data", fx / "synthetic", "--pairing", fx / "pairing_validation.json", "--seed", 5],
    }
    differing = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for name, argv in commands.items():
            snaps = []
            for run in ("a", "b"):
                cli(*argv, "--out", tmp / name / run)
                snaps.append(_snapshot(tmp / name / run))
            if snaps[0] != snaps[1] or not snaps[0]:
                differing.append(name)
        reports = []
        for run in ("a", "b"):
            cli("report", "--from", tmp / "mediate" / "a", "--from", tmp / "synthesize" / "a",
                "--from", tmp / "sweep" / "a", "--from", tmp / "validate" / "a", "--out", tmp / "report" / run)
            reports.append((tmp / "report" / run / "report.md").read_bytes())
        if reports[0] != reports[1]:
            differing.append("report")
    record(9, "byte-reproducible commands", not differing,
           f"{len(commands) + 1} commands run twice; differing: {differing or 'none'}")


def test_criterion_10_validate_on_synthetic():
    with tempfile.TemporaryDirectory() as tmp:
        code = cli("validate", "--data", FIXTURES / "synthetic", "--pairing", FIXTURES / "pairing_survey_constructs.json",
                   "--seed", 10, "--out", Path(tmp) / "t1")
        code2 = cli("validate", "--data", FIXTURES / "synthetic", "--pairing", FIXTURES / "pairing_validation.json",
                    "--seed", 10, "--out", Path(tmp) / "v")
        rows = json.loads((Path(tmp) / "t1" / "validation.json").read_text())["analyses"]
        rows += json.loads((Path(tmp) / "v" / "validation.json").read_text())["analyses"]

    # Independent recomputation of each statistic from the same vectors.
    from feedback_mediator.io import DatasetPaths, load_bundle
    from feedback_mediator.mediation import DEFAULT_PROFILE
    from feedback_mediator.pipeline import ValidationContext, _paired, _values
    from feedback_mediator.signals import GapConfig
    from feedback_mediator.synthesis import SynthesisConfig

    ctx = ValidationContext(load_bundle(DatasetPaths.from_dir(FIXTURES / "synthetic")), DEFAULT_PROFILE,
                            SynthesisConfig(), GapConfig())
    specs = json.loads((FIXTURES / "pairing_survey_constructs.json").read_text())["analyses"]
    specs += json.loads((FIXTURES / "pairing_validation.json").read_text())["analyses"]
    worst = 0.0
    shaped = True
    for spec, row in zip(specs, rows):
        shaped &= row["error"] is None and row["method"] in ("exact", "monte_carlo") and 0 < row["p"] <= 1
        if spec["statistic"] in ("spearman", "pearson"):
            xs, ys = _paired(ctx.vector(spec["x"], "survey"), ctx.vector(spec["y"], "survey"))
            f = oracles.spearman if spec["statistic"] == "spearman" else oracles.pearson
            worst = max(worst, abs(row["value"] - f(xs, ys)))
            shaped &= row["n"] == len(xs)
        else:
            a = _values(ctx.vector(spec["group_a"], "survey"))
            b = _values(ctx.vector(spec["group_b"], "survey"))
            f = oracles.auc if spec["statistic"] == "auc" else oracles.cohens_d
            worst = max(worst, abs(row["value"] - f(a, b)))
            shaped &= (row["n_a"], row["n_b"]) == (len(a), len(b))
            if spec["statistic"] == "auc":
                shaped &= row["ci"] is not None and 0 <= row["ci"][0] <= row["value"] <= row["ci"][1] <= 1
    ok = code == 0 and code2 == 0 and shaped and worst <= 1e-9 and len(rows) == 8
    record(10, "classroom-only values stated; validate on synthetic", ok,
           f"{len(rows)} analyses shaped and oracle-consistent (max |diff| {worst:.1e}); instructor agreement "
           "rho=0.80, student alignment rho=0.46, exposure AUC=0.96 CI [0.89, 1.00] and the survey-construct "
           "correlations need unpublished classroom data and are not reproduced")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
