"""Markdown rendering of mediate / synthesize / sweep / validate outputs."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable


def _load(dirs: Iterable[Path], name: str):
    for d in dirs:
        p = Path(d) / name
        if p.is_file():
            return json.loads(p.read_text(encoding="utf-8"))
    return None


def _f3(v) -> str:
    return "" if v is None else f"{v:.3f}"


def _priorities(doc: dict, limit: int = 20) -> list[str]:
    w = doc["weights"]
    fr = doc["friction"]
    lines = [
        "## Topic priorities",
        "",
        f"Weights ({w['name']}): w_r = {w['w_r']:.2f}, w_d = {w['w_d']:.2f}, w_f = {w['w_f']:.2f}. "
        f"Teacher friction F = {fr['friction_f']:.3f} ({fr['friction_count']} of {fr['total_count']} coded segments).",
        "",
        "| Rank | Topic | R | D | F | P | Survey |",
        "|---:|---|---:|---:|---:|---:|---|",
    ]
    records = doc["records"]
    for r in records[:limit]:
        i = r["inputs"]
        lines.append(
            f"| {r['rank']} | {r['topic']} | {_f3(i['prevalence_r'])} | {_f3(i['disagreement_d'])} | "
            f"{_f3(i['friction_f'])} | {_f3(r['priority_p'])} | {'yes' if i['survey_available'] else 'no'} |"
        )
    if len(records) > limit:
        lines.append(f"\n{len(records) - limit} lower-ranked topics omitted; see decision_records.json.")
    lines += ["", "### Decision records (top 5)", ""]
    for r in records[:5]:
        c = r["contributions"]
        lines.append(
            f"- **{r['topic']}** (rank {r['rank']}, P = {r['priority_p']:.3f}): "
            f"{c['prevalence']:.3f} from R + {c['disagreement']:.3f} from D + {c['friction']:.3f} from F"
        )
        for note in r["diagnostics"]:
            lines.append(f"  - {note}")
    return lines


def _synthesis(doc: dict, limit: int = 15) -> list[str]:
    s = doc["summary"]
    cfg = doc["config"]
    lines = [
        "## Learner synthesis",
        "",
        f"sigma threshold {cfg['sigma_threshold']:.2f}, channel threshold {cfg['channel_threshold']:.2f}, "
        f"normalization {cfg['normalization']}.",
        "",
        f"- isolated (synthesis only): {s['isolated']}",
        f"- jointly identified: {s['joint']}",
        f"- channel only: {s['channel_only']}",
        f"- unidentified: {s['unidentified']}",
        f"- skipped (missing survey data): {len(doc['skipped'])}",
        "",
        "| Learner | rho_raw | rho_help | rho_refl | sigma | Isolated? |",
        "|---|---:|---:|---:|---:|---|",
    ]
    isolated = [p for p in doc["profiles"] if p["isolated"]]
    for p in (isolated or doc["profiles"])[:limit]:
        lines.append(
            f"| {p['learner']} | {p['rho_raw']:.2f} | {p['rho_help']:.2f} | {p['rho_refl']:.2f} | "
            f"{p['sigma']:.3f} | {'Yes' if p['isolated'] else 'No'} |"
        )
    return lines


def _sweep(doc: dict) -> list[str]:
    lines = ["## Weight sensitivity", "", "| Reference | Profile | Spearman rho | Top-k overlap |", "|---|---|---:|---:|"]
    for r in doc["reports"]:
        lines.append(f"| {r['profile_a']} | {r['profile_b']} | {r['spearman_rho']:.3f} | {r['top_k_overlap']}/{r['k']} |")
    return lines


def _validation(doc: dict) -> list[str]:
    lines = ["## Validation statistics", "", "| Analysis | Statistic | Value | n | p | Method | CI |", "|---|---|---:|---:|---:|---|---|"]
    for r in doc["analyses"]:
        if r["error"]:
            lines.append(f"| {r['name']} | {r['statistic']} | error: {r['error']} | | | | |")
            continue
        n = r["n"] if r["n"] is not None else f"{r['n_a']} vs {r['n_b']}"
        ci = "" if r["ci"] is None else f"[{r['ci'][0]:.2f}, {r['ci'][1]:.2f}]"
        lines.append(
            f"| {r['name']} | {r['statistic']} | {r['value']:.3f} | {n} | {r['p']:.4f} | "
            f"{r['method']} ({r['draws']}) | {ci} |"
        )
    return lines


def render_report(dirs: Iterable[Path]) -> str:
    dirs = list(dirs)
    sections: list[list[str]] = []
    doc = _load(dirs, "decision_records.json")
    if doc:
        sections.append(_priorities(doc))
    doc = _load(dirs, "synthesis.json")
    if doc:
        sections.append(_synthesis(doc))
    doc = _load(dirs, "sweep.json")
    if doc:
        sections.append(_sweep(doc))
    doc = _load(dirs, "validation.json")
    if doc:
        sections.append(_validation(doc))
    if not sections:
        raise FileNotFoundError(f"no outputs found in {', '.join(map(str, dirs))}")
    out = ["# Feedback mediation report", ""]
    for s in sections:
        out += s + [""]
    return "\n".join(out)
