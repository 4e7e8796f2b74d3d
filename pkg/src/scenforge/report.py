"""Aggregate search-run artifacts into a CSV table, a markdown summary and a
violation-kind histogram figure."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

VIOLATION_KINDS = ("collision", "traffic_disruption", "rule_violation")


@dataclass(frozen=True)
class RunSummary:
    run_dir: str
    policy: str
    total: int
    by_kind: dict[str, int]
    universal: int
    mean_rv: float
    essential_counts: dict[str, int]


def load_violations(run_dir: Path | str) -> list[dict]:
    path = Path(run_dir) / "violations.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"no violations.jsonl in {run_dir}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def summarize_run(run_dir: Path | str) -> RunSummary:
    records = load_violations(run_dir)
    by_kind = Counter(r["violation_kind"] for r in records)
    essential: Counter = Counter()
    for r in records:
        essential.update(r.get("essential_participants", ()))
    rvs = [float(r["rv"]) for r in records]
    policies = {r["policy"] for r in records}
    return RunSummary(
        run_dir=str(run_dir),
        policy=policies.pop() if len(policies) == 1 else ",".join(sorted(policies)),
        total=len(records),
        by_kind={k: by_kind.get(k, 0) for k in VIOLATION_KINDS},
        universal=sum(1 for r in records if r.get("universal")),
        mean_rv=sum(rvs) / len(rvs) if rvs else 0.0,
        essential_counts=dict(sorted(essential.items())),
    )


def write_report(
    run_dirs: list[Path | str], out_dir: Path | str
) -> list[Path]:
    """Emit report.csv, report.md and violation_kinds.png; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = [summarize_run(d) for d in run_dirs]

    csv_path = out / "report.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["run", "policy", "violations", *VIOLATION_KINDS, "universal", "mean_rv"]
        )
        for s in summaries:
            writer.writerow(
                [
                    s.run_dir,
                    s.policy,
                    s.total,
                    *(s.by_kind[k] for k in VIOLATION_KINDS),
                    s.universal,
                    f"{s.mean_rv:.6f}",
                ]
            )

    png_path = out / "violation_kinds.png"
    totals = Counter()
    for s in summaries:
        for k, v in s.by_kind.items():
            totals[k] += v
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(VIOLATION_KINDS, [totals[k] for k in VIOLATION_KINDS], color="#4878a8")
    ax.set_ylabel("violations")
    ax.set_title("Safety violations by kind")
    fig.tight_layout()
    # a pinned empty Date keeps reruns byte-identical
    fig.savefig(png_path, metadata={"Date": None})
    plt.close(fig)

    md_path = out / "report.md"
    lines = ["# Search run summary", ""]
    lines.append("| run | policy | violations | " + " | ".join(VIOLATION_KINDS) + " | universal | mean RV |")
    lines.append("|---|---|---|" + "---|" * len(VIOLATION_KINDS) + "---|---|")
    for s in summaries:
        lines.append(
            f"| {s.run_dir} | {s.policy} | {s.total} | "
            + " | ".join(str(s.by_kind[k]) for k in VIOLATION_KINDS)
            + f" | {s.universal} | {s.mean_rv:.2f} |"
        )
    lines.append("")
    if any(s.essential_counts for s in summaries):
        lines.append("## Essential participants")
        lines.append("")
        for s in summaries:
            for name, n in s.essential_counts.items():
                lines.append(f"- {s.run_dir}: {name} essential in {n} violation(s)")
        lines.append("")
    lines.append("![violations by kind](violation_kinds.png)")
    lines.append("")
    md_path.write_text("\n".join(lines), encoding="utf-8")
    return [csv_path, md_path, png_path]
