import json

import pytest

from scenforge.report import load_violations, summarize_run, write_report


def write_run(tmp_path, name, records):
    run = tmp_path / name
    run.mkdir()
    with open(run / "violations.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return run


RECORDS = [
    {
        "policy": "lanekeeper-staticbug",
        "violation_kind": "collision",
        "rv": 12.0,
        "universal": True,
        "essential_participants": ["npc_1"],
    },
    {
        "policy": "lanekeeper-staticbug",
        "violation_kind": "rule_violation",
        "rv": 4.0,
        "universal": False,
        "essential_participants": ["npc_1"],
    },
]


def test_summarize_run_counts(tmp_path):
    run = write_run(tmp_path, "run1", RECORDS)
    summary = summarize_run(run)
    assert summary.total == 2
    assert summary.by_kind["collision"] == 1
    assert summary.by_kind["rule_violation"] == 1
    assert summary.by_kind["traffic_disruption"] == 0
    assert summary.universal == 1
    assert summary.mean_rv == pytest.approx(8.0)
    assert summary.essential_counts == {"npc_1": 2}


def test_empty_violations_zero_counts(tmp_path):
    run = write_run(tmp_path, "empty", [])
    summary = summarize_run(run)
    assert summary.total == 0
    assert summary.mean_rv == 0.0


def test_missing_violations_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_violations(tmp_path)


def test_write_report_outputs(tmp_path):
    run = write_run(tmp_path, "run1", RECORDS)
    out = tmp_path / "report"
    paths = write_report([run], out)
    names = {p.name for p in paths}
    assert names == {"report.csv", "report.md", "violation_kinds.png"}
    csv_text = (out / "report.csv").read_text()
    assert "collision" in csv_text.splitlines()[0]
    md = (out / "report.md").read_text()
    assert "violation_kinds.png" in md
    assert (out / "violation_kinds.png").stat().st_size > 0


def test_report_is_rerun_stable(tmp_path):
    run = write_run(tmp_path, "run1", RECORDS)
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    write_report([run], out1)
    write_report([run], out2)
    assert (out1 / "violation_kinds.png").read_bytes() == (
        out2 / "violation_kinds.png"
    ).read_bytes()
    assert (out1 / "report.csv").read_text() == (out2 / "report.csv").read_text()
