import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from scenforge.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args, **kwargs):
    return runner.invoke(main, [str(a) for a in args], **kwargs)


def write_frames(directory: Path, n=10):
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        img = np.full((48, 64), 30, dtype=np.uint8)
        x = 4 + i * 3 if i <= 5 else 4 + 5 * 3 + (i - 5) * 6
        img[20:28, x : x + 8] = 220
        with open(directory / f"f{i:03d}.pgm", "wb") as fh:
            fh.write(b"P5\n64 48\n255\n" + img.tobytes())


def test_extract_from_frames(tmp_path, runner):
    frames = tmp_path / "frames"
    write_frames(frames)
    out = tmp_path / "ext"
    result = invoke(runner, "extract", "--frames", frames, "--out", out)
    assert result.exit_code == 0, result.output
    assert (out / "motion_states.json").exists()
    assert (out / "key_frames.json").exists()
    assert (out / "manifest.json").exists()


def test_extract_requires_one_source(tmp_path, runner):
    result = invoke(runner, "extract", "--out", tmp_path / "x")
    assert result.exit_code == 2


def test_abstract_synth_inspect_pipeline(tmp_path, runner, fixtures_dir):
    ab = tmp_path / "ab"
    result = invoke(
        runner,
        "abstract",
        "--annotations",
        fixtures_dir / "log_straight.json",
        "--out",
        ab,
    )
    assert result.exit_code == 0, result.output

    syn = tmp_path / "syn"
    result = invoke(
        runner,
        "synth",
        "--abstract",
        ab / "abstract.json",
        "--map",
        fixtures_dir / "fixture_city.json",
        "--seed",
        3,
        "--out",
        syn,
    )
    assert result.exit_code == 0, result.output
    assert (syn / "scenario.scn").exists()
    assert (syn / "ego_reference.json").exists()

    result = invoke(
        runner,
        "inspect",
        "--scenario",
        syn / "scenario.scn",
        "--map",
        fixtures_dir / "fixture_city.json",
        "--abstract",
        ab / "abstract.json",
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["feasible"]
    assert payload["equivalent"]


def test_synth_before_abstract_exits_2(tmp_path, runner, fixtures_dir):
    result = invoke(
        runner,
        "synth",
        "--abstract",
        tmp_path / "missing" / "abstract.json",
        "--map",
        fixtures_dir / "fixture_city.json",
        "--out",
        tmp_path / "syn",
    )
    assert result.exit_code == 2


def test_remote_provider_refused_without_url(tmp_path, runner, fixtures_dir, monkeypatch):
    monkeypatch.delenv("SCENFORGE_LLM_URL", raising=False)
    result = invoke(
        runner,
        "abstract",
        "--annotations",
        fixtures_dir / "log_straight.json",
        "--provider",
        "remote",
        "--out",
        tmp_path / "ab",
    )
    assert result.exit_code == 2
    assert "SCENFORGE_LLM_URL" in result.output


def test_search_replay_report_pipeline(tmp_path, runner, fixtures_dir):
    ab = tmp_path / "ab"
    invoke(
        runner, "abstract", "--annotations", fixtures_dir / "log_straight.json",
        "--out", ab,
    )
    cfg = tmp_path / "small.toml"
    cfg.write_text(
        "[search]\nouter_budget = 30\ninner_budget = 5\nseed = 42\nmax_records = 1\n"
    )
    run_dir = tmp_path / "run"
    result = invoke(
        runner,
        "search",
        "--abstract", ab / "abstract.json",
        "--map", fixtures_dir / "fixture_city.json",
        "--policy", "lanekeeper-staticbug",
        "--config", cfg,
        "--out", run_dir,
    )
    assert result.exit_code == 0, result.output
    assert (run_dir / "violations.jsonl").exists()

    replays = sorted((run_dir / "replays").glob("*.replay"))
    assert replays
    trace_path = tmp_path / "trace.jsonl"
    result = invoke(
        runner,
        "replay",
        replays[0],
        "--map", fixtures_dir / "fixture_city.json",
        "--trace", trace_path,
    )
    assert result.exit_code == 0, result.output
    assert "VIOLATED" in result.output
    assert trace_path.exists()

    rep = tmp_path / "rep"
    result = invoke(runner, "report", "--runs", run_dir, "--out", rep)
    assert result.exit_code == 0, result.output
    assert (rep / "report.csv").exists()
    assert (rep / "violation_kinds.png").exists()


def test_report_zero_counts_on_empty_run(tmp_path, runner):
    run_dir = tmp_path / "emptyrun"
    run_dir.mkdir()
    (run_dir / "violations.jsonl").write_text("")
    result = invoke(runner, "report", "--runs", run_dir, "--out", tmp_path / "rep")
    assert result.exit_code == 0, result.output
    csv_lines = (tmp_path / "rep" / "report.csv").read_text().splitlines()
    assert csv_lines[1].split(",")[2] == "0"


def test_search_config_rejects_unknown_keys(tmp_path, runner, fixtures_dir):
    ab = tmp_path / "ab"
    invoke(
        runner, "abstract", "--annotations", fixtures_dir / "log_straight.json",
        "--out", ab,
    )
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[search]\nouter_budget = 10\nwarp_speed = 9\n")
    result = invoke(
        runner,
        "search",
        "--abstract", ab / "abstract.json",
        "--map", fixtures_dir / "fixture_city.json",
        "--policy", "lanekeeper",
        "--config", cfg,
        "--out", tmp_path / "run",
    )
    assert result.exit_code == 2
    assert "warp_speed" in result.output


def test_manifest_hash_stable_across_reruns(tmp_path, runner, fixtures_dir):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = invoke(
            runner, "abstract", "--annotations",
            fixtures_dir / "log_straight.json", "--out", out,
        )
        assert result.exit_code == 0
        outs.append(json.loads((out / "manifest.json").read_text()))
    assert outs[0]["config_hash"] == outs[1]["config_hash"]
    assert outs[0]["artifacts"] == outs[1]["artifacts"]
    assert "tool_version" in outs[0]
