"""Command-line entry point binding the pipeline stages together.

Subcommands: extract, abstract, synth, inspect, search, replay, report.
Exit codes: 0 success, 1 domain failure (infeasible scenario, violated
inspection, provider failure), 2 usage or I/O error.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .abstraction import (
    AbstractScenario,
    MockProvider,
    ProviderError,
    RemoteProvider,
    build_abstract,
    load_annotation_log,
)
from .flowkey import (
    build_motion_states,
    extract_key_frames,
    keyframes_to_json,
    load_frame_dir,
    load_states,
    states_to_json,
    track_objects,
)
from .inspection import check_feasibility, check_semantic_equivalence
from .mapdata import RoadMap
from .metrics import CostModel
from .policies import make_policy
from .report import write_report
from .scenlang.ast import LanePosition
from .scenlang.parser import ScenarioSyntaxError, parse_scenario
from .scenlang.printer import print_scenario
from .scenlang.validate import validate_refs
from .search import SearchConfig, run_search
from .sim import run_scenario, trace_to_jsonl
from .synth import GenerationError, generate_concrete

_DOMAIN_ERRORS = (
    ValueError,
    KeyError,
    GenerationError,
    ProviderError,
    ScenarioSyntaxError,
)


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _DOMAIN_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _config_hash(data: dict) -> str:
    return hashlib.sha256(
        json.dumps(data, sort_keys=True).encode("utf-8")
    ).hexdigest()


def write_manifest(
    out_dir: Path, config: dict, artifacts: list[Path], timings: dict[str, float]
) -> Path:
    """Atomically written run manifest; timings excluded from the hash."""
    manifest = {
        "tool_version": __version__,
        "config_hash": _config_hash(config),
        "config": config,
        "artifacts": sorted(str(p.relative_to(out_dir)) for p in artifacts),
        "timings": {k: round(v, 3) for k, v in timings.items()},
    }
    path = out_dir / "manifest.json"
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@click.group()
@click.version_option(__version__)
@click.option("--verbose", is_flag=True, help="Chatty progress output.")
@click.pass_context
def main(ctx, verbose):
    """Traffic-scenario extraction, synthesis and violation search."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


@main.command()
@click.option("--frames", type=click.Path(exists=True, file_okay=False), help="Directory of .ppm/.pgm frames.")
@click.option("--states", "states_path", type=click.Path(exists=True, dir_okay=False), help="Precomputed motion-states JSON instead of frames.")
@click.option("--interval", default=0.5, show_default=True, help="Seconds between frames.")
@click.option("--alpha", default=0.2, show_default=True)
@click.option("--tau", default=None, type=float, help="Deviation threshold; adaptive when omitted.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_domain_errors
def extract(frames, states_path, interval, alpha, tau, out):
    """Extract key frames (and motion states) from a recording."""
    if (frames is None) == (states_path is None):
        raise click.UsageError("give exactly one of --frames or --states")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    artifacts = []
    if frames is not None:
        frame_list = load_frame_dir(frames, frame_interval=interval)
        tracks = track_objects(frame_list)
        states = build_motion_states(tracks, len(frame_list))
        artifacts.append(
            _write_json(out_dir / "motion_states.json", states_to_json(states))
        )
    else:
        states = load_states(states_path)
    seq = extract_key_frames(states, alpha=alpha, tau=tau)
    artifacts.append(_write_json(out_dir / "key_frames.json", keyframes_to_json(seq)))
    config = {
        "command": "extract",
        "frames": frames,
        "states": states_path,
        "interval": interval,
        "alpha": alpha,
        "tau": tau,
    }
    write_manifest(out_dir, config, artifacts, {"extract": time.perf_counter() - t0})
    click.echo(f"key frames: {list(seq.indices)}")


@main.command("abstract")
@click.option("--annotations", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--provider", "provider_name", type=click.Choice(["mock", "remote"]), default="mock", show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_domain_errors
def abstract_cmd(annotations, provider_name, out):
    """Build an abstract scenario from a scene annotation log."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    log = load_annotation_log(annotations)
    if provider_name == "remote":
        if not os.environ.get("SCENFORGE_LLM_URL"):
            raise click.UsageError("remote provider needs SCENFORGE_LLM_URL set")
        provider = RemoteProvider()
    else:
        provider = MockProvider(log)
    scenario = build_abstract(provider)
    path = out_dir / "abstract.json"
    scenario.save(path)
    config = {"command": "abstract", "annotations": annotations, "provider": provider_name}
    write_manifest(out_dir, config, [path], {"abstract": time.perf_counter() - t0})
    click.echo(f"wrote {path}")


def _traj_def_json(traj) -> dict:
    wps = []
    for wp in traj.waypoints:
        if isinstance(wp.position, LanePosition):
            pos = {"lane_id": wp.position.lane_id, "offset": wp.position.offset}
        else:
            pos = {"x": wp.position[0], "y": wp.position[1]}
        wps.append(
            {"position": pos, "speed": wp.speed, "lateral": wp.lateral, "time": wp.time}
        )
    return {
        "name": traj.name,
        "participant_type": traj.participant_type.value,
        "waypoints": wps,
    }


@main.command()
@click.option("--abstract", "abstract_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_domain_errors
def synth(abstract_path, map_path, seed, out):
    """Generate a concrete scenario program from an abstract scenario."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    abstract = AbstractScenario.load(abstract_path)
    road_map = RoadMap.load(map_path)
    result = generate_concrete(abstract, road_map, seed=seed)
    scn_path = out_dir / "scenario.scn"
    scn_path.write_text(print_scenario(result.scenario), encoding="utf-8")
    ref_path = _write_json(
        out_dir / "ego_reference.json", _traj_def_json(result.ego_reference)
    )
    config = {
        "command": "synth",
        "abstract": abstract_path,
        "map": map_path,
        "seed": seed,
    }
    write_manifest(out_dir, config, [scn_path, ref_path], {"synth": time.perf_counter() - t0})
    click.echo(f"wrote {scn_path}")


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--abstract", "abstract_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False))
@_domain_errors
def inspect(scenario_path, map_path, abstract_path, out):
    """Check a scenario program: references, feasibility, and optionally
    semantic equivalence against its abstract scenario."""
    scenario = parse_scenario(Path(scenario_path).read_text(encoding="utf-8"))
    road_map = RoadMap.load(map_path)
    problems = validate_refs(scenario, road_map)
    report = check_feasibility(scenario, road_map)
    result = {
        "reference_errors": problems,
        "feasibility": [list(d) for d in report.diagnostics],
        "feasible": report.ok and not problems,
    }
    ok = report.ok and not problems
    if abstract_path:
        abstract = AbstractScenario.load(abstract_path)
        eq = check_semantic_equivalence(scenario, abstract, road_map)
        result["equivalent"] = bool(eq)
        result["behavior_diffs"] = {
            name: {
                "expected": [a.value for a in exp],
                "actual": [a.value for a in got],
            }
            for name, (exp, got) in eq.diffs.items()
        }
        ok = ok and bool(eq)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "inspection.json", result)
    click.echo(json.dumps(result, indent=2, sort_keys=True))
    if not ok:
        sys.exit(1)


def _load_search_config(config_path: str | None, seed: int | None) -> SearchConfig:
    params: dict = {}
    if config_path:
        with open(config_path, "rb") as fh:
            data = tomllib.load(fh)
        params = dict(data.get("search", data))
    if seed is not None:
        params["seed"] = seed
    valid = set(SearchConfig.__dataclass_fields__)
    unknown = set(params) - valid
    if unknown:
        raise click.UsageError(f"unknown search config keys: {sorted(unknown)}")
    return SearchConfig(**params)


@main.command()
@click.option("--abstract", "abstract_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=None, type=int, help="Overrides the config seed.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_domain_errors
def search(abstract_path, map_path, policy, config_path, seed, out):
    """Run the dual-layer violation search for one abstract scenario."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    abstract = AbstractScenario.load(abstract_path)
    road_map = RoadMap.load(map_path)
    cfg = _load_search_config(config_path, seed)
    result = run_search(
        abstract, road_map, policy, cfg, out_dir=out_dir,
        abstract_id=Path(abstract_path).stem,
    )
    artifacts = [out_dir / "violations.jsonl", out_dir / "summary.csv"]
    artifacts += sorted((out_dir / "replays").glob("*.replay"))
    config = {
        "command": "search",
        "abstract": abstract_path,
        "map": map_path,
        "policy": policy,
        "search": {k: getattr(cfg, k) for k in SearchConfig.__dataclass_fields__},
    }
    write_manifest(out_dir, config, artifacts, {"search": time.perf_counter() - t0})
    click.echo(
        f"{len(result.records)} violation(s) in {result.evaluations} evaluations;"
        f" best D = {result.best_d}"
    )


@main.command()
@click.argument("replay_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False))
@_domain_errors
def replay(replay_file, map_path, trace_path):
    """Re-execute a recorded violation bit-exactly."""
    data = json.loads(Path(replay_file).read_text(encoding="utf-8"))
    scenario = parse_scenario(data["scenario"])
    road_map = RoadMap.load(map_path)
    policy = make_policy(data["policy"], scenario, road_map)
    trace = run_scenario(
        scenario, policy, road_map,
        dt=data.get("dt", 0.1), horizon=data.get("horizon", 60.0),
        seed=data.get("seed", 0),
    )
    if trace_path:
        trace_to_jsonl(trace, trace_path)
    for v in trace.verdicts:
        status = "ok" if v.satisfied else f"VIOLATED at step {v.step}: {v.detail}"
        click.echo(f"{v.assertion}: {status}")
    click.echo(f"termination: {trace.termination}")


@main.command()
@click.option("--runs", "run_dirs", multiple=True, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@_domain_errors
def report(run_dirs, out):
    """Aggregate one or more search runs into CSV + markdown + figure."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        paths = write_report(list(run_dirs), out_dir)
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    config = {"command": "report", "runs": sorted(run_dirs)}
    write_manifest(out_dir, config, paths, {"report": time.perf_counter() - t0})
    for p in paths:
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
