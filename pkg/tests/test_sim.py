import json
import math

import pytest

from conftest import slow_npc_abstract
from scenforge.policies import ScriptedPolicy, make_policy
from scenforge.scenlang.ast import ParticipantType
from scenforge.scripting import script_trajectory
from scenforge.sim import (
    Command,
    EntityState,
    WorldState,
    detect_collision,
    obb_distance,
    obb_overlap,
    run_scenario,
    trace_to_jsonl,
)
from scenforge.synth import generate_concrete


def box(eid, x, y, heading=0.0, hl=2.0, hw=1.0):
    return EntityState(
        entity_id=eid,
        x=x,
        y=y,
        heading=heading,
        speed=0.0,
        half_length=hl,
        half_width=hw,
        entity_type=ParticipantType.CAR,
    )


def test_obb_overlap_axis_aligned():
    assert obb_overlap(box("a", 0, 0), box("b", 3.0, 0))
    assert not obb_overlap(box("a", 0, 0), box("b", 5.0, 0))


def test_obb_touching_within_penetration_tolerance():
    # 1 cm of overlap is treated as contact, not collision
    assert not obb_overlap(box("a", 0, 0), box("b", 3.995, 0))


def test_obb_overlap_rotated():
    diag = box("b", 3.2, 0.0, heading=math.pi / 4)
    assert obb_overlap(box("a", 0, 0), diag)


def test_obb_distance_axis_aligned_gap():
    assert obb_distance(box("a", 0, 0), box("b", 7.0, 0)) == pytest.approx(3.0)
    assert obb_distance(box("a", 0, 0), box("b", 1.0, 0)) == 0.0


def test_obb_distance_lateral_gap():
    assert obb_distance(box("a", 0, 0), box("b", 0, 5.0)) == pytest.approx(3.0)


def test_detect_collision_lists_pairs():
    state = WorldState(
        time=0.0, entities=(box("a", 0, 0), box("b", 1.0, 0), box("c", 50, 0))
    )
    pairs = detect_collision(state)
    assert ("a", "b") in pairs or ("b", "a") in pairs
    assert all("c" not in p for p in pairs)


def test_run_scenario_rejects_bad_dt(road_map):
    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario
    policy = make_policy("lanekeeper", scenario, road_map)
    with pytest.raises(ValueError):
        run_scenario(scenario, policy, road_map, dt=0.0)
    with pytest.raises(ValueError):
        run_scenario(scenario, policy, road_map, dt=0.6)


def test_scripted_policy_tracks_reference(road_map):
    result = generate_concrete(slow_npc_abstract(), road_map, seed=0)
    reference = script_trajectory(result.ego_reference, road_map)
    policy = ScriptedPolicy(reference)
    trace = run_scenario(result.scenario, policy, road_map)
    worst = 0.0
    for state in trace.states:
        ego = state.entity("ego")
        ref = reference.state_at(state.time)
        worst = max(worst, math.hypot(ego.x - ref.x, ego.y - ref.y))
    assert worst < 0.1


def test_lanekeeper_reaches_destination_cleanly(road_map):
    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario
    policy = make_policy("lanekeeper", scenario, road_map)
    trace = run_scenario(scenario, policy, road_map)
    assert all(v.satisfied for v in trace.verdicts), trace.verdicts
    assert trace.termination == "all_assertions_resolved"


def test_policy_fault_truncates_trace(road_map):
    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario

    class Exploding:
        initial_speed = 5.0

        def step(self, obs):
            if obs.time > 1.0:
                raise RuntimeError("boom")
            return Command(target_speed=5.0, curvature=0.0)

    trace = run_scenario(scenario, Exploding(), road_map)
    assert trace.termination == "policy_fault"
    assert trace.policy_fault and "boom" in trace.policy_fault
    assert trace.states[-1].time < 2.0


def test_participants_follow_script_exactly(road_map):
    result = generate_concrete(slow_npc_abstract(), road_map, seed=0)
    scenario = result.scenario
    policy = make_policy("lanekeeper", scenario, road_map)
    trace = run_scenario(scenario, policy, road_map)
    scripted = script_trajectory(scenario.npcs[0], road_map)
    worst = 0.0
    for state in trace.states:
        npc = state.entity("npc_1")
        ref = scripted.state_at(state.time)
        worst = max(worst, math.hypot(npc.x - ref.x, npc.y - ref.y))
    assert worst < 0.1


def test_trace_jsonl_layout(tmp_path, road_map):
    scenario = generate_concrete(slow_npc_abstract(), road_map, seed=0).scenario
    policy = make_policy("lanekeeper", scenario, road_map)
    trace = run_scenario(scenario, policy, road_map)
    path = tmp_path / "trace.jsonl"
    trace_to_jsonl(trace, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["termination"] == trace.termination
    assert len(header["verdicts"]) == 3
    step = json.loads(lines[1])
    assert any(e["id"] == "ego" for e in step["entities"])
