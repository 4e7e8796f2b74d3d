import random

import pytest

from corpus import (
    adversarial_scenarios,
    clean_scenario,
    labeled_trajectories,
    random_lane_change,
)
from scenforge.actions import Action
from scenforge.abstraction import MockProvider, build_abstract
from scenforge.inspection import (
    _merge_duplicates,
    check_feasibility,
    check_semantic_equivalence,
    extract_action_sequence,
    segment_motions,
)
from scenforge.scenlang.ast import ParticipantType
from scenforge.scripting import script_trajectory
from scenforge.synth import generate_concrete

OPPOSITE = {Action.CHANGE_LEFT: Action.CHANGE_RIGHT, Action.CHANGE_RIGHT: Action.CHANGE_LEFT}


def test_labeled_corpus_classifies_exactly(road_map):
    items = labeled_trajectories(road_map)
    assert len(items) >= 30
    for label, tdef, ptype, road_type in items:
        traj = script_trajectory(tdef, road_map)
        got = extract_action_sequence(traj, road_map, ptype).actions
        assert got == label, (road_type, tdef.name, got, label)


def test_lane_changes_never_cross_classify(road_map):
    rng = random.Random(123)
    for _ in range(100):
        expected, tdef = random_lane_change(rng, road_map)
        traj = script_trajectory(tdef, road_map)
        got = extract_action_sequence(traj, road_map, tdef.participant_type).actions
        assert expected in got
        assert OPPOSITE[expected] not in got


def test_segmentation_splits_on_speed_change(road_map):
    from scenforge.scenlang.ast import LanePosition, TrajectoryDef, Waypoint

    tdef = TrajectoryDef(
        "npc_1",
        ParticipantType.CAR,
        (
            Waypoint(LanePosition("lane_100", 0.0), 10.0),
            Waypoint(LanePosition("lane_100", 50.0), 10.0),
            Waypoint(LanePosition("lane_100", 70.0), 2.0),
        ),
    )
    traj = script_trajectory(tdef, road_map)
    segs = segment_motions(traj, road_map)
    assert len(segs) >= 2


def test_merge_duplicates():
    merged = _merge_duplicates(
        (Action.FOLLOW_LANE, Action.FOLLOW_LANE, Action.BRAKE, Action.BRAKE)
    )
    assert merged == (Action.FOLLOW_LANE, Action.BRAKE)


def test_clean_scenarios_have_no_diagnostics(road_map):
    rng = random.Random(0)
    for _ in range(12):
        report = check_feasibility(clean_scenario(rng), road_map)
        assert report.ok, report.diagnostics


def test_adversarial_scenarios_hit_expected_family(road_map):
    rng = random.Random(1)
    for family, scenario in adversarial_scenarios(rng, per_family=3):
        report = check_feasibility(scenario, road_map)
        assert not report.ok
        assert report.families() == {family}, report.diagnostics


def test_semantic_equivalence_roundtrip(road_map):
    log = {
        "road_type": "straight",
        "ego": {"vehicle_type": "car", "behaviors": ["follow_lane", "accelerate"]},
        "participants": [
            {
                "role": "npc",
                "vehicle_type": "car",
                "behaviors": ["brake", "stop"],
                "relative_position": "ahead",
            }
        ],
    }
    abstract = build_abstract(MockProvider(log))
    result = generate_concrete(abstract, road_map, seed=1)
    eq = check_semantic_equivalence(
        result.scenario, abstract, road_map, ego_reference=result.ego_reference
    )
    assert bool(eq)
    assert eq.diffs == {}


def test_semantic_equivalence_detects_behavior_drift(road_map):
    import dataclasses

    log = {
        "road_type": "straight",
        "ego": {"vehicle_type": "car", "behaviors": ["follow_lane"]},
        "participants": [
            {
                "role": "npc",
                "vehicle_type": "car",
                "behaviors": ["follow_lane"],
                "relative_position": "ahead",
            }
        ],
    }
    abstract = build_abstract(MockProvider(log))
    result = generate_concrete(abstract, road_map, seed=1)
    npc = result.scenario.npcs[0]
    # stall the NPC: declared follow_lane but realized as a dwell in place
    frozen = dataclasses.replace(
        npc,
        waypoints=(
            dataclasses.replace(npc.waypoints[0], speed=0.0),
            dataclasses.replace(
                npc.waypoints[0], speed=0.0
            ),
        ),
    )
    tampered = dataclasses.replace(result.scenario, npcs=(frozen,))
    eq = check_semantic_equivalence(
        tampered, abstract, road_map, ego_reference=result.ego_reference
    )
    assert not bool(eq)
    assert "npc_1" in eq.diffs
