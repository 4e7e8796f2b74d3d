"""Labeled trajectory corpus built from the synthesis templates.

Each entry pairs a declared behavior list with the concrete trajectory the
templates realize for it, giving ground-truth labels for the action
classifier across all three road types.
"""

import random

from conftest import make_abstract
from scenforge.actions import (
    Action,
    RelativePosition,
    Role,
    RoadType,
    VehicleType,
)
from scenforge.inspection import _merge_duplicates
from scenforge.scenlang.ast import (
    LanePosition,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
)
from scenforge.synth import generate_concrete

A = Action
RP = RelativePosition
VT = VehicleType

# (road_type, ego_behaviors, [(role, vtype, behaviors, relpos), ...])
CASES = [
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE, A.CHANGE_LEFT),
        [
            (Role.NPC, VT.CAR, (A.FOLLOW_LANE,), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.WALK_ALONG,), RP.LEFT_FRONT),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE, A.CHANGE_RIGHT),
        [
            (Role.NPC, VT.TRUCK, (A.ACCELERATE,), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.WALK_ACROSS,), RP.RIGHT_FRONT),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.DRIVE_THROUGH,),
        [
            (Role.NPC, VT.CAR, (A.BRAKE, A.STOP), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.STAND,), RP.RIGHT_FRONT),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE, A.ACCELERATE),
        [
            (Role.NPC, VT.CAR, (A.FOLLOW_LANE, A.DECELERATE), RP.BEHIND),
            (Role.PEDESTRIAN, VT.NONE, (A.CROSS,), RP.RIGHT_FRONT),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE, A.DECELERATE),
        [
            (Role.NPC, VT.CAR, (A.ACCELERATE, A.DECELERATE), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.STAND, A.WALK_ALONG), RP.RIGHT_FRONT),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE, A.BRAKE, A.STOP),
        [
            (Role.NPC, VT.CAR, (A.DRIVE_THROUGH,), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.WALK_ALONG, A.WALK_ACROSS), RP.RIGHT_FRONT),
        ],
    ),
    (
        RoadType.INTERSECTION,
        (A.FOLLOW_LANE, A.TURN_LEFT),
        [
            (Role.NPC, VT.TRUCK, (A.FOLLOW_LANE, A.CROSS), RP.OPPOSITE),
            (Role.PEDESTRIAN, VT.NONE, (A.CROSS,), RP.LEFT_VERTICAL),
        ],
    ),
    (
        RoadType.INTERSECTION,
        (A.FOLLOW_LANE, A.TURN_RIGHT),
        [
            (Role.NPC, VT.CAR, (A.FOLLOW_LANE, A.CROSS), RP.AHEAD),
        ],
    ),
    (
        RoadType.T_JUNCTION,
        (A.FOLLOW_LANE, A.TURN_RIGHT),
        [
            (Role.NPC, VT.CAR, (A.FOLLOW_LANE, A.TURN_LEFT), RP.RIGHT_VERTICAL),
        ],
    ),
    (
        RoadType.STRAIGHT,
        (A.FOLLOW_LANE,),
        [
            (Role.NPC, VT.TRUCK, (A.FOLLOW_LANE, A.CHANGE_RIGHT), RP.LEFT_FRONT),
            (Role.NPC, VT.CAR, (A.STOP,), RP.AHEAD),
            (Role.PEDESTRIAN, VT.NONE, (A.CROSS,), RP.LEFT_FRONT),
        ],
    ),
    (
        RoadType.T_JUNCTION,
        (A.FOLLOW_LANE, A.CROSS),
        [
            (Role.NPC, VT.CAR, (A.FOLLOW_LANE, A.TURN_RIGHT), RP.RIGHT_VERTICAL),
        ],
    ),
]


def labeled_trajectories(road_map, seed=0):
    """Yield (label, trajectory_def, participant_type, road_type) tuples.

    The label is the declared behavior list after duplicate merging, i.e.
    exactly what extraction should recover.
    """
    out = []
    for road_type, ego_behaviors, others in CASES:
        abstract = make_abstract(
            road_type=road_type, ego_behaviors=ego_behaviors, others=others
        )
        result = generate_concrete(abstract, road_map, seed=seed)
        scenario = result.scenario
        out.append(
            (
                _merge_duplicates(tuple(ego_behaviors)),
                result.ego_reference,
                ParticipantType.CAR,
                road_type,
            )
        )
        for spec, traj in zip(abstract.others, scenario.participants):
            ptype = (
                ParticipantType.PEDESTRIAN
                if spec.role is Role.PEDESTRIAN
                else ParticipantType(spec.vehicle_type.value)
            )
            out.append((_merge_duplicates(spec.behaviors), traj, ptype, road_type))
    return out


def clean_scenario(rng: random.Random):
    """A hand-built scenario that passes every feasibility family."""
    from scenforge.scenlang.ast import ConcreteScenario, EgoTask

    ego_start = 10.0
    npc_start = ego_start + rng.uniform(20.0, 40.0)
    speed = rng.uniform(4.0, 12.0)
    ego = EgoTask(
        ParticipantType.CAR,
        LanePosition("lane_100", ego_start),
        LanePosition("lane_100", 90.0),
    )
    npc = TrajectoryDef(
        name="npc_1",
        participant_type=ParticipantType.CAR,
        waypoints=(
            Waypoint(LanePosition("lane_100", round(npc_start, 3)), round(speed, 3)),
            Waypoint(LanePosition("lane_100", 95.0), round(speed, 3)),
        ),
    )
    return ConcreteScenario(map_id="fixture_city", ego=ego, npcs=(npc,))


def adversarial_scenarios(rng: random.Random, per_family: int = 10):
    """(family, scenario) pairs, each violating exactly one constraint family."""
    import dataclasses

    out = []
    for _ in range(per_family):
        base = clean_scenario(rng)
        npc = base.npcs[0]

        backward = dataclasses.replace(
            npc, waypoints=tuple(reversed(npc.waypoints))
        )
        out.append(("heading", dataclasses.replace(base, npcs=(backward,))))

        crowd_start = base.ego.start.offset + rng.uniform(0.5, 4.5)
        crowded = dataclasses.replace(
            npc,
            waypoints=(
                Waypoint(
                    LanePosition("lane_100", round(crowd_start, 3)),
                    npc.waypoints[0].speed,
                ),
                npc.waypoints[1],
            ),
        )
        out.append(("spatial", dataclasses.replace(base, npcs=(crowded,))))

        limit_break = rng.uniform(16.0, 30.0)  # fixture limit is 15
        speeding = dataclasses.replace(
            npc,
            waypoints=(
                Waypoint(npc.waypoints[0].position, round(limit_break, 3)),
                npc.waypoints[1],
            ),
        )
        out.append(("speed", dataclasses.replace(base, npcs=(speeding,))))

        # pin the second waypoint far too early for the declared speed
        dist = npc.waypoints[1].position.offset - npc.waypoints[0].position.offset
        rushed = dataclasses.replace(
            npc,
            waypoints=(
                dataclasses.replace(npc.waypoints[0], time=0.0),
                dataclasses.replace(
                    npc.waypoints[1],
                    time=round(dist / (npc.waypoints[0].speed * 5.0), 3),
                ),
            ),
        )
        out.append(("temporal", dataclasses.replace(base, npcs=(rushed,))))
    return out


def random_lane_change(rng: random.Random, road_map):
    """A randomized single lane change; returns (expected_action, traj_def)."""
    pairs = [("lane_100", "lane_110"), ("lane_101", "lane_111")]
    low, high = rng.choice(pairs)
    to_left = rng.random() < 0.5
    src, dst = (low, high) if to_left else (high, low)
    expected = A.CHANGE_LEFT if to_left else A.CHANGE_RIGHT
    speed = rng.uniform(3.0, 12.0)
    o0 = rng.uniform(0.0, 40.0)
    o1 = o0 + rng.uniform(15.0, 50.0)
    traj = TrajectoryDef(
        name="npc_1",
        participant_type=ParticipantType.CAR,
        waypoints=(
            Waypoint(LanePosition(src, o0), speed),
            Waypoint(LanePosition(dst, o1), speed),
        ),
    )
    return expected, traj
