"""Deterministic 2D kinematic micro-simulator.

Executes a concrete scenario against a pluggable ego policy: scripted
participants replay their sampled trajectories exactly, the ego moves under
a unicycle model driven by policy commands, and the three safety assertions
are monitored over the recorded trace. Everything is deterministic for a
given (scenario, policy, dt, horizon, seed) tuple.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .mapdata import RoadMap
from .scenlang.ast import (
    AlwaysClearance,
    Assertion,
    ConcreteScenario,
    EventuallyAtDestination,
    NeverCollision,
    ParticipantType,
)
from .scripting import TrajPoint, Trajectory, script_trajectory

DEFAULT_DT = 0.1
DEFAULT_HORIZON = 60.0
SENSING_RADIUS = 60.0
MAX_ACCEL = 4.0
MAX_CURVATURE = 0.2
PENETRATION_TOLERANCE = 0.01

# length x width footprints (half-extents stored on entities)
FOOTPRINTS = {
    ParticipantType.CAR: (4.7, 1.8),
    ParticipantType.TRUCK: (8.0, 2.5),
    ParticipantType.PEDESTRIAN: (0.5, 0.5),
}


@dataclass(frozen=True)
class EntityState:
    entity_id: str
    x: float
    y: float
    heading: float
    speed: float
    half_length: float
    half_width: float
    entity_type: ParticipantType


@dataclass(frozen=True)
class WorldState:
    time: float
    entities: tuple[EntityState, ...]

    def entity(self, entity_id: str) -> EntityState:
        for e in self.entities:
            if e.entity_id == entity_id:
                return e
        raise KeyError(entity_id)


@dataclass(frozen=True)
class Command:
    target_speed: float
    curvature: float = 0.0


@dataclass(frozen=True)
class Observation:
    time: float
    x: float
    y: float
    heading: float
    speed: float
    destination: tuple[float, float]
    entities: tuple[EntityState, ...]


class EgoPolicy(Protocol):
    def step(self, obs: Observation) -> Command: ...


@dataclass(frozen=True)
class Verdict:
    assertion: str
    satisfied: bool
    step: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class ExecutionTrace:
    states: tuple[WorldState, ...]
    trajectories: dict[str, Trajectory]
    termination: str  # horizon | all_assertions_resolved | collision | policy_fault
    verdicts: tuple[Verdict, ...] = ()
    destination: tuple[float, float] = (0.0, 0.0)
    policy_fault: str | None = None

    @property
    def duration(self) -> float:
        return self.states[-1].time - self.states[0].time


# -- geometry ------------------------------------------------------------------


def _corners(e: EntityState) -> list[tuple[float, float]]:
    c, s = math.cos(e.heading), math.sin(e.heading)
    out = []
    for dl, dw in ((1, 1), (1, -1), (-1, -1), (-1, 1)):
        lx, wy = dl * e.half_length, dw * e.half_width
        out.append((e.x + lx * c - wy * s, e.y + lx * s + wy * c))
    return out


def _axes(e: EntityState) -> list[tuple[float, float]]:
    c, s = math.cos(e.heading), math.sin(e.heading)
    return [(c, s), (-s, c)]


def _overlap_depth(a: EntityState, b: EntityState) -> float:
    """Minimum overlap over the four separating axes; <=0 means disjoint."""
    ca, cb = _corners(a), _corners(b)
    depth = math.inf
    for ax, ay in _axes(a) + _axes(b):
        pa = [x * ax + y * ay for x, y in ca]
        pb = [x * ax + y * ay for x, y in cb]
        overlap = min(max(pa), max(pb)) - max(min(pa), min(pb))
        if overlap <= 0:
            return overlap
        depth = min(depth, overlap)
    return depth


def obb_overlap(a: EntityState, b: EntityState) -> bool:
    return _overlap_depth(a, b) > PENETRATION_TOLERANCE


def _seg_dist(p1, p2, p3, p4) -> float:
    """Minimum distance between segments p1-p2 and p3-p4."""

    def point_seg(px, py, ax, ay, bx, by):
        dx, dy = bx - ax, by - ay
        den = dx * dx + dy * dy
        t = 0.0 if den == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / den))
        return math.hypot(px - (ax + t * dx), py - (ay + t * dy))

    return min(
        point_seg(*p1, *p3, *p4),
        point_seg(*p2, *p3, *p4),
        point_seg(*p3, *p1, *p2),
        point_seg(*p4, *p1, *p2),
    )


def obb_distance(a: EntityState, b: EntityState) -> float:
    """Boundary-to-boundary distance; 0 when the boxes overlap."""
    if _overlap_depth(a, b) > 0:
        return 0.0
    ca, cb = _corners(a), _corners(b)
    best = math.inf
    for i in range(4):
        for j in range(4):
            best = min(
                best,
                _seg_dist(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]),
            )
    return best


def detect_collision(state: WorldState) -> list[tuple[str, str]]:
    """All overlapping entity pairs in one world state."""
    pairs = []
    ents = state.entities
    for i in range(len(ents)):
        for j in range(i + 1, len(ents)):
            if obb_overlap(ents[i], ents[j]):
                pairs.append((ents[i].entity_id, ents[j].entity_id))
    return pairs


# -- execution -----------------------------------------------------------------


def _heading_of(p: TrajPoint, fallback: float) -> float:
    if p.speed < 1e-6:
        return fallback
    return math.atan2(p.vy, p.vx)


def run_scenario(
    scenario: ConcreteScenario,
    policy: EgoPolicy,
    road_map: RoadMap,
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
    seed: int = 0,
) -> ExecutionTrace:
    """Run one scenario to horizon, collision, or destination arrival."""
    if not 0.0 < dt <= 0.5:
        raise ValueError("dt must be in (0, 0.5]")

    scripts: dict[str, Trajectory] = {}
    for traj_def in scenario.participants:
        scripts[traj_def.name] = script_trajectory(traj_def, road_map)

    ego_lane = road_map.lane(scenario.ego.start.lane_id)
    ex, ey = ego_lane.point_at(scenario.ego.start.offset)
    eheading = ego_lane.heading_at(scenario.ego.start.offset)
    espeed = float(getattr(policy, "initial_speed", 0.0))
    ego_half = tuple(v / 2.0 for v in FOOTPRINTS[scenario.ego.vehicle_type])
    dest_lane = road_map.lane(scenario.ego.destination.lane_id)
    dest = dest_lane.point_at(scenario.ego.destination.offset)
    dest_radius = next(
        (a.radius for a in scenario.assertions if isinstance(a, EventuallyAtDestination)),
        3.0,
    )

    headings = {name: 0.0 for name in scripts}
    states: list[WorldState] = []
    ego_points: list[TrajPoint] = []
    termination = "horizon"
    fault = None
    n_steps = int(round(horizon / dt))

    for step in range(n_steps + 1):
        t = step * dt
        ents = [
            EntityState(
                "ego", ex, ey, eheading, espeed, ego_half[0], ego_half[1],
                scenario.ego.vehicle_type,
            )
        ]
        for traj_def in scenario.participants:
            p = scripts[traj_def.name].state_at(t)
            headings[traj_def.name] = _heading_of(p, headings[traj_def.name])
            hl, hw = (v / 2.0 for v in FOOTPRINTS[traj_def.participant_type])
            ents.append(
                EntityState(
                    traj_def.name, p.x, p.y, headings[traj_def.name], p.speed,
                    hl, hw, traj_def.participant_type,
                )
            )
        world = WorldState(time=round(t, 9), entities=tuple(ents))
        states.append(world)
        lane = road_map.nearest_lane(ex, ey, eheading)
        ego_points.append(
            TrajPoint(
                round(t, 9), ex, ey,
                espeed * math.cos(eheading), espeed * math.sin(eheading),
                lane.lane_id if lane is not None else None,
            )
        )

        if any("ego" in pair for pair in detect_collision(world)):
            termination = "collision"
            break
        if math.hypot(ex - dest[0], ey - dest[1]) <= dest_radius:
            termination = "all_assertions_resolved"
            break
        if step == n_steps:
            break

        visible = tuple(
            e
            for e in world.entities[1:]
            if math.hypot(e.x - ex, e.y - ey) <= SENSING_RADIUS
        )
        obs = Observation(
            time=world.time, x=ex, y=ey, heading=eheading, speed=espeed,
            destination=dest, entities=visible,
        )
        try:
            cmd = policy.step(obs)
        except Exception as exc:  # policy bug: truncate, keep what we have
            termination = "policy_fault"
            fault = f"{type(exc).__name__}: {exc}"
            break

        accel = max(-MAX_ACCEL, min(MAX_ACCEL, (cmd.target_speed - espeed) / dt))
        espeed = max(0.0, espeed + accel * dt)
        curvature = max(-MAX_CURVATURE, min(MAX_CURVATURE, cmd.curvature))
        eheading += curvature * espeed * dt
        ex += espeed * math.cos(eheading) * dt
        ey += espeed * math.sin(eheading) * dt

    trajectories = dict(scripts)
    if len(ego_points) >= 2:
        trajectories["ego"] = Trajectory(points=tuple(ego_points))
    trace = ExecutionTrace(
        states=tuple(states),
        trajectories=trajectories,
        termination=termination,
        destination=dest,
        policy_fault=fault,
    )
    verdicts = monitor_assertions(trace, scenario.assertions)
    return ExecutionTrace(
        states=trace.states,
        trajectories=trace.trajectories,
        termination=termination,
        verdicts=tuple(verdicts),
        destination=dest,
        policy_fault=fault,
    )


def monitor_assertions(
    trace: ExecutionTrace, assertions: tuple[Assertion, ...]
) -> list[Verdict]:
    """One verdict per assertion, evaluated over the recorded states."""
    if not trace.states:
        raise ValueError("empty trace")
    verdicts: list[Verdict] = []
    for a in assertions:
        if isinstance(a, NeverCollision):
            verdicts.append(_check_never_collision(trace))
        elif isinstance(a, AlwaysClearance):
            verdicts.append(_check_clearance(trace, a.min_clearance))
        elif isinstance(a, EventuallyAtDestination):
            verdicts.append(_check_destination(trace, a.within, a.radius))
        else:
            raise ValueError(f"unknown assertion {a!r}")
    return verdicts


def _check_never_collision(trace: ExecutionTrace) -> Verdict:
    for i, state in enumerate(trace.states):
        pairs = [p for p in detect_collision(state) if "ego" in p]
        if pairs:
            other = pairs[0][0] if pairs[0][1] == "ego" else pairs[0][1]
            return Verdict(
                "never_collision", False, i, f"ego collided with {other}"
            )
    return Verdict("never_collision", True)


def _check_clearance(trace: ExecutionTrace, min_clearance: float) -> Verdict:
    for i, state in enumerate(trace.states):
        ego = state.entities[0]
        for other in state.entities[1:]:
            d = obb_distance(ego, other)
            if d < min_clearance:
                return Verdict(
                    "always_clearance", False, i,
                    f"clearance {d:.3f} m to {other.entity_id}",
                )
    return Verdict("always_clearance", True)


def _check_destination(trace: ExecutionTrace, within: float, radius: float) -> Verdict:
    dx, dy = trace.destination
    for i, state in enumerate(trace.states):
        if state.time > within:
            break
        ego = state.entities[0]
        if math.hypot(ego.x - dx, ego.y - dy) <= radius:
            return Verdict("eventually_at_destination", True, i)
    return Verdict(
        "eventually_at_destination", False, None,
        f"destination not reached within {within} s",
    )


# -- trace serialization -------------------------------------------------------


def trace_to_jsonl(trace: ExecutionTrace, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "termination": trace.termination,
            "destination": list(trace.destination),
            "policy_fault": trace.policy_fault,
            "verdicts": [
                {
                    "assertion": v.assertion,
                    "satisfied": v.satisfied,
                    "step": v.step,
                    "detail": v.detail,
                }
                for v in trace.verdicts
            ],
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for state in trace.states:
            line = {
                "t": state.time,
                "entities": [
                    {
                        "id": e.entity_id,
                        "x": round(e.x, 6),
                        "y": round(e.y, 6),
                        "heading": round(e.heading, 6),
                        "speed": round(e.speed, 6),
                        "half_extents": [e.half_length, e.half_width],
                        "type": e.entity_type.value,
                    }
                    for e in state.entities
                ],
            }
            fh.write(json.dumps(line, sort_keys=True) + "\n")
