"""Concrete scenario generation from abstract scenarios.

Deterministic template engine realizing the staged pipeline: road selection,
ego task designation, road division around the ego, per-participant waypoint
templates, default assertions, and a feasibility-repair loop. Prompt builders
for a remote generation provider are kept alongside, but the template path is
the default engine and the only one exercised by tests.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .abstraction import AbstractScenario
from .actions import (
    MANEUVER_ACTIONS,
    Action,
    RelativePosition,
    RoadType,
    Role,
    VehicleType,
)
from .inspection import check_feasibility
from .mapdata import Lane, RoadMap
from .scenlang.ast import (
    ConcreteScenario,
    EgoTask,
    LanePosition,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
    default_assertions,
)

FRONT_GAP = 15.0
BEHIND_GAP = 15.0
EGO_START_OFFSET = 10.0
EGO_DEST_MARGIN = 20.0
SLOT_SPACING = 12.0
NPC_SPEED_FACTOR = 0.8
JUNCTION_SPEED = 5.0
WALK_SPEED = 1.5
CURB_MARGIN = 2.0
REPAIR_ROUNDS = 3

JUNCTION_MANEUVERS = frozenset({Action.TURN_LEFT, Action.TURN_RIGHT, Action.CROSS})
_SPEED_TEMPLATES = frozenset({Action.ACCELERATE, Action.DECELERATE, Action.BRAKE})


class GenerationError(Exception):
    def __init__(self, message: str, diagnostics: tuple = ()):
        self.diagnostics = diagnostics
        super().__init__(message)


@dataclass(frozen=True)
class RoadSegment:
    segment_id: str
    road_type: RoadType
    lane_ids: tuple[str, ...]  # straight lanes, or junction approach lanes
    connector_ids: tuple[str, ...] = ()

    @property
    def all_lanes(self) -> tuple[str, ...]:
        return self.lane_ids + self.connector_ids


@dataclass(frozen=True)
class RoadDivision:
    division_id: RelativePosition
    lanes: tuple[str, ...]
    longitudinal_range: tuple[float, float]


def select_road(road_map: RoadMap, road_type: RoadType) -> RoadSegment:
    """Deterministic segment choice: the lowest lane id of the matching type."""
    if road_type is RoadType.STRAIGHT:
        candidates = [
            lane
            for lane in road_map.lanes.values()
            if not lane.is_junction and _is_plain_straight(lane, road_map)
        ]
        if not candidates:
            raise GenerationError("map has no plain straight road")
        seed_lane = min(candidates, key=lambda ln: ln.lane_id)
        lanes = _straight_closure(seed_lane, road_map)
        return RoadSegment(seed_lane.lane_id, road_type, tuple(sorted(lanes)))

    connectors = sorted(
        lid for lid, lane in road_map.lanes.items() if lane.road_type is road_type
    )
    if not connectors:
        raise GenerationError(f"map has no {road_type.value} segment")
    approaches = sorted(
        {pred for c in connectors for pred in road_map.predecessors(c)}
    )
    return RoadSegment(connectors[0], road_type, tuple(approaches), tuple(connectors))


def _is_plain_straight(lane: Lane, road_map: RoadMap) -> bool:
    near = list(lane.successors) + road_map.predecessors(lane.lane_id)
    return all(not road_map.lane(n).is_junction for n in near if n in road_map.lanes)


def _straight_closure(seed: Lane, road_map: RoadMap) -> set[str]:
    seen = set()
    stack = [seed.lane_id]
    while stack:
        lid = stack.pop()
        if lid in seen:
            continue
        lane = road_map.lane(lid)
        if lane.is_junction or not _is_plain_straight(lane, road_map):
            continue
        seen.add(lid)
        stack.extend(
            n
            for n in (
                [lane.left_neighbor, lane.right_neighbor]
                + list(lane.successors)
                + road_map.predecessors(lid)
            )
            if n
        )
    return seen


# -- waypoint templates --------------------------------------------------------


class _Composer:
    """Walks behavior templates, accumulating waypoints and kinematic state."""

    def __init__(self, road_map: RoadMap, lane_id: str, offset: float, speed: float):
        self.rm = road_map
        self.lane_id = lane_id
        self.offset = offset
        self.speed = speed
        self.waypoints: list[Waypoint] = [
            Waypoint(LanePosition(lane_id, round(offset, 3)), round(speed, 3))
        ]

    @property
    def lane(self) -> Lane:
        return self.rm.lane(self.lane_id)

    def _emit(self, lane_id: str, offset: float, speed: float) -> None:
        self.waypoints.append(
            Waypoint(LanePosition(lane_id, round(offset, 3)), round(speed, 3))
        )
        self.lane_id, self.offset, self.speed = lane_id, offset, speed

    def _remaining(self) -> float:
        return self.lane.length - self.offset

    def _advance_lane(self) -> None:
        """Hop to a non-junction successor when the current lane is consumed."""
        succs = sorted(
            s for s in self.lane.successors if not self.rm.lane(s).is_junction
        )
        if not succs:
            raise GenerationError(f"no successor lane after {self.lane_id}")
        self.lane_id, self.offset = succs[0], 0.0

    def follow_lane(
        self, next_action: Action | None, after_next: Action | None = None
    ) -> None:
        if self.speed < 1.0:
            raise GenerationError("follow_lane template needs speed >= 1 m/s")
        if next_action in JUNCTION_MANEUVERS:
            self._emit(self.lane_id, self.lane.length, self.speed)
            return
        if next_action in (Action.CHANGE_LEFT, Action.CHANGE_RIGHT) and (
            after_next in JUNCTION_MANEUVERS
        ):
            # leave a short merge gap so the lane change has a crisp onset
            target = self.lane.length - 20.0
            if target - self.offset < 5.0:
                raise GenerationError(f"lane {self.lane_id} too short to follow")
            self._emit(self.lane_id, target, self.speed)
            return
        # leave room for a speed-change template on the same lane
        reserve = 20.0 if next_action in _SPEED_TEMPLATES else 5.0
        if self._remaining() < reserve + 10.0:
            self._advance_lane()
        dist = min(40.0, self._remaining() - reserve)
        if dist < 10.0:
            raise GenerationError(f"lane {self.lane_id} too short to follow")
        self._emit(self.lane_id, self.offset + dist, self.speed)

    def change(self, action: Action, next_action: Action | None) -> None:
        nb = (
            self.lane.left_neighbor
            if action is Action.CHANGE_LEFT
            else self.lane.right_neighbor
        )
        if nb is None:
            raise GenerationError(f"no {action.value} neighbor for {self.lane_id}")
        nb_lane = self.rm.lane(nb)
        x, y = self.lane.point_at(self.offset)
        off0, _ = nb_lane.project(x, y)
        if next_action in JUNCTION_MANEUVERS:
            # merge all the way to the junction entry so the following turn
            # starts exactly at the connector
            target = nb_lane.length - 0.4
        else:
            target = off0 + 15.0
        if target > nb_lane.length or target - off0 < 8.0:
            raise GenerationError(f"no room to {action.value} into {nb}")
        self._emit(nb, target, self.speed)

    def turn_or_cross(self, action: Action) -> None:
        if abs(self._remaining()) > 0.5:
            raise GenerationError(
                f"{action.value} needs the approach consumed; precede it with"
                " follow_lane or a lane change"
            )
        connectors = sorted(
            s
            for s in self.lane.successors
            if self.rm.lane(s).is_junction and self.rm.connector_maneuver(s) is action
        )
        if not connectors:
            raise GenerationError(
                f"lane {self.lane_id} has no {action.value} connector"
            )
        conn = self.rm.lane(connectors[0])
        speed = min(self.speed, JUNCTION_SPEED)
        if abs(speed - self.speed) > 1e-9:
            raise GenerationError(
                f"{action.value} template needs approach speed <= {JUNCTION_SPEED}"
            )
        self._emit(conn.lane_id, conn.length, speed)

    def drive_through(self) -> None:
        succs = sorted(
            s for s in self.lane.successors if not self.rm.lane(s).is_junction
        )
        if not succs:
            raise GenerationError(f"no through lane after {self.lane_id}")
        nxt = self.rm.lane(succs[0])
        self._emit(nxt.lane_id, min(30.0, nxt.length - 5.0), self.speed)

    def _ramp_dist(
        self,
        v1: float,
        lo_rate: float,
        hi_rate: float,
        margin: float,
        reserve: float = 0.0,
    ):
        """Distance of a speed ramp to v1, fitting the rate into [lo, hi]."""
        avail = self._remaining() - margin - reserve
        mean = (self.speed + v1) / 2.0
        dv = abs(self.speed - v1)
        if avail <= 0:
            return None
        rate = min(max(dv * mean / avail, lo_rate), hi_rate)
        dist = dv * mean / rate
        return dist if dist <= avail else None

    def accelerate(self, next_action: Action | None = None) -> None:
        v1 = min(self.speed + 3.0, self.lane.speed_limit)
        if v1 - self.speed < 1.5:
            raise GenerationError("no headroom to accelerate under the speed limit")
        # keep room for a following speed ramp on the same lane
        reserve = 20.0 if next_action in _SPEED_TEMPLATES else 0.0
        dist = self._ramp_dist(v1, 0.75, 2.5, 2.0, reserve)
        if dist is None:
            raise GenerationError(f"lane {self.lane_id} too short to accelerate")
        self._emit(self.lane_id, self.offset + dist, v1)

    def decelerate(self, next_action: Action | None) -> None:
        v1 = 0.04 if next_action is Action.STOP else max(self.speed - 3.0, 1.5)
        if self.speed - v1 < 1.5:
            raise GenerationError("too slow to decelerate further")
        reserve = 20.0 if next_action in _SPEED_TEMPLATES else 0.0
        dist = self._ramp_dist(v1, 1.0, 2.8, 2.0, reserve)
        if dist is None:
            raise GenerationError(f"lane {self.lane_id} too short to decelerate")
        self._emit(self.lane_id, self.offset + dist, v1)

    def brake(self, next_action: Action | None) -> None:
        v1 = 0.04 if next_action is Action.STOP else 0.3
        if self.speed <= v1:
            raise GenerationError("brake template needs forward speed")
        dist = self._ramp_dist(v1, 3.5, 8.0, 1.0)
        if dist is None:
            raise GenerationError(f"lane {self.lane_id} too short to brake")
        self._emit(self.lane_id, self.offset + dist, v1)

    def stop(self) -> None:
        if self.speed > 0.05:
            raise GenerationError(
                "stop template needs prior brake/decelerate ending near standstill"
            )
        self._emit(self.lane_id, self.offset, 0.0)


def compose_vehicle_waypoints(
    road_map: RoadMap,
    lane_id: str,
    offset: float,
    behaviors: tuple[Action, ...],
    base_speed: float,
) -> tuple[Waypoint, ...]:
    """Instantiate vehicle behavior templates into a waypoint list."""
    if any(b in JUNCTION_MANEUVERS for b in behaviors):
        base_speed = min(base_speed, JUNCTION_SPEED)
    start_speed = 0.0 if behaviors[0] is Action.STOP else base_speed
    if behaviors[0] in JUNCTION_MANEUVERS:
        offset = road_map.lane(lane_id).length
    comp = _Composer(road_map, lane_id, offset, start_speed)
    for i, action in enumerate(behaviors):
        nxt = behaviors[i + 1] if i + 1 < len(behaviors) else None
        nxt2 = behaviors[i + 2] if i + 2 < len(behaviors) else None
        if action is Action.FOLLOW_LANE:
            comp.follow_lane(nxt, nxt2)
        elif action in (Action.CHANGE_LEFT, Action.CHANGE_RIGHT):
            comp.change(action, nxt)
        elif action in JUNCTION_MANEUVERS:
            comp.turn_or_cross(action)
        elif action is Action.DRIVE_THROUGH:
            comp.drive_through()
        elif action is Action.ACCELERATE:
            comp.accelerate(nxt)
        elif action is Action.DECELERATE:
            comp.decelerate(nxt)
        elif action is Action.BRAKE:
            comp.brake(nxt)
        elif action is Action.STOP:
            comp.stop()
        else:
            raise GenerationError(f"no vehicle template for {action.value}")
    return tuple(comp.waypoints)


def compose_pedestrian_waypoints(
    road_map: RoadMap,
    ref_lane_id: str,
    offset: float,
    behaviors: tuple[Action, ...],
    walk_speed: float = WALK_SPEED,
) -> tuple[Waypoint, ...]:
    """Pedestrian behavior templates as free (x, y) waypoints near a lane."""
    lane = road_map.lane(ref_lane_id)
    # start on the outer curb of the road, clear of any neighboring lane
    side = 1.0 if lane.left_neighbor is None else -1.0
    x, y = lane.point_at(offset, side * (lane.width / 2.0 + CURB_MARGIN))
    start_speed = 0.0 if behaviors[0] is Action.STAND else walk_speed

    def emit(px: float, py: float, spd: float) -> Waypoint:
        return Waypoint((round(px, 3), round(py, 3)), round(spd, 3))

    wps = [emit(x, y, start_speed)]
    for action in behaviors:
        off, lat = lane.project(x, y)
        dirx, diry = lane.direction_at(off)
        away = (-diry, dirx)  # unit lateral, positive to the lane's left
        if action is Action.STAND:
            wps.append(emit(x, y, 0.0))
        elif action is Action.WALK_ALONG:
            x, y = x + 8.0 * dirx, y + 8.0 * diry
            wps.append(emit(x, y, walk_speed))
        elif action is Action.WALK_ACROSS:
            sgn = 1.0 if lat >= 0 else -1.0  # away from the lane
            x, y = x + sgn * 6.0 * away[0], y + sgn * 6.0 * away[1]
            wps.append(emit(x, y, walk_speed))
        elif action is Action.CROSS:
            mid = lane.point_at(off)
            far = -math.copysign(lane.width / 2.0 + CURB_MARGIN, lat)
            x, y = lane.point_at(off, far)
            wps.append(emit(*mid, walk_speed))
            wps.append(emit(x, y, walk_speed))
        else:
            raise GenerationError(f"no pedestrian template for {action.value}")
    if len(wps) < 2:
        raise GenerationError("pedestrian behaviors produced no motion")
    return tuple(wps)


# -- ego task ------------------------------------------------------------------


def assign_ego_task(
    road: RoadSegment,
    behaviors: tuple[Action, ...],
    road_map: RoadMap,
    vehicle_type: VehicleType = VehicleType.CAR,
    base_speed: float | None = None,
    needed_positions: frozenset[RelativePosition] = frozenset(),
) -> tuple[EgoTask, TrajectoryDef]:
    """Ego start/destination plus the reference trajectory realizing them."""
    lane_id = _ego_start_lane(road, behaviors, road_map, needed_positions)
    lane = road_map.lane(lane_id)
    if base_speed is None:
        base_speed = NPC_SPEED_FACTOR * lane.speed_limit
    if behaviors == (Action.FOLLOW_LANE,):
        start = LanePosition(lane_id, EGO_START_OFFSET)
        dest = LanePosition(lane_id, lane.length - EGO_DEST_MARGIN)
        wps = (
            Waypoint(start, round(base_speed, 3)),
            Waypoint(dest, round(base_speed, 3)),
        )
    else:
        wps = compose_vehicle_waypoints(
            road_map, lane_id, EGO_START_OFFSET, behaviors, base_speed
        )
        start = wps[0].position
        dest = wps[-1].position
    task = EgoTask(
        vehicle_type=ParticipantType(vehicle_type.value), start=start, destination=dest
    )
    _check_route(task, behaviors, road_map)
    reference = TrajectoryDef(
        name="ego", participant_type=task.vehicle_type, waypoints=wps
    )
    return task, reference


def _ego_start_lane(
    road: RoadSegment,
    behaviors: tuple[Action, ...],
    road_map: RoadMap,
    needed_positions: frozenset[RelativePosition] = frozenset(),
) -> str:
    maneuvers = [b for b in behaviors if b in MANEUVER_ACTIONS]
    left_needed = {RelativePosition.LEFT_FRONT, RelativePosition.LEFT_BEHIND}
    right_needed = {RelativePosition.RIGHT_FRONT, RelativePosition.RIGHT_BEHIND}
    for lid in road.lane_ids:
        lane = road_map.lane(lid)
        if needed_positions & left_needed and lane.left_neighbor is None:
            continue
        if needed_positions & right_needed and lane.right_neighbor is None:
            continue
        ok = True
        probe = lid
        for m in maneuvers:
            if m is Action.CHANGE_LEFT:
                probe = road_map.lane(probe).left_neighbor
            elif m is Action.CHANGE_RIGHT:
                probe = road_map.lane(probe).right_neighbor
            else:
                conns = [
                    s
                    for s in road_map.lane(probe).successors
                    if road_map.connector_maneuver(s) is m
                ]
                probe = conns[0] if conns else None
            if probe is None:
                ok = False
                break
        if ok:
            return lid
    raise GenerationError(
        f"ego behaviors {[b.value for b in maneuvers]} unrealizable on"
        f" {road.road_type.value} segment {road.segment_id}"
    )


def _check_route(
    task: EgoTask, behaviors: tuple[Action, ...], road_map: RoadMap
) -> None:
    route = road_map.route(task.start.lane_id, task.destination.lane_id)
    if route is None:
        raise GenerationError("ego destination unreachable from start")
    route_maneuvers = [m for _, m in route if m in MANEUVER_ACTIONS]
    declared = [b for b in behaviors if b in MANEUVER_ACTIONS]
    if route_maneuvers != declared:
        raise GenerationError(
            f"route maneuvers {[m.value for m in route_maneuvers]} do not match"
            f" declared {[b.value for b in declared]}"
        )


# -- road division ---------------------------------------------------------------


def divide_road(
    road: RoadSegment, ego_start: LanePosition, road_map: RoadMap
) -> dict[RelativePosition, RoadDivision]:
    """Ego-relative divisions; vertical/opposite only exist at junctions."""
    ego_lane = road_map.lane(ego_start.lane_id)
    off = ego_start.offset
    divisions: dict[RelativePosition, RoadDivision] = {}

    def add(pos: RelativePosition, lane_id: str, lo: float, hi: float) -> None:
        lane = road_map.lane(lane_id)
        lo = max(0.0, min(lo, lane.length))
        hi = max(lo, min(hi, lane.length))
        divisions[pos] = RoadDivision(pos, (lane_id,), (lo, hi))

    add(RelativePosition.AHEAD, ego_lane.lane_id, off + FRONT_GAP, ego_lane.length)
    add(RelativePosition.BEHIND, ego_lane.lane_id, 0.0, off - BEHIND_GAP)
    if ego_lane.left_neighbor:
        nb = ego_lane.left_neighbor
        add(RelativePosition.LEFT_FRONT, nb, off + FRONT_GAP, road_map.lane(nb).length)
        add(RelativePosition.LEFT_BEHIND, nb, 0.0, off - BEHIND_GAP)
    if ego_lane.right_neighbor:
        nb = ego_lane.right_neighbor
        add(RelativePosition.RIGHT_FRONT, nb, off + FRONT_GAP, road_map.lane(nb).length)
        add(RelativePosition.RIGHT_BEHIND, nb, 0.0, off - BEHIND_GAP)

    if road.road_type is not RoadType.STRAIGHT:
        ex, ey = ego_lane.point_at(off)
        edx, edy = ego_lane.direction_at(off)
        group = set(road_map.neighbor_group(ego_lane.lane_id))
        for lid in road.lane_ids:
            if lid in group:
                continue
            lane = road_map.lane(lid)
            mid = lane.point_at(lane.length / 2.0)
            ldx, ldy = lane.direction_at(lane.length / 2.0)
            dot = edx * ldx + edy * ldy
            if dot < -0.7:
                pos = RelativePosition.OPPOSITE
            elif abs(dot) < 0.3:
                side = edx * (mid[1] - ey) - edy * (mid[0] - ex)
                pos = (
                    RelativePosition.LEFT_VERTICAL
                    if side > 0
                    else RelativePosition.RIGHT_VERTICAL
                )
            else:
                continue
            if pos not in divisions:
                add(pos, lid, max(0.0, lane.length - 60.0), lane.length - 10.0)
    return divisions


# -- participant generation ------------------------------------------------------


def gen_participant_trajectory(
    division: RoadDivision,
    behaviors: tuple[Action, ...],
    participant_type: ParticipantType,
    road_map: RoadMap,
    name: str,
    base_speed: float | None = None,
    slot: int = 0,
    offset_jitter: float = 0.0,
    speed_factor: float = 1.0,
) -> TrajectoryDef:
    lane_id = division.lanes[0]
    lane = road_map.lane(lane_id)
    lo, hi = division.longitudinal_range
    offset = lo + (hi - lo) * 0.25 + slot * SLOT_SPACING + offset_jitter
    offset = max(lo, min(offset, hi))

    if participant_type is ParticipantType.PEDESTRIAN:
        wps = compose_pedestrian_waypoints(
            road_map, lane_id, offset, behaviors, WALK_SPEED * speed_factor
        )
    else:
        speed = (base_speed or NPC_SPEED_FACTOR * lane.speed_limit) * speed_factor
        speed = min(speed, lane.speed_limit)
        wps = compose_vehicle_waypoints(road_map, lane_id, offset, behaviors, speed)
    return TrajectoryDef(name=name, participant_type=participant_type, waypoints=wps)


def attach_assertions(
    scenario: ConcreteScenario,
    clearance: float = 2.0,
    within: float = 60.0,
    radius: float = 3.0,
) -> ConcreteScenario:
    """Ensure the default assertion triple; custom assertions are kept."""
    configured = default_assertions(clearance=clearance, within=within, radius=radius)
    if scenario.assertions not in (default_assertions(), configured):
        return scenario
    return ConcreteScenario(
        map_id=scenario.map_id,
        ego=scenario.ego,
        npcs=scenario.npcs,
        pedestrians=scenario.pedestrians,
        assertions=configured,
    )


@dataclass(frozen=True)
class GenerationResult:
    scenario: ConcreteScenario
    ego_reference: TrajectoryDef


def generate_concrete(
    abstract: AbstractScenario,
    road_map: RoadMap,
    seed: int = 0,
    clearance: float = 2.0,
    within: float = 60.0,
    radius: float = 3.0,
) -> GenerationResult:
    """Template-mode generation with a bounded feasibility-repair loop."""
    road = select_road(road_map, abstract.road_type)
    ego_spec = abstract.ego
    task, reference = assign_ego_task(
        road,
        ego_spec.behaviors,
        road_map,
        vehicle_type=ego_spec.vehicle_type,
        needed_positions=frozenset(
            p.relative_position for p in abstract.others if p.relative_position
        ),
    )
    divisions = divide_road(road, task.start, road_map)
    rng = random.Random(seed)

    jitters: dict[str, tuple[float, float]] = {}
    last_report = None
    for attempt in range(REPAIR_ROUNDS + 1):
        npcs: list[TrajectoryDef] = []
        peds: list[TrajectoryDef] = []
        slots: dict[RelativePosition, int] = {}
        try:
            for spec in abstract.others:
                pos = spec.relative_position
                if pos not in divisions:
                    raise GenerationError(
                        f"no {pos.value} division on {abstract.road_type.value} road"
                    )
                slot = slots.get(pos, 0)
                slots[pos] = slot + 1
                name = (
                    f"npc_{len(npcs) + 1}"
                    if spec.role is Role.NPC
                    else f"ped_{len(peds) + 1}"
                )
                oj, sf = jitters.get(name, (0.0, 1.0))
                traj = gen_participant_trajectory(
                    divisions[pos],
                    spec.behaviors,
                    ParticipantType(spec.vehicle_type.value)
                    if spec.role is Role.NPC
                    else ParticipantType.PEDESTRIAN,
                    road_map,
                    name,
                    slot=slot,
                    offset_jitter=oj,
                    speed_factor=sf,
                )
                (npcs if spec.role is Role.NPC else peds).append(traj)
        except GenerationError as exc:
            raise GenerationError(str(exc), diagnostics=((str(exc),),)) from None

        scenario = attach_assertions(
            ConcreteScenario(
                map_id=road_map.map_id,
                ego=task,
                npcs=tuple(npcs),
                pedestrians=tuple(peds),
            ),
            clearance=clearance,
            within=within,
            radius=radius,
        )
        report = check_feasibility(scenario, road_map)
        if report.ok:
            return GenerationResult(scenario=scenario, ego_reference=reference)
        last_report = report
        # widen the jitter window each round so clustered spawns can escape
        amp = 10.0 * (attempt + 1)
        for family, participant, _ in report.diagnostics:
            if participant in {t.name for t in scenario.participants}:
                jitters[participant] = (
                    rng.uniform(-amp, amp),
                    rng.uniform(0.8, 1.2),
                )
    raise GenerationError(
        f"generation failed after {REPAIR_ROUNDS} repair rounds",
        diagnostics=last_report.diagnostics if last_report else (),
    )


# -- remote-path prompt builders --------------------------------------------------


def build_generation_prompts(
    abstract: AbstractScenario, road: RoadSegment, road_map: RoadMap
) -> list[str]:
    """Staged prompts mirroring the template pipeline for a remote provider."""
    lanes = ", ".join(road.lane_ids)
    return [
        f"Select the road for a {abstract.road_type.value} scenario."
        f" Candidate lanes with their IDs, directions and lengths: {lanes}.",
        "Determine the ego vehicle's driving task: give its initial position"
        ' and destination as lane positions, e.g. ("lane_222" -> 10).',
        "Divide the selected road into divisions relative to the ego vehicle"
        " (ahead, behind, left/right front, left/right behind, verticals,"
        " opposite) and assign each traffic participant to one division.",
        "For each participant, define its trajectory as waypoints; each"
        ' waypoint is ("lane_id" -> offset, lateral, speed), e.g.'
        ' (("lane_223" -> 30, , 5), ("lane_223" -> 100, , 8)).',
        "Attach the safety assertions: the ego never collides, keeps a safe"
        " distance from other participants, and eventually reaches its"
        " destination in time.",
    ]
