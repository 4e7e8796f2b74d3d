"""Scenario inspection: feasibility constraints and action recognition.

Feasibility covers four constraint families (heading, spatial, speed,
temporal). Action recognition segments a trajectory at significant motion
state changes, then classifies each segment against per-action specification
predicates in a fixed priority order. check_semantic_equivalence ties both
together: a concrete scenario conforms to an abstract one when every
participant's extracted action sequence matches its declared behaviors and
the scenario is feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .abstraction import AbstractScenario, Role
from .actions import Action
from .mapdata import RoadMap, _norm_angle
from .metrics import ActionSequence
from .scenlang.ast import (
    ConcreteScenario,
    LanePosition,
    ParticipantType,
    TrajectoryDef,
)
from .scripting import DWELL_SPEED, TrajPoint, Trajectory, script_trajectory, waypoint_world

TAU_TRAJ = 0.5
VELOCITY_WEIGHT = 1.0
THRESHOLD_C = 0.5  # m/s^2, below which speed is considered constant
BRAKE_RATE = 3.0  # m/s^2
BRAKE_END_SPEED = 0.5
STILL_SPEED = 0.1
STILL_MIN_DURATION = 1.0
MIN_SEPARATION = 5.0
KINEMATIC_SLACK = 1.2
PARALLEL_TOLERANCE = 30.0  # degrees
BBOX_MARGIN = 1.0


@dataclass(frozen=True)
class MotionSegment:
    start_index: int
    end_index: int
    lane_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.end_index <= self.start_index:
            raise ValueError("segment needs >=2 waypoints")


@dataclass(frozen=True)
class FeasibilityReport:
    diagnostics: tuple[tuple[str, str, str], ...] = ()  # (family, participant, detail)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def families(self) -> set[str]:
        return {d[0] for d in self.diagnostics}


# -- motion segmentation ------------------------------------------------------


def _deviation(prev: TrajPoint, cur: TrajPoint, nxt: TrajPoint, w_v: float) -> float:
    """Distance of cur from the time-linear interpolation of its neighbors."""
    span = nxt.t - prev.t
    alpha = 0.5 if span <= 0 else (cur.t - prev.t) / span
    ix = (1 - alpha) * prev.x + alpha * nxt.x
    iy = (1 - alpha) * prev.y + alpha * nxt.y
    ivx = (1 - alpha) * prev.vx + alpha * nxt.vx
    ivy = (1 - alpha) * prev.vy + alpha * nxt.vy
    return math.hypot(cur.x - ix, cur.y - iy) + w_v * math.hypot(
        cur.vx - ivx, cur.vy - ivy
    )


def segment_motions(
    traj: Trajectory,
    road_map: RoadMap | None = None,
    tau: float = TAU_TRAJ,
    w_v: float = VELOCITY_WEIGHT,
) -> list[MotionSegment]:
    """Split a trajectory where motion deviates from neighbor interpolation.

    With a map, entering or leaving a junction lane is also a boundary: lane
    context is part of the motion state for action recognition.
    """
    pts = traj.points
    n = len(pts)
    cut_set = set()
    if n >= 3:
        for i in range(1, n - 1):
            if _deviation(pts[i - 1], pts[i], pts[i + 1], w_v) > tau:
                cut_set.add(i)
    if road_map is not None:
        def in_junction(p: TrajPoint) -> bool:
            return p.lane_id is not None and road_map.lane(p.lane_id).is_junction

        for i in range(1, n):
            if in_junction(pts[i]) != in_junction(pts[i - 1]):
                cut_set.add(i)
    cuts = [0] + sorted(c for c in cut_set if 0 < c < n - 1) + [n - 1]
    segments = []
    for a, b in zip(cuts, cuts[1:]):
        if b == a:
            continue
        lanes: list[str] = []
        for p in pts[a : b + 1]:
            if p.lane_id is not None and (not lanes or lanes[-1] != p.lane_id):
                lanes.append(p.lane_id)
        segments.append(MotionSegment(a, b, tuple(lanes)))
    return segments


# -- action classification ----------------------------------------------------


def _inside_any_lane(road_map: RoadMap, x: float, y: float) -> bool:
    for lane in road_map.lanes.values():
        off, lat = lane.project(x, y)
        if abs(lat) <= lane.width / 2.0 and 0.0 <= off <= lane.length:
            return True
    return False


def _nearest_lane_any_heading(road_map: RoadMap, x: float, y: float):
    best = None
    for lane in road_map.lanes.values():
        if lane.is_junction:
            continue
        off, lat = lane.project(x, y)
        if best is None or abs(lat) < best[0]:
            best = (abs(lat), lane, off)
    return (best[1], best[2]) if best else (None, 0.0)


def _classify_pedestrian(
    pts: list[TrajPoint], road_map: RoadMap, duration: float
) -> Action | None:
    speeds = [p.speed for p in pts]
    if max(speeds) < STILL_SPEED:
        return Action.STAND if duration >= STILL_MIN_DURATION else None
    dx = pts[-1].x - pts[0].x
    dy = pts[-1].y - pts[0].y
    if math.hypot(dx, dy) < 0.2:
        return None
    midx = (pts[0].x + pts[-1].x) / 2.0
    midy = (pts[0].y + pts[-1].y) / 2.0
    lane, off = _nearest_lane_any_heading(road_map, midx, midy)
    if lane is None:
        return None
    ldx, ldy = lane.direction_at(off)
    diff = abs(math.degrees(_norm_angle(math.atan2(dy, dx) - math.atan2(ldy, ldx))))
    if diff < PARALLEL_TOLERANCE or diff > 180.0 - PARALLEL_TOLERANCE:
        return Action.WALK_ALONG
    if abs(diff - 90.0) < PARALLEL_TOLERANCE:
        if any(_inside_any_lane(road_map, p.x, p.y) for p in pts):
            return Action.CROSS
        return Action.WALK_ACROSS
    return None


def _heading(p: TrajPoint) -> float | None:
    if p.speed < 1e-6:
        return None
    return math.atan2(p.vy, p.vx)


def _classify_vehicle_maneuver(
    pts: list[TrajPoint], segment: MotionSegment, road_map: RoadMap, duration: float
) -> Action | None:
    speeds = [p.speed for p in pts]
    if max(speeds) < STILL_SPEED:
        return Action.STOP if duration >= STILL_MIN_DURATION else None

    flags = [
        p.lane_id is not None and road_map.lane(p.lane_id).is_junction for p in pts
    ]
    if flags[0]:
        # junction traversal: label by signed heading change across it
        h0 = _heading(pts[0])
        h1 = _heading(pts[-1])
        if h0 is None or h1 is None:
            return None
        turn = math.degrees(_norm_angle(h1 - h0))
        if 45.0 < turn < 135.0:
            return Action.TURN_LEFT
        if -135.0 < turn < -45.0:
            return Action.TURN_RIGHT
        if abs(turn) < 45.0:
            return Action.CROSS
        return None

    # a trailing junction-flagged point is the shared entry boundary of the
    # next segment; it does not make this segment a junction traversal
    lanes: list[str] = []
    for p, flag in zip(pts, flags):
        if flag or p.lane_id is None:
            continue
        if not lanes or lanes[-1] != p.lane_id:
            lanes.append(p.lane_id)
    if not lanes:
        return None

    if len(lanes) >= 2 and lanes[0] != lanes[-1]:
        start_lane, end_lane = lanes[0], lanes[-1]
        if road_map.same_road(start_lane, end_lane):
            lane = road_map.lane(start_lane)
            off0, _ = lane.project(pts[0].x, pts[0].y)
            dirx, diry = lane.direction_at(off0)
            dx = pts[-1].x - pts[0].x
            dy = pts[-1].y - pts[0].y
            longitudinal = dx * dirx + dy * diry
            lateral_left = dirx * dy - diry * dx
            # driving-position spec: stay within the start/end bounding box
            lo_x = min(pts[0].x, pts[-1].x) - BBOX_MARGIN
            hi_x = max(pts[0].x, pts[-1].x) + BBOX_MARGIN
            lo_y = min(pts[0].y, pts[-1].y) - BBOX_MARGIN
            hi_y = max(pts[0].y, pts[-1].y) + BBOX_MARGIN
            inside = all(lo_x <= p.x <= hi_x and lo_y <= p.y <= hi_y for p in pts)
            if inside and longitudinal > 0:
                if lateral_left > 0 and road_map.is_left_of(end_lane, start_lane):
                    return Action.CHANGE_LEFT
                if lateral_left < 0 and road_map.is_left_of(start_lane, end_lane):
                    return Action.CHANGE_RIGHT
        chained = all(
            b in road_map.lane(a).successors for a, b in zip(lanes, lanes[1:])
        )
        if chained:
            return Action.DRIVE_THROUGH
        return None

    if lanes:
        # forward motion along one lane
        lane = road_map.lane(lanes[0])
        off0, _ = lane.project(pts[0].x, pts[0].y)
        off1, _ = lane.project(pts[-1].x, pts[-1].y)
        if off1 > off0:
            return Action.FOLLOW_LANE
    return None


def classify_action(
    traj: Trajectory,
    segment: MotionSegment,
    road_map: RoadMap,
    participant_type: ParticipantType,
    threshold_c: float = THRESHOLD_C,
) -> Action | None:
    """Classify one motion segment; None means no specification matched."""
    pts = list(traj.points[segment.start_index : segment.end_index + 1])
    duration = pts[-1].t - pts[0].t
    if duration <= 0:
        return None
    v_start, v_end = pts[0].speed, pts[-1].speed
    rate = (v_end - v_start) / duration

    if abs(rate) < threshold_c:
        if participant_type is ParticipantType.PEDESTRIAN:
            return _classify_pedestrian(pts, road_map, duration)
        return _classify_vehicle_maneuver(pts, segment, road_map, duration)

    if participant_type is ParticipantType.PEDESTRIAN:
        return None
    if rate <= -BRAKE_RATE and v_end < BRAKE_END_SPEED:
        return Action.BRAKE
    if rate >= threshold_c:
        return Action.ACCELERATE
    return Action.DECELERATE


def extract_action_sequence(
    traj: Trajectory,
    road_map: RoadMap,
    participant_type: ParticipantType,
    diagnostics: list[str] | None = None,
    tau: float = TAU_TRAJ,
    threshold_c: float = THRESHOLD_C,
) -> ActionSequence:
    """Per-segment actions, consecutive duplicates merged.

    Unclassified segments are appended to diagnostics (if given) and skipped.
    """
    actions: list[Action] = []
    for seg in segment_motions(traj, road_map, tau=tau):
        action = classify_action(traj, seg, road_map, participant_type, threshold_c)
        if action is None:
            if diagnostics is not None:
                diagnostics.append(
                    f"unclassified segment [{seg.start_index}, {seg.end_index}]"
                )
            continue
        if not actions or actions[-1] is not action:
            actions.append(action)
    return ActionSequence(tuple(actions))


# -- feasibility ---------------------------------------------------------------


def check_feasibility(
    scenario: ConcreteScenario, road_map: RoadMap
) -> FeasibilityReport:
    """All four constraint families over one scenario."""
    diags: list[tuple[str, str, str]] = []

    # (1) heading: vehicles must not move backward relative to lane direction;
    # the ego task must be reachable without reversing.
    if road_map.route(scenario.ego.start.lane_id, scenario.ego.destination.lane_id) is None:
        diags.append(
            ("heading", "ego", "no forward route from start to destination")
        )
    for traj in scenario.npcs:
        for i, (wa, wb) in enumerate(zip(traj.waypoints, traj.waypoints[1:])):
            if not (
                isinstance(wa.position, LanePosition)
                and isinstance(wb.position, LanePosition)
            ):
                continue
            xa, ya = waypoint_world(wa, road_map)
            xb, yb = waypoint_world(wb, road_map)
            lane = road_map.lane(wa.position.lane_id)
            dirx, diry = lane.direction_at(wa.position.offset)
            if (xb - xa) * dirx + (yb - ya) * diry < -1e-6:
                diags.append(
                    (
                        "heading",
                        traj.name,
                        f"backward motion on {wa.position.lane_id} at leg {i}",
                    )
                )

    # (2) spatial: pairwise initial separation
    starts: list[tuple[str, float, float]] = [
        ("ego", *road_map.lane(scenario.ego.start.lane_id).point_at(scenario.ego.start.offset))
    ]
    for traj in scenario.participants:
        starts.append((traj.name, *waypoint_world(traj.waypoints[0], road_map)))
    for i in range(len(starts)):
        for j in range(i + 1, len(starts)):
            d = math.hypot(starts[i][1] - starts[j][1], starts[i][2] - starts[j][2])
            if d < MIN_SEPARATION:
                diags.append(
                    (
                        "spatial",
                        starts[j][0],
                        f"only {d:.2f} m from {starts[i][0]} at start (min {MIN_SEPARATION:g})",
                    )
                )

    # (3) speed: declared waypoint speeds within lane limits
    for traj in scenario.npcs:
        for i, wp in enumerate(traj.waypoints):
            if isinstance(wp.position, LanePosition):
                limit = road_map.lane(wp.position.lane_id).speed_limit
                if wp.speed > limit + 1e-9:
                    diags.append(
                        (
                            "speed",
                            traj.name,
                            f"waypoint {i} speed {wp.speed:g} exceeds limit {limit:g}",
                        )
                    )

    # (4) temporal: time pins increasing and kinematically reachable
    for traj in scenario.participants:
        t_est = traj.waypoints[0].time or 0.0
        for i, (wa, wb) in enumerate(zip(traj.waypoints, traj.waypoints[1:])):
            xa, ya = waypoint_world(wa, road_map)
            xb, yb = waypoint_world(wb, road_map)
            dist = math.hypot(xb - xa, yb - ya)
            if wb.time is not None:
                dt = wb.time - t_est
                if dt <= 0:
                    diags.append(
                        ("temporal", traj.name, f"non-increasing time at waypoint {i + 1}")
                    )
                    continue
                allowed = max(wa.speed, wb.speed, DWELL_SPEED) * KINEMATIC_SLACK
                if dist / dt > allowed + 1e-9:
                    diags.append(
                        (
                            "temporal",
                            traj.name,
                            f"needs {dist / dt:.1f} m/s to reach waypoint {i + 1},"
                            f" declared allows {allowed:.1f} m/s",
                        )
                    )
                t_est = wb.time
            else:
                v0 = max(wa.speed, DWELL_SPEED)
                v1 = max(wb.speed, DWELL_SPEED)
                if wa.speed < DWELL_SPEED and dist < 0.1:
                    t_est += 2.0
                else:
                    t_est += dist / ((v0 + v1) / 2.0)

    return FeasibilityReport(diagnostics=tuple(diags))


# -- semantic equivalence ------------------------------------------------------


def _merge_duplicates(behaviors: tuple[Action, ...]) -> tuple[Action, ...]:
    out: list[Action] = []
    for b in behaviors:
        if not out or out[-1] is not b:
            out.append(b)
    return tuple(out)


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    diffs: dict[str, tuple[tuple[Action, ...], tuple[Action, ...]]] = field(
        default_factory=dict
    )
    feasibility: FeasibilityReport = field(default_factory=FeasibilityReport)

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.equivalent


def check_semantic_equivalence(
    scenario: ConcreteScenario,
    abstract: AbstractScenario,
    road_map: RoadMap,
    ego_reference: TrajectoryDef | None = None,
) -> EquivalenceResult:
    """True iff every participant realizes its declared behaviors and the
    scenario is feasible. Participants pair with abstract specs by role and
    order; the ego is checked only when a reference trajectory is supplied.
    """
    npc_specs = [p for p in abstract.others if p.role is Role.NPC]
    ped_specs = [p for p in abstract.others if p.role is Role.PEDESTRIAN]
    if len(npc_specs) != len(scenario.npcs) or len(ped_specs) != len(
        scenario.pedestrians
    ):
        raise ValueError(
            f"participant count mismatch: abstract has {len(npc_specs)} NPCs /"
            f" {len(ped_specs)} pedestrians, scenario has {len(scenario.npcs)} /"
            f" {len(scenario.pedestrians)}"
        )

    diffs: dict[str, tuple[tuple[Action, ...], tuple[Action, ...]]] = {}
    pairs = list(zip(scenario.npcs, npc_specs)) + list(
        zip(scenario.pedestrians, ped_specs)
    )
    if ego_reference is not None:
        pairs.append((ego_reference, abstract.ego))
    for traj_def, spec in pairs:
        traj = script_trajectory(traj_def, road_map)
        extracted = tuple(
            extract_action_sequence(traj, road_map, traj_def.participant_type).actions
        )
        expected = _merge_duplicates(spec.behaviors)
        if extracted != expected:
            diffs[traj_def.name] = (expected, extracted)

    feasibility = check_feasibility(scenario, road_map)
    return EquivalenceResult(
        equivalent=not diffs and feasibility.ok,
        diffs=diffs,
        feasibility=feasibility,
    )
