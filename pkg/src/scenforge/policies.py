"""Built-in ego policies: a scripted replayer, a defensive lane keeper, and
two deliberately flawed lane-keeper variants used as fault archetypes.

Policies are pure state machines over observations; given the same scenario,
map and seed they are fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mapdata import RoadMap
from .scenlang.ast import ConcreteScenario
from .scripting import Trajectory, script_trajectory, _lane_piece
from .sim import MAX_CURVATURE, Command, EntityState, Observation

D_SAFE = 2.0
CRUISE_FACTOR = 0.8
OVERTAKE_TRIGGER = 0.6  # overtake when lead is below this fraction of cruise
LATERAL_RATE = 1.2  # m/s of commanded lateral shift during a lane change
PASS_CLEAR_AHEAD = 12.0  # longitudinal gap before merging back
REAR_GAP = 8.0
STATIC_SPEED_DEFAULT = 0.7


def _wrap(angle: float) -> float:
    while angle > math.pi:
        angle -= 2.0 * math.pi
    while angle < -math.pi:
        angle += 2.0 * math.pi
    return angle


class ScriptedPolicy:
    """Replays a reference trajectory by chasing its time-indexed states."""

    def __init__(self, reference: Trajectory, dt: float = 0.1):
        self.reference = reference
        self.dt = dt
        self.initial_speed = reference.points[0].speed

    def step(self, obs: Observation) -> Command:
        target = self.reference.state_at(obs.time + self.dt)
        dx, dy = target.x - obs.x, target.y - obs.y
        dist = math.hypot(dx, dy)
        speed = dist / self.dt if dist > 1e-9 else 0.0
        if dist < 1e-6 or speed < 0.05:
            return Command(target_speed=speed, curvature=0.0)
        err = _wrap(math.atan2(dy, dx) - obs.heading)
        denom = max(obs.speed, 0.5) * self.dt
        return Command(target_speed=speed, curvature=err / denom)


@dataclass
class _PathPoint:
    x: float
    y: float
    s: float


class LanekeeperPolicy:
    """Pure-pursuit route follower with headway keeping and overtaking.

    flaw selects a fault archetype: "staticbug" treats entities below
    static_speed as immobile obstacles (no headway, late swerve),
    "blindrear" ignores how fast rear traffic on the target lane is closing
    when it starts a lane change.
    """

    def __init__(
        self,
        scenario: ConcreteScenario,
        road_map: RoadMap,
        flaw: str | None = None,
        d_safe: float = D_SAFE,
        static_speed: float = STATIC_SPEED_DEFAULT,
    ):
        self.rm = road_map
        self.flaw = flaw
        self.d_safe = d_safe
        self.static_speed = static_speed
        self.path = self._build_path(scenario)
        start_lane = road_map.lane(scenario.ego.start.lane_id)
        self.cruise = CRUISE_FACTOR * start_lane.speed_limit
        self.lane_width = start_lane.width
        self.ego_half_length = 2.35
        self.ego_half_width = 0.9
        # lateral lane-change state: current and target path offset
        self.lat = 0.0
        self.lat_target = 0.0
        self.passing: str | None = None  # entity id being overtaken

    def _build_path(self, scenario: ConcreteScenario) -> list[_PathPoint]:
        route = self.rm.route(
            scenario.ego.start.lane_id, scenario.ego.destination.lane_id
        )
        if route is None:
            raise ValueError("ego destination unreachable")
        pts: list[tuple[float, float]] = []
        cur_lane = scenario.ego.start.lane_id
        cur_off = scenario.ego.start.offset
        for lane_id, maneuver in route[1:]:
            lane = self.rm.lane(cur_lane)
            if maneuver is not None and not self.rm.lane(lane_id).is_junction:
                # lane change: cut over to the neighbor 20 m ahead
                pts.extend((x, y) for x, y, _ in _lane_piece(lane, cur_off, cur_off))
                nxt = self.rm.lane(lane_id)
                x, y = lane.point_at(cur_off)
                off0, _ = nxt.project(x, y)
                cur_lane, cur_off = lane_id, min(off0 + 20.0, nxt.length)
            else:
                pts.extend((x, y) for x, y, _ in _lane_piece(lane, cur_off, lane.length))
                cur_lane, cur_off = lane_id, 0.0
        last = self.rm.lane(cur_lane)
        pts.extend(
            (x, y)
            for x, y, _ in _lane_piece(last, cur_off, scenario.ego.destination.offset)
        )
        path: list[_PathPoint] = []
        s = 0.0
        for x, y in pts:
            if path and math.hypot(x - path[-1].x, y - path[-1].y) < 1e-9:
                continue
            if path:
                s += math.hypot(x - path[-1].x, y - path[-1].y)
            path.append(_PathPoint(x, y, s))
        return path

    # -- path helpers ---------------------------------------------------------

    def _nearest_s(self, x: float, y: float) -> float:
        best_s, best_d = 0.0, math.inf
        for a, b in zip(self.path, self.path[1:]):
            dx, dy = b.x - a.x, b.y - a.y
            den = dx * dx + dy * dy
            t = 0.0 if den == 0 else max(
                0.0, min(1.0, ((x - a.x) * dx + (y - a.y) * dy) / den)
            )
            px, py = a.x + t * dx, a.y + t * dy
            d = math.hypot(x - px, y - py)
            if d < best_d:
                best_d, best_s = d, a.s + t * math.hypot(dx, dy)
        return best_s

    def _point_at_s(self, s: float) -> tuple[float, float, float, float]:
        """(x, y, tangent_x, tangent_y) at arc position s."""
        s = max(0.0, min(s, self.path[-1].s))
        for a, b in zip(self.path, self.path[1:]):
            if s <= b.s or b is self.path[-1]:
                seg = b.s - a.s
                t = 0.0 if seg == 0 else (s - a.s) / seg
                dx, dy = b.x - a.x, b.y - a.y
                norm = math.hypot(dx, dy) or 1.0
                return a.x + t * dx, a.y + t * dy, dx / norm, dy / norm
        a = self.path[-1]
        return a.x, a.y, 1.0, 0.0

    def _frenet(self, e: EntityState, ego_s: float) -> tuple[float, float]:
        """Longitudinal gap along the path and lateral offset of an entity."""
        s = self._nearest_s(e.x, e.y)
        px, py, tx, ty = self._point_at_s(s)
        lat = -ty * (e.x - px) + tx * (e.y - py)
        return s - ego_s, lat

    # -- control --------------------------------------------------------------

    def _treats_as_static(self, e: EntityState) -> bool:
        return self.flaw == "staticbug" and e.speed < self.static_speed

    def _can_shift_left(self, obs: Observation) -> bool:
        lane = self.rm.nearest_lane(obs.x, obs.y, obs.heading)
        return lane is not None and lane.left_neighbor is not None

    def _rear_unsafe(self, obs: Observation, ego_s: float) -> bool:
        """Is a rear vehicle on the target lane too close to cut in front of?"""
        for e in obs.entities:
            gap, lat = self._frenet(e, ego_s)
            if gap >= 0 or abs(lat - self.lat_target) > self.lane_width / 2.0:
                continue
            closing = e.speed - obs.speed
            if -gap < REAR_GAP:
                return True
            if self.flaw != "blindrear" and closing > 0 and -gap / closing < 3.0:
                return True
        return False

    def step(self, obs: Observation) -> Command:
        ego_s = self._nearest_s(obs.x, obs.y)

        # headway: slowest constraint from entities ahead near our lateral lane
        target_speed = self.cruise
        lead: tuple[float, EntityState] | None = None
        shift_done = self.lat_target > 0 and self.lat >= self.lat_target - 0.05
        for e in obs.entities:
            gap, lat = self._frenet(e, ego_s)
            if gap <= 0:
                continue
            in_corridor = abs(lat - self.lat) <= self.lane_width / 2.0
            # keep holding back behind the overtaken entity until the lateral
            # shift is complete, otherwise we would squeeze past it diagonally
            still_blocked = e.entity_id == self.passing and not shift_done
            if not in_corridor and not still_blocked:
                continue
            if lead is None or gap < lead[0]:
                lead = (gap, e)
        if lead is not None:
            gap, e = lead
            if self._treats_as_static(e):
                # flawed model: plan a swerve around a "parked" obstacle,
                # keep speed until it is close
                if (
                    gap < 18.0
                    and self.passing is None
                    and self._can_shift_left(obs)
                    and not self._rear_unsafe(obs, ego_s)
                ):
                    self.passing = e.entity_id
                    self.lat_target = self.lane_width
            else:
                margin = self.d_safe + self.ego_half_length + e.half_length + 3.0
                target_speed = min(
                    target_speed, max(0.0, e.speed + 0.5 * (gap - margin))
                )
                if (
                    e.speed < OVERTAKE_TRIGGER * self.cruise
                    and self.passing is None
                    and self.lat_target == 0.0
                    and gap < 30.0
                    and self.path[-1].s - ego_s - gap > 25.0  # room to merge back
                    and self._can_shift_left(obs)
                    and not self._rear_unsafe(obs, ego_s)
                ):
                    self.passing = e.entity_id
                    # wide enough to keep d_safe even past a truck
                    self.lat_target = max(
                        self.lane_width,
                        self.ego_half_width + e.half_width + self.d_safe + 0.5,
                    )

        # merge back once the overtaken entity is safely behind
        if self.passing is not None:
            tracked = next(
                (e for e in obs.entities if e.entity_id == self.passing), None
            )
            if tracked is None:
                self.lat_target = 0.0
                self.passing = None
            else:
                gap, _ = self._frenet(tracked, ego_s)
                if gap < -PASS_CLEAR_AHEAD:
                    self.lat_target = 0.0
                    self.passing = None

        # ramp the lateral offset toward its target
        if self.lat < self.lat_target:
            self.lat = min(self.lat + LATERAL_RATE * 0.1, self.lat_target)
        elif self.lat > self.lat_target:
            self.lat = max(self.lat - LATERAL_RATE * 0.1, self.lat_target)

        # pure pursuit toward the laterally shifted path
        lookahead = max(4.0, 0.8 * obs.speed)
        tx_s = ego_s + lookahead
        px, py, tanx, tany = self._point_at_s(tx_s)
        gx, gy = px - tany * self.lat, py + tanx * self.lat
        alpha = _wrap(math.atan2(gy - obs.y, gx - obs.x) - obs.heading)
        curvature = 2.0 * math.sin(alpha) / lookahead
        curvature = max(-MAX_CURVATURE, min(MAX_CURVATURE, curvature))

        # slow down for sharp path curvature ahead
        _, _, t2x, t2y = self._point_at_s(tx_s + 6.0)
        bend = abs(_wrap(math.atan2(t2y, t2x) - math.atan2(tany, tanx)))
        if bend > 0.15:
            target_speed = min(target_speed, 5.0)
        remaining = self.path[-1].s - ego_s
        if remaining < 3.0 and abs(alpha) > math.pi / 2.0:
            # path end is behind us; stop instead of circling back
            return Command(target_speed=0.0, curvature=0.0)
        target_speed = min(target_speed, max(1.0, 0.6 * remaining))
        return Command(target_speed=target_speed, curvature=curvature)


def builtin_policies() -> dict:
    """Registry of policy factories: name -> factory(scenario, road_map, **kw)."""

    def scripted(scenario, road_map, reference=None, dt=0.1, **_):
        ref = reference
        if ref is None:
            raise ValueError("scripted policy needs a reference trajectory")
        if not isinstance(ref, Trajectory):
            ref = script_trajectory(ref, road_map)
        return ScriptedPolicy(ref, dt=dt)

    def lanekeeper(scenario, road_map, **kw):
        return LanekeeperPolicy(scenario, road_map, flaw=None, **kw)

    def staticbug(scenario, road_map, **kw):
        return LanekeeperPolicy(scenario, road_map, flaw="staticbug", **kw)

    def blindrear(scenario, road_map, **kw):
        return LanekeeperPolicy(scenario, road_map, flaw="blindrear", **kw)

    return {
        "scripted": scripted,
        "lanekeeper": lanekeeper,
        "lanekeeper-staticbug": staticbug,
        "lanekeeper-blindrear": blindrear,
    }


def make_policy(name: str, scenario, road_map, **kwargs):
    registry = builtin_policies()
    if name not in registry:
        raise KeyError(f"unknown policy {name!r}")
    return registry[name](scenario, road_map, **kwargs)
