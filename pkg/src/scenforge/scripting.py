"""Turns declarative waypoint trajectories into timed, sampled trajectories.

A scenario program only declares waypoints with held speeds; simulation,
feasibility checking and action recognition all need positions/velocities
over time. The sampler walks each leg's lane geometry, ramps speed linearly
between the declared endpoint speeds and assigns timestamps from arc length
(or from explicit `@ time` pins). A waypoint speed below 0.05 m/s is a dwell:
the participant holds its position for the dwell duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mapdata import Lane, RoadMap
from .scenlang.ast import LanePosition, TrajectoryDef, Waypoint

DWELL_SPEED = 0.05
DEFAULT_DWELL_DURATION = 2.0
CURVE_SAMPLE_SPACING = 3.0


@dataclass(frozen=True)
class TrajPoint:
    t: float
    x: float
    y: float
    vx: float
    vy: float
    lane_id: str | None = None

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class Trajectory:
    points: tuple[TrajPoint, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError("trajectory needs >=2 points")
        for a, b in zip(self.points, self.points[1:]):
            if b.t <= a.t:
                raise ValueError("trajectory timestamps must be strictly increasing")
        for p in self.points:
            if not all(map(math.isfinite, (p.t, p.x, p.y, p.vx, p.vy))):
                raise ValueError("non-finite trajectory value")

    @property
    def duration(self) -> float:
        return self.points[-1].t - self.points[0].t

    def positions(self) -> list[tuple[float, float]]:
        return [(p.x, p.y) for p in self.points]

    def state_at(self, t: float) -> TrajPoint:
        """Linear interpolation between samples; clamped at the ends."""
        pts = self.points
        if t <= pts[0].t:
            return pts[0]
        if t >= pts[-1].t:
            p = pts[-1]
            return TrajPoint(t, p.x, p.y, 0.0, 0.0, p.lane_id)
        lo, hi = 0, len(pts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pts[mid].t <= t:
                lo = mid
            else:
                hi = mid
        a, b = pts[lo], pts[hi]
        u = (t - a.t) / (b.t - a.t)
        return TrajPoint(
            t,
            a.x + u * (b.x - a.x),
            a.y + u * (b.y - a.y),
            a.vx + u * (b.vx - a.vx),
            a.vy + u * (b.vy - a.vy),
            a.lane_id,
        )


def waypoint_world(wp: Waypoint, road_map: RoadMap) -> tuple[float, float]:
    if isinstance(wp.position, LanePosition):
        lane = road_map.lane(wp.position.lane_id)
        return lane.point_at(wp.position.offset, wp.lateral or 0.0)
    return wp.position


def _lane_piece(
    lane: Lane, off_a: float, off_b: float
) -> list[tuple[float, float, str]]:
    """Sampled centerline between two offsets; interior vertices included."""
    offs = [off_a]
    if off_b >= off_a:
        interior = [s for s in lane._cum if off_a < s < off_b]
    else:
        interior = [s for s in reversed(lane._cum) if off_b < s < off_a]
    offs.extend(interior)
    offs.append(off_b)
    return [(*lane.point_at(s), lane.lane_id) for s in offs]


def _successor_chain(road_map: RoadMap, start: str, goal: str, depth: int = 4):
    """Lane chain start..goal following only successor links, or None."""
    frontier = [[start]]
    seen = {start}
    for _ in range(depth):
        nxt = []
        for path in frontier:
            if path[-1] == goal:
                return path
            for succ in road_map.lane(path[-1]).successors:
                if succ in road_map.lanes and succ not in seen:
                    seen.add(succ)
                    nxt.append(path + [succ])
        frontier = nxt
    for path in frontier:
        if path[-1] == goal:
            return path
    return None


def _dedupe(pts):
    out = []
    for p in pts:
        if out and math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) < 1e-9:
            # keep the later lane id so boundary points belong to the new lane
            out[-1] = (out[-1][0], out[-1][1], p[2])
            continue
        out.append(p)
    return out


def _leg_path(
    wp_a: Waypoint, wp_b: Waypoint, road_map: RoadMap
) -> list[tuple[float, float, str | None]]:
    """Geometric path of one leg as (x, y, lane_id) samples."""
    a_lane = isinstance(wp_a.position, LanePosition)
    b_lane = isinstance(wp_b.position, LanePosition)
    start = (*waypoint_world(wp_a, road_map), None)
    end = (*waypoint_world(wp_b, road_map), None)

    if a_lane and b_lane:
        pa: LanePosition = wp_a.position
        pb: LanePosition = wp_b.position
        lat_a = wp_a.lateral or 0.0
        lat_b = wp_b.lateral or 0.0
        if pa.lane_id == pb.lane_id:
            lane = road_map.lane(pa.lane_id)
            pts = _lane_piece(lane, pa.offset, pb.offset)
            return _dedupe(_apply_lateral(lane, pts, pa.offset, pb.offset, lat_a, lat_b))
        chain = _successor_chain(road_map, pa.lane_id, pb.lane_id)
        if chain:
            pts: list[tuple[float, float, str]] = []
            for k, lid in enumerate(chain):
                lane = road_map.lane(lid)
                o0 = pa.offset if k == 0 else 0.0
                o1 = pb.offset if k == len(chain) - 1 else lane.length
                piece = _lane_piece(lane, o0, o1)
                # shared boundary point takes the new lane's id
                pts = piece if not pts else pts[:-1] + piece
            return _dedupe(pts)
        if road_map.same_road(pa.lane_id, pb.lane_id):
            # lane change: straight cut between the two lane-frame points
            return [
                (*road_map.lane(pa.lane_id).point_at(pa.offset, lat_a), pa.lane_id),
                (*road_map.lane(pb.lane_id).point_at(pb.offset, lat_b), pb.lane_id),
            ]
    return [start, end]


def _apply_lateral(lane, pts, off_a, off_b, lat_a, lat_b):
    if lat_a == 0.0 and lat_b == 0.0:
        return pts
    total = abs(off_b - off_a)
    out = []
    run = 0.0
    prev = None
    for x, y, lid in pts:
        if prev is not None:
            run += math.hypot(x - prev[0], y - prev[1])
        frac = 0.0 if total == 0.0 else min(run / total, 1.0)
        lat = lat_a + frac * (lat_b - lat_a)
        off = off_a + (run if off_b >= off_a else -run)
        out.append((*lane.point_at(off, lat), lid))
        prev = (x, y)
    return out


def _leg_times(length: float, v0: float, v1: float, arcs: list[float]) -> list[float]:
    """Time offsets for arc positions under a linear speed ramp v0 -> v1."""
    v0 = max(v0, DWELL_SPEED)
    v1 = max(v1, DWELL_SPEED)
    duration = length / ((v0 + v1) / 2.0)
    times = []
    for s in arcs:
        if abs(v1 - v0) < 1e-9:
            times.append(s / v0)
            continue
        a = (v1 - v0) / duration
        # solve v0*t + a*t^2/2 = s for t in [0, duration]
        disc = max(v0 * v0 + 2.0 * a * s, 0.0)
        times.append((math.sqrt(disc) - v0) / a if a != 0 else s / v0)
    return times


def script_trajectory(
    traj_def: TrajectoryDef,
    road_map: RoadMap,
    start_time: float = 0.0,
    dwell_duration: float = DEFAULT_DWELL_DURATION,
) -> Trajectory:
    """Sample a waypoint trajectory into a timed Trajectory."""
    wps = traj_def.waypoints
    points: list[TrajPoint] = []
    t_cur = start_time
    if wps[0].time is not None:
        t_cur = wps[0].time

    for i in range(len(wps) - 1):
        wa, wb = wps[i], wps[i + 1]
        v0, v1 = wa.speed, wb.speed
        path = _leg_path(wa, wb, road_map)
        arcs = [0.0]
        for (x0, y0, _), (x1, y1, _) in zip(path, path[1:]):
            arcs.append(arcs[-1] + math.hypot(x1 - x0, y1 - y0))
        length = arcs[-1]

        if v0 < DWELL_SPEED and length < 0.1:
            # dwell: hold position, zero velocity
            duration = (wb.time - t_cur) if wb.time is not None else dwell_duration
            if duration <= 0:
                raise ValueError(
                    f"{traj_def.name}: non-increasing time pin at waypoint {i + 1}"
                )
            x, y, lid = path[0]
            _append(points, TrajPoint(t_cur, x, y, 0.0, 0.0, lid))
            _append(points, TrajPoint(t_cur + duration, x, y, 0.0, 0.0, lid))
            t_cur += duration
            continue

        if wb.time is not None:
            duration = wb.time - t_cur
            if duration <= 0:
                raise ValueError(
                    f"{traj_def.name}: non-increasing time pin at waypoint {i + 1}"
                )
            base = _leg_times(length, v0, v1, arcs)
            scale = duration / base[-1] if base[-1] > 0 else 1.0
            times = [tb * scale for tb in base]
        else:
            times = _leg_times(length, v0, v1, arcs)
            duration = times[-1]

        last = len(path) - 1
        for j, ((x, y, lid), dt) in enumerate(zip(path, times)):
            if j == last and i < len(wps) - 2:
                break  # shared with the next leg's first point
            if j == last:
                dx, dy = x - path[j - 1][0], y - path[j - 1][1]
            else:
                dx, dy = path[j + 1][0] - x, path[j + 1][1] - y
            d = math.hypot(dx, dy)
            frac = dt / duration if duration > 0 else 0.0
            speed = v0 + frac * (v1 - v0)
            if d < 1e-9:
                vx = vy = 0.0
            else:
                vx, vy = speed * dx / d, speed * dy / d
            _append(points, TrajPoint(t_cur + dt, x, y, vx, vy, lid))
        t_cur += duration

    return Trajectory(points=tuple(points))


def _append(points: list[TrajPoint], p: TrajPoint) -> None:
    """Append, skipping time-duplicate samples at leg boundaries."""
    if points and p.t - points[-1].t < 1e-9:
        prev = points[-1]
        if math.hypot(p.x - prev.x, p.y - prev.y) < 1e-6:
            return
        raise ValueError("zero-duration displacement between waypoints")
    points.append(p)
