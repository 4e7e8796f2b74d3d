"""Lane-level road maps: geometry queries, lane graph routing, JSON I/O.

Maps are flat collections of lanes. A lane is a polyline centerline with a
width, a speed limit, optional same-direction neighbors and successor links.
Lanes inside a junction carry the junction's road_type tag (intersection or
t_junction); all other lanes are tagged straight. Lateral offsets are signed,
positive to the left of the driving direction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .actions import Action, RoadType


@dataclass
class Lane:
    lane_id: str
    centerline: list[tuple[float, float]]
    width: float
    speed_limit: float
    left_neighbor: str | None = None
    right_neighbor: str | None = None
    successors: list[str] = field(default_factory=list)
    road_type: RoadType = RoadType.STRAIGHT

    def __post_init__(self) -> None:
        if len(self.centerline) < 2:
            raise ValueError(f"lane {self.lane_id}: centerline needs >=2 points")
        self._cum = [0.0]
        for (x0, y0), (x1, y1) in zip(self.centerline, self.centerline[1:]):
            self._cum.append(self._cum[-1] + math.hypot(x1 - x0, y1 - y0))

    @property
    def length(self) -> float:
        return self._cum[-1]

    @property
    def is_junction(self) -> bool:
        return self.road_type is not RoadType.STRAIGHT

    def _segment_at(self, offset: float) -> tuple[int, float]:
        """Segment index and fraction along it for an arclength offset."""
        s = min(max(offset, 0.0), self.length)
        for i in range(len(self._cum) - 1):
            if s <= self._cum[i + 1] or i == len(self._cum) - 2:
                seg_len = self._cum[i + 1] - self._cum[i]
                frac = 0.0 if seg_len == 0.0 else (s - self._cum[i]) / seg_len
                return i, frac
        raise AssertionError("unreachable")

    def direction_at(self, offset: float) -> tuple[float, float]:
        """Unit driving direction at an arclength offset."""
        i, _ = self._segment_at(offset)
        (x0, y0), (x1, y1) = self.centerline[i], self.centerline[i + 1]
        d = math.hypot(x1 - x0, y1 - y0)
        return ((x1 - x0) / d, (y1 - y0) / d)

    def heading_at(self, offset: float) -> float:
        dx, dy = self.direction_at(offset)
        return math.atan2(dy, dx)

    def point_at(self, offset: float, lateral: float = 0.0) -> tuple[float, float]:
        """World point at (offset, lateral); lateral positive to the left."""
        i, frac = self._segment_at(offset)
        (x0, y0), (x1, y1) = self.centerline[i], self.centerline[i + 1]
        x = x0 + frac * (x1 - x0)
        y = y0 + frac * (y1 - y0)
        dx, dy = self.direction_at(offset)
        return (x - lateral * dy, y + lateral * dx)

    def project(self, x: float, y: float) -> tuple[float, float]:
        """(offset, signed lateral) of the closest centerline point."""
        best = (0.0, math.inf)
        for i in range(len(self.centerline) - 1):
            (x0, y0), (x1, y1) = self.centerline[i], self.centerline[i + 1]
            sx, sy = x1 - x0, y1 - y0
            seg2 = sx * sx + sy * sy
            t = 0.0 if seg2 == 0.0 else ((x - x0) * sx + (y - y0) * sy) / seg2
            t = min(max(t, 0.0), 1.0)
            px, py = x0 + t * sx, y0 + t * sy
            d = math.hypot(x - px, y - py)
            if d < best[1]:
                seg_len = math.sqrt(seg2)
                # sign: positive if (x, y) is left of the segment direction
                cross = sx * (y - py) - sy * (x - px)
                lat = d if cross >= 0 else -d
                best = (self._cum[i] + t * seg_len, d)
                best_lat = lat
        return best[0], best_lat

    def to_json(self) -> dict:
        return {
            "id": self.lane_id,
            "centerline": [[round(x, 6), round(y, 6)] for x, y in self.centerline],
            "width": self.width,
            "speed_limit": self.speed_limit,
            "left_neighbor": self.left_neighbor,
            "right_neighbor": self.right_neighbor,
            "successors": list(self.successors),
            "road_type": self.road_type.value,
        }


class RoadMap:
    def __init__(self, map_id: str, lanes: list[Lane]):
        self.map_id = map_id
        self.lanes: dict[str, Lane] = {}
        for lane in lanes:
            if lane.lane_id in self.lanes:
                raise ValueError(f"duplicate lane id {lane.lane_id}")
            self.lanes[lane.lane_id] = lane
        self._predecessors: dict[str, list[str]] = {lid: [] for lid in self.lanes}
        for lane in lanes:
            for succ in lane.successors:
                if succ in self._predecessors:
                    self._predecessors[succ].append(lane.lane_id)

    def lane(self, lane_id: str) -> Lane:
        if lane_id not in self.lanes:
            raise KeyError(f"unknown lane {lane_id!r}")
        return self.lanes[lane_id]

    def predecessors(self, lane_id: str) -> list[str]:
        return self._predecessors.get(lane_id, [])

    # -- lane relations -------------------------------------------------

    def neighbor_group(self, lane_id: str) -> list[str]:
        """All lanes reachable through left/right neighbor links ("one road")."""
        seen = {lane_id}
        stack = [lane_id]
        while stack:
            lane = self.lanes[stack.pop()]
            for nb in (lane.left_neighbor, lane.right_neighbor):
                if nb and nb in self.lanes and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return sorted(seen)

    def same_road(self, a: str, b: str) -> bool:
        return b in self.neighbor_group(a)

    def is_left_of(self, a: str, b: str) -> bool:
        """True if lane `a` lies left of lane `b` via neighbor links."""
        cur = self.lanes[b].left_neighbor
        while cur is not None:
            if cur == a:
                return True
            cur = self.lanes[cur].left_neighbor
        return False

    # -- spatial queries ------------------------------------------------

    def nearest_lane(
        self,
        x: float,
        y: float,
        heading: float | None = None,
        max_lateral_slack: float = 1.0,
    ) -> Lane | None:
        """Lane whose surface contains (x, y), preferring heading alignment.

        Returns None when the point is off every lane (beyond half-width plus
        slack), e.g. a pedestrian on the sidewalk.
        """
        best: tuple[float, Lane] | None = None
        for lane in self.lanes.values():
            offset, lat = lane.project(x, y)
            if abs(lat) > lane.width / 2.0 + max_lateral_slack:
                continue
            if heading is not None:
                dx, dy = lane.direction_at(offset)
                align = dx * math.cos(heading) + dy * math.sin(heading)
                if align < 0.25:
                    continue
            if best is None or abs(lat) < best[0]:
                best = (abs(lat), lane)
        return best[1] if best else None

    # -- routing ---------------------------------------------------------

    def connector_maneuver(self, lane_id: str) -> Action | None:
        """Maneuver implied by driving through a junction connector lane."""
        lane = self.lanes[lane_id]
        if not lane.is_junction:
            return None
        h0 = lane.heading_at(0.0)
        h1 = lane.heading_at(lane.length)
        turn = math.degrees(_norm_angle(h1 - h0))
        if 45.0 < turn < 135.0:
            return Action.TURN_LEFT
        if -135.0 < turn < -45.0:
            return Action.TURN_RIGHT
        if abs(turn) < 45.0:
            return Action.CROSS
        return None

    def route(self, start_lane: str, dest_lane: str) -> list[tuple[str, Action | None]] | None:
        """Shortest lane-graph route as (lane_id, maneuver entering it) pairs.

        Maneuvers: change_left/change_right for neighbor hops, the connector
        maneuver for junction hops, None for plain successor hops and the
        first lane. BFS, so minimal hop count.
        """
        if start_lane not in self.lanes or dest_lane not in self.lanes:
            return None
        start = (start_lane, None)
        frontier: list[list[tuple[str, Action | None]]] = [[start]]
        visited = {start_lane}
        while frontier:
            nxt = []
            for path in frontier:
                lane_id = path[-1][0]
                if lane_id == dest_lane:
                    return path
                lane = self.lanes[lane_id]
                hops: list[tuple[str, Action | None]] = []
                for succ in lane.successors:
                    hops.append((succ, self.connector_maneuver(succ)))
                if lane.left_neighbor:
                    hops.append((lane.left_neighbor, Action.CHANGE_LEFT))
                if lane.right_neighbor:
                    hops.append((lane.right_neighbor, Action.CHANGE_RIGHT))
                for hop in hops:
                    if hop[0] in self.lanes and hop[0] not in visited:
                        visited.add(hop[0])
                        nxt.append(path + [hop])
            frontier = nxt
        return None

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "map_id": self.map_id,
            "lanes": [self.lanes[k].to_json() for k in sorted(self.lanes)],
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, data: dict) -> "RoadMap":
        lanes = [
            Lane(
                lane_id=entry["id"],
                centerline=[tuple(p) for p in entry["centerline"]],
                width=float(entry["width"]),
                speed_limit=float(entry["speed_limit"]),
                left_neighbor=entry.get("left_neighbor"),
                right_neighbor=entry.get("right_neighbor"),
                successors=list(entry.get("successors", [])),
                road_type=RoadType(entry.get("road_type", "straight")),
            )
            for entry in data["lanes"]
        ]
        return cls(data.get("map_id", "map"), lanes)

    @classmethod
    def load(cls, path) -> "RoadMap":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _norm_angle(a: float) -> float:
    while a > math.pi:
        a -= 2 * math.pi
    while a <= -math.pi:
        a += 2 * math.pi
    return a


def _bezier(p0, p1, p2, n: int = 16) -> list[tuple[float, float]]:
    """Quadratic Bezier polyline used for junction turn connectors."""
    pts = []
    for k in range(n + 1):
        t = k / n
        x = (1 - t) ** 2 * p0[0] + 2 * (1 - t) * t * p1[0] + t**2 * p2[0]
        y = (1 - t) ** 2 * p0[1] + 2 * (1 - t) * t * p1[1] + t**2 * p2[1]
        pts.append((x, y))
    return pts


LANE_WIDTH = 4.0
SPEED_LIMIT = 13.9


def build_fixture_map() -> RoadMap:
    """The bundled test map: a straight road, a 4-way intersection, a T-junction.

    All roads are axis-aligned. Lane ids sort so that the dedicated straight
    road (lane_1xx) precedes intersection (lane_2xx) and T-junction (lane_3xx)
    lanes, which keeps deterministic road selection stable.
    """
    W, V = LANE_WIDTH, SPEED_LIMIT
    lanes: list[Lane] = []

    def straight(lid, p0, p1, left=None, right=None, succ=(), tag=RoadType.STRAIGHT):
        lanes.append(
            Lane(lid, [p0, p1], W, V, left_neighbor=left, right_neighbor=right,
                 successors=list(succ), road_type=tag)
        )

    def turn(lid, p0, ctrl, p1, succ, tag):
        lanes.append(
            Lane(lid, _bezier(p0, ctrl, p1), W, V, successors=list(succ), road_type=tag)
        )

    # Straight two-lane road, two successive 100 m segments eastbound.
    straight("lane_100", (0, 0), (100, 0), left="lane_110", succ=["lane_101"])
    straight("lane_101", (100, 0), (200, 0), left="lane_111")
    straight("lane_110", (0, W), (100, W), right="lane_100", succ=["lane_111"])
    straight("lane_111", (100, W), (200, W), right="lane_101")

    # 4-way intersection centered near (500, 0); junction box x 470..530, y -30..30.
    I = RoadType.INTERSECTION
    # west approach (eastbound, two lanes) and east exits
    straight("lane_200", (380, 0), (470, 0), left="lane_201",
             succ=["lane_210", "lane_220"])
    straight("lane_201", (380, W), (470, W), right="lane_200",
             succ=["lane_211", "lane_221", "lane_222"])
    straight("lane_203", (530, 0), (620, 0), left="lane_212")
    straight("lane_212", (530, W), (620, W), right="lane_203")
    # westbound (oncoming) approach and exit at y = 8
    straight("lane_204", (620, 8), (530, 8), succ=["lane_232"])
    straight("lane_207", (470, 8), (380, 8))
    # north-south road
    straight("lane_205", (508, -110), (508, -30), succ=["lane_230", "lane_223"])
    straight("lane_206", (508, 30), (508, 110))
    straight("lane_208", (500, 110), (500, 30), succ=["lane_231"])
    straight("lane_209", (500, -30), (500, -110))
    # connectors
    straight("lane_210", (470, 0), (530, 0), succ=["lane_203"], tag=I)
    straight("lane_211", (470, W), (530, W), succ=["lane_212"], tag=I)
    turn("lane_220", (470, 0), (500, 0), (500, -30), ["lane_209"], I)
    turn("lane_221", (470, W), (500, W), (500, -30), ["lane_209"], I)
    turn("lane_222", (470, W), (508, W), (508, 30), ["lane_206"], I)
    turn("lane_223", (508, -30), (508, 0), (530, 0), ["lane_203"], I)
    straight("lane_230", (508, -30), (508, 30), succ=["lane_206"], tag=I)
    straight("lane_231", (500, 30), (500, -30), succ=["lane_209"], tag=I)
    straight("lane_232", (530, 8), (470, 8), succ=["lane_207"], tag=I)

    # T-junction centered near (1000, 0) with a south stem.
    T = RoadType.T_JUNCTION
    straight("lane_300", (880, 0), (970, 0), succ=["lane_310", "lane_312"])
    straight("lane_301", (1030, 0), (1120, 0))
    straight("lane_303", (1120, 8), (1030, 8), succ=["lane_311", "lane_315"])
    straight("lane_304", (970, 8), (880, 8))
    straight("lane_305", (1008, -110), (1008, -30), succ=["lane_313", "lane_314"])
    straight("lane_306", (1000, -30), (1000, -110))
    straight("lane_310", (970, 0), (1030, 0), succ=["lane_301"], tag=T)
    straight("lane_311", (1030, 8), (970, 8), succ=["lane_304"], tag=T)
    turn("lane_312", (970, 0), (1000, 0), (1000, -30), ["lane_306"], T)
    turn("lane_313", (1008, -30), (1008, 8), (970, 8), ["lane_304"], T)
    turn("lane_314", (1008, -30), (1008, 0), (1030, 0), ["lane_301"], T)
    turn("lane_315", (1030, 8), (1000, 8), (1000, -30), ["lane_306"], T)

    return RoadMap("fixture_city", lanes)
