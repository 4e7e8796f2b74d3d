"""Reference validation of a parsed scenario against a loaded map."""

from __future__ import annotations

from .ast import ConcreteScenario, LanePosition


def _check_lane_pos(diags: list[str], owner: str, pos: LanePosition, road_map) -> None:
    if pos.lane_id not in road_map.lanes:
        diags.append(f"{owner}: unresolved lane reference {pos.lane_id!r}")
        return
    length = road_map.lanes[pos.lane_id].length
    if not 0.0 <= pos.offset <= length:
        diags.append(
            f"{owner}: offset {pos.offset:g} outside lane {pos.lane_id!r}"
            f" (length {length:g})"
        )


def validate_refs(scenario: ConcreteScenario, road_map) -> list[str]:
    """All lane references resolve and offsets stay in range; [] means valid."""
    diags: list[str] = []
    if scenario.map_id != road_map.map_id:
        diags.append(
            f"scenario map {scenario.map_id!r} does not match loaded map"
            f" {road_map.map_id!r}"
        )
    _check_lane_pos(diags, "ego start", scenario.ego.start, road_map)
    _check_lane_pos(diags, "ego destination", scenario.ego.destination, road_map)
    for traj in scenario.participants:
        for i, wp in enumerate(traj.waypoints):
            if isinstance(wp.position, LanePosition):
                _check_lane_pos(diags, f"{traj.name} waypoint {i}", wp.position, road_map)
    return diags
