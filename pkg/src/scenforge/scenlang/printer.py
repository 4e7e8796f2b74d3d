"""Canonical printer for scenario programs.

print_scenario(parse_scenario(text)) is idempotent and parse(print(ast))
is structurally equal to ast. Sections are emitted in the fixed order
map / ego / npc / pedestrian / assert.
"""

from __future__ import annotations

from .ast import (
    AlwaysClearance,
    Assertion,
    ConcreteScenario,
    EventuallyAtDestination,
    LanePosition,
    NeverCollision,
    TrajectoryDef,
    Waypoint,
)


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif 32 <= ord(ch) < 127:
            out.append(ch)
        else:
            out.append("".join(f"\\u{cu:04x}" for cu in _utf16_units(ch)))
    return '"' + "".join(out) + '"'


def _utf16_units(ch: str) -> list[int]:
    code = ord(ch)
    if code <= 0xFFFF:
        return [code]
    code -= 0x10000
    return [0xD800 + (code >> 10), 0xDC00 + (code & 0x3FF)]


def _num(value: float) -> str:
    return repr(float(value))


def _lane_pos(pos: LanePosition) -> str:
    return f"({_escape(pos.lane_id)} -> {_num(pos.offset)})"


def _waypoint(wp: Waypoint) -> str:
    if isinstance(wp.position, LanePosition):
        lateral = "" if wp.lateral is None else f" {_num(wp.lateral)}"
        body = (
            f"({_escape(wp.position.lane_id)} -> {_num(wp.position.offset)},"
            f"{lateral} , {_num(wp.speed)})"
        )
    else:
        x, y = wp.position
        body = f"({_num(x)}, {_num(y)}, {_num(wp.speed)})"
    if wp.time is not None:
        body += f" @ {_num(wp.time)}"
    return body


def _trajectory(keyword: str, traj: TrajectoryDef, typed: bool) -> list[str]:
    lines = [f"{keyword} {_escape(traj.name)} {{"]
    if typed:
        lines.append(f"  type: {traj.participant_type.value}")
    lines.append("  waypoints: (")
    for i, wp in enumerate(traj.waypoints):
        comma = "," if i < len(traj.waypoints) - 1 else ""
        lines.append(f"    {_waypoint(wp)}{comma}")
    lines.append("  )")
    lines.append("}")
    return lines


def _assertion(a: Assertion) -> str:
    if isinstance(a, NeverCollision):
        return "never collision"
    if isinstance(a, AlwaysClearance):
        return f"always clearance >= {_num(a.min_clearance)}"
    if isinstance(a, EventuallyAtDestination):
        return f"eventually within {_num(a.within)} at_destination radius {_num(a.radius)}"
    raise TypeError(f"unknown assertion {a!r}")


def print_scenario(scenario: ConcreteScenario) -> str:
    lines = [f"map {_escape(scenario.map_id)}", ""]
    lines += [
        "ego {",
        f"  type: {scenario.ego.vehicle_type.value}",
        f"  start: {_lane_pos(scenario.ego.start)}",
        f"  destination: {_lane_pos(scenario.ego.destination)}",
        "}",
    ]
    for npc in scenario.npcs:
        lines.append("")
        lines += _trajectory("npc", npc, typed=True)
    for ped in scenario.pedestrians:
        lines.append("")
        lines += _trajectory("pedestrian", ped, typed=False)
    lines.append("")
    lines.append("assert {")
    for a in scenario.assertions:
        lines.append(f"  {_assertion(a)}")
    lines.append("}")
    return "\n".join(lines) + "\n"
