"""Shared vocabulary: participant actions, roles and relative positions.

All enums here are closed; parsers reject anything outside them. Free-text
synonyms (e.g. "in front") are folded onto canonical values through the
normalization tables at the bottom.
"""

from __future__ import annotations

import enum


class Action(str, enum.Enum):
    FOLLOW_LANE = "follow_lane"
    CHANGE_LEFT = "change_left"
    CHANGE_RIGHT = "change_right"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    CROSS = "cross"
    ACCELERATE = "accelerate"
    DECELERATE = "decelerate"
    BRAKE = "brake"
    STOP = "stop"
    DRIVE_THROUGH = "drive_through"
    WALK_ALONG = "walk_along"
    WALK_ACROSS = "walk_across"
    STAND = "stand"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


VEHICLE_ACTIONS = frozenset(
    {
        Action.FOLLOW_LANE,
        Action.CHANGE_LEFT,
        Action.CHANGE_RIGHT,
        Action.TURN_LEFT,
        Action.TURN_RIGHT,
        Action.CROSS,
        Action.ACCELERATE,
        Action.DECELERATE,
        Action.BRAKE,
        Action.STOP,
        Action.DRIVE_THROUGH,
    }
)

PEDESTRIAN_ACTIONS = frozenset(
    {Action.WALK_ALONG, Action.WALK_ACROSS, Action.STAND, Action.CROSS}
)

# Longitudinal family: swapping one of these for another is a mild edit.
LONGITUDINAL_ACTIONS = frozenset(
    {Action.ACCELERATE, Action.DECELERATE, Action.BRAKE, Action.STOP}
)
PEDESTRIAN_GAIT_ACTIONS = frozenset(
    {Action.WALK_ALONG, Action.WALK_ACROSS, Action.STAND}
)
# Swapping these for their mirror is a severe edit.
OPPOSITE_PAIRS = frozenset(
    {
        frozenset({Action.CHANGE_LEFT, Action.CHANGE_RIGHT}),
        frozenset({Action.TURN_LEFT, Action.TURN_RIGHT}),
    }
)

MANEUVER_ACTIONS = frozenset(
    {
        Action.CHANGE_LEFT,
        Action.CHANGE_RIGHT,
        Action.TURN_LEFT,
        Action.TURN_RIGHT,
        Action.CROSS,
    }
)


class Role(str, enum.Enum):
    EGO = "ego"
    NPC = "npc"
    PEDESTRIAN = "pedestrian"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class VehicleType(str, enum.Enum):
    CAR = "car"
    TRUCK = "truck"
    NONE = "none"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class RoadType(str, enum.Enum):
    STRAIGHT = "straight"
    INTERSECTION = "intersection"
    T_JUNCTION = "t_junction"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class TrafficSignal(str, enum.Enum):
    NONE = "none"
    LIGHT_GREEN = "light_green"
    LIGHT_RED = "light_red"
    STOP_SIGN = "stop_sign"


class RelativePosition(str, enum.Enum):
    AHEAD = "ahead"
    BEHIND = "behind"
    LEFT_FRONT = "left_front"
    RIGHT_FRONT = "right_front"
    LEFT_BEHIND = "left_behind"
    RIGHT_BEHIND = "right_behind"
    LEFT_VERTICAL = "left_vertical"
    RIGHT_VERTICAL = "right_vertical"
    OPPOSITE = "opposite"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


# Synonyms seen in provider output, folded to canonical enum values.
ACTION_SYNONYMS = {
    "follow lane": Action.FOLLOW_LANE,
    "lane following": Action.FOLLOW_LANE,
    "change left": Action.CHANGE_LEFT,
    "change right": Action.CHANGE_RIGHT,
    "turn left": Action.TURN_LEFT,
    "turn right": Action.TURN_RIGHT,
    "walk along": Action.WALK_ALONG,
    "walk across": Action.WALK_ACROSS,
    "drive through": Action.DRIVE_THROUGH,
}

# "change lane" is direction-ambiguous; callers that map it must record the
# assumption (see abstraction.parse_description).
AMBIGUOUS_CHANGE_LANE = {"change lane", "change_lane", "lane change"}

POSITION_SYNONYMS = {
    "in front": RelativePosition.AHEAD,
    "front": RelativePosition.AHEAD,
    "left front": RelativePosition.LEFT_FRONT,
    "right front": RelativePosition.RIGHT_FRONT,
    "left behind": RelativePosition.LEFT_BEHIND,
    "right behind": RelativePosition.RIGHT_BEHIND,
    "left vertical": RelativePosition.LEFT_VERTICAL,
    "right vertical": RelativePosition.RIGHT_VERTICAL,
}


def parse_action(token: str) -> Action:
    """Map a raw action token onto the closed enum; raises ValueError."""
    text = token.strip().lower()
    if text in ACTION_SYNONYMS:
        return ACTION_SYNONYMS[text]
    try:
        return Action(text.replace(" ", "_"))
    except ValueError:
        raise ValueError(f"unknown action: {token!r}") from None


def parse_relative_position(token: str) -> RelativePosition:
    text = token.strip().lower()
    if text in POSITION_SYNONYMS:
        return POSITION_SYNONYMS[text]
    try:
        return RelativePosition(text.replace(" ", "_"))
    except ValueError:
        raise ValueError(f"unknown relative position: {token!r}") from None
