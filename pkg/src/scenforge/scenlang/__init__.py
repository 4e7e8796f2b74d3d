"""Concrete scenario programs: AST, parser, canonical printer, validation."""

from .ast import (
    AlwaysClearance,
    Assertion,
    ConcreteScenario,
    EgoTask,
    EventuallyAtDestination,
    LanePosition,
    NeverCollision,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
    default_assertions,
)
from .parser import Diagnostic, ScenarioSyntaxError, parse_scenario
from .printer import print_scenario
from .validate import validate_refs

__all__ = [
    "AlwaysClearance",
    "Assertion",
    "ConcreteScenario",
    "Diagnostic",
    "EgoTask",
    "EventuallyAtDestination",
    "LanePosition",
    "NeverCollision",
    "ParticipantType",
    "ScenarioSyntaxError",
    "TrajectoryDef",
    "Waypoint",
    "default_assertions",
    "parse_scenario",
    "print_scenario",
    "validate_refs",
]
