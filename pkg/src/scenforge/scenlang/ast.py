"""AST node types for scenario programs.

A scenario has five components: map, ego driving task, NPC trajectories,
pedestrian trajectories and assertions. Construction enforces the structural
invariants (unique names, waypoint counts, positive constants); lane
references against a concrete map are checked separately by validate_refs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class ParticipantType(str, enum.Enum):
    CAR = "car"
    TRUCK = "truck"
    PEDESTRIAN = "pedestrian"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class LanePosition:
    lane_id: str
    offset: float


@dataclass(frozen=True)
class Waypoint:
    """One trajectory waypoint.

    position is a LanePosition for lane-bound participants or a free (x, y)
    point for pedestrians. speed is held until the next waypoint
    (piecewise-constant); a speed below 0.05 m/s means "dwell here".
    time, when given, pins the waypoint to an absolute scenario time and is
    used by the kinematic feasibility check.
    """

    position: LanePosition | tuple[float, float]
    speed: float
    lateral: float | None = None
    time: float | None = None

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError("waypoint speed must be >= 0")


@dataclass(frozen=True)
class EgoTask:
    vehicle_type: ParticipantType
    start: LanePosition
    destination: LanePosition

    def __post_init__(self) -> None:
        if self.vehicle_type is ParticipantType.PEDESTRIAN:
            raise ValueError("ego must be a vehicle")
        if self.start == self.destination:
            raise ValueError("ego start and destination must differ")


@dataclass(frozen=True)
class TrajectoryDef:
    name: str
    participant_type: ParticipantType
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError(f"trajectory {self.name!r} needs >=2 waypoints")


class Assertion:
    """Marker base class for the three assertion forms."""


@dataclass(frozen=True)
class NeverCollision(Assertion):
    pass


@dataclass(frozen=True)
class AlwaysClearance(Assertion):
    min_clearance: float

    def __post_init__(self) -> None:
        if self.min_clearance <= 0:
            raise ValueError("clearance bound must be > 0")


@dataclass(frozen=True)
class EventuallyAtDestination(Assertion):
    within: float
    radius: float

    def __post_init__(self) -> None:
        if self.within <= 0 or self.radius <= 0:
            raise ValueError("time bound and radius must be > 0")


DEFAULT_CLEARANCE = 2.0
DEFAULT_TIME_BOUND = 60.0
DEFAULT_DEST_RADIUS = 3.0


def default_assertions(
    clearance: float = DEFAULT_CLEARANCE,
    within: float = DEFAULT_TIME_BOUND,
    radius: float = DEFAULT_DEST_RADIUS,
) -> tuple[Assertion, ...]:
    return (
        NeverCollision(),
        AlwaysClearance(clearance),
        EventuallyAtDestination(within, radius),
    )


@dataclass(frozen=True)
class ConcreteScenario:
    map_id: str
    ego: EgoTask
    npcs: tuple[TrajectoryDef, ...] = ()
    pedestrians: tuple[TrajectoryDef, ...] = ()
    assertions: tuple[Assertion, ...] = field(default_factory=default_assertions)

    def __post_init__(self) -> None:
        names = [t.name for t in self.npcs + self.pedestrians]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValueError(f"duplicate participant names: {sorted(dupes)}")
        for traj in self.npcs:
            if traj.participant_type is ParticipantType.PEDESTRIAN:
                raise ValueError(f"npc {traj.name!r} cannot be a pedestrian")
        for traj in self.pedestrians:
            if traj.participant_type is not ParticipantType.PEDESTRIAN:
                raise ValueError(f"pedestrian {traj.name!r} has a vehicle type")
        if not self.assertions:
            raise ValueError("scenario needs at least the default assertions")

    @property
    def participants(self) -> tuple[TrajectoryDef, ...]:
        return self.npcs + self.pedestrians

    def participant(self, name: str) -> TrajectoryDef:
        for traj in self.participants:
            if traj.name == name:
                return traj
        raise KeyError(f"no participant named {name!r}")

    def without_participant(self, name: str) -> "ConcreteScenario":
        self.participant(name)  # raise on unknown name
        return ConcreteScenario(
            map_id=self.map_id,
            ego=self.ego,
            npcs=tuple(t for t in self.npcs if t.name != name),
            pedestrians=tuple(t for t in self.pedestrians if t.name != name),
            assertions=self.assertions,
        )
