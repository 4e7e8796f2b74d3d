"""Random scenario-AST generator shared by the DSL tests."""

import random
import string

from scenforge.scenlang.ast import (
    AlwaysClearance,
    ConcreteScenario,
    EgoTask,
    EventuallyAtDestination,
    LanePosition,
    NeverCollision,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
)

_NAME_CHARS = string.ascii_letters + string.digits + "_-. "
_SPICY = '"\\\n\t\ré☃\U0001f600'


def rand_text(rng: random.Random, spicy: bool) -> str:
    pool = _NAME_CHARS + (_SPICY if spicy else "")
    return "".join(rng.choice(pool) for _ in range(rng.randint(1, 12)))


def rand_float(rng: random.Random) -> float:
    kind = rng.random()
    if kind < 0.3:
        return float(rng.randint(-1000, 1000))
    if kind < 0.6:
        return round(rng.uniform(-1e3, 1e3), 3)
    return rng.uniform(-1e6, 1e6)


def rand_position(rng: random.Random, spicy: bool, lane_bound: bool):
    # vehicle waypoints must be lane-bound; pedestrians may use either form
    if lane_bound or rng.random() < 0.5:
        return LanePosition(rand_text(rng, spicy), abs(rand_float(rng)))
    return (rand_float(rng), rand_float(rng))


def rand_waypoint(rng: random.Random, spicy: bool, lane_bound: bool) -> Waypoint:
    position = rand_position(rng, spicy, lane_bound)
    # the xy waypoint form carries no lateral slot
    lateral = (
        rand_float(rng)
        if isinstance(position, LanePosition) and rng.random() < 0.3
        else None
    )
    return Waypoint(
        position=position,
        speed=abs(rand_float(rng)),
        lateral=lateral,
        time=abs(rand_float(rng)) if rng.random() < 0.3 else None,
    )


def rand_trajectory(rng: random.Random, name: str, ptype, spicy: bool) -> TrajectoryDef:
    n = rng.randint(2, 5)
    lane_bound = ptype is not ParticipantType.PEDESTRIAN
    return TrajectoryDef(
        name=name,
        participant_type=ptype,
        waypoints=tuple(rand_waypoint(rng, spicy, lane_bound) for _ in range(n)),
    )


def random_scenario(rng: random.Random, spicy: bool = True) -> ConcreteScenario:
    names = set()

    def fresh_name():
        while True:
            name = rand_text(rng, spicy)
            if name not in names:
                names.add(name)
                return name

    start = LanePosition(rand_text(rng, spicy), abs(rand_float(rng)))
    dest = LanePosition(rand_text(rng, spicy), abs(rand_float(rng)))
    if start == dest:
        dest = LanePosition(dest.lane_id + "x", dest.offset)
    ego = EgoTask(
        vehicle_type=rng.choice([ParticipantType.CAR, ParticipantType.TRUCK]),
        start=start,
        destination=dest,
    )
    npcs = tuple(
        rand_trajectory(
            rng,
            fresh_name(),
            rng.choice([ParticipantType.CAR, ParticipantType.TRUCK]),
            spicy,
        )
        for _ in range(rng.randint(0, 3))
    )
    peds = tuple(
        rand_trajectory(rng, fresh_name(), ParticipantType.PEDESTRIAN, spicy)
        for _ in range(rng.randint(0, 2))
    )
    assertions = [NeverCollision()]
    if rng.random() < 0.8:
        assertions.append(AlwaysClearance(min_clearance=abs(rand_float(rng)) + 0.1))
    if rng.random() < 0.8:
        assertions.append(
            EventuallyAtDestination(
                within=abs(rand_float(rng)) + 0.1, radius=abs(rand_float(rng)) + 0.1
            )
        )
    return ConcreteScenario(
        map_id=rand_text(rng, spicy),
        ego=ego,
        npcs=npcs,
        pedestrians=peds,
        assertions=tuple(assertions),
    )
