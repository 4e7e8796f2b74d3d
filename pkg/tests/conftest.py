import re
from pathlib import Path

import pytest

from scenforge.abstraction import AbstractScenario, ParticipantSpec
from scenforge.actions import (
    Action,
    RelativePosition,
    Role,
    RoadType,
    TrafficSignal,
    VehicleType,
)
from scenforge.mapdata import build_fixture_map

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "scenforge" / "fixtures"


_CRITERION_RESULTS: dict[str, str] = {}
_CRITERION_RE = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = _CRITERION_RE.search(item.name)
    if match and report.when == "call":
        number, slug = match.groups()
        label = f"criterion {int(number):2d} ({slug.replace('_', ' ')})"
        _CRITERION_RESULTS[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERION_RESULTS):
        terminalreporter.write_line(f"{label}: {_CRITERION_RESULTS[label]}")


@pytest.fixture(scope="session")
def road_map():
    return build_fixture_map()


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


def make_abstract(
    road_type=RoadType.STRAIGHT,
    ego_behaviors=(Action.FOLLOW_LANE,),
    others=(),
    signal=TrafficSignal.NONE,
):
    """others: iterable of (role, vehicle_type, behaviors, relative_position)."""
    ego = ParticipantSpec(
        role=Role.EGO,
        vehicle_type=VehicleType.CAR,
        behaviors=tuple(ego_behaviors),
        relative_position=None,
    )
    specs = [ego]
    for role, vt, behaviors, pos in others:
        specs.append(
            ParticipantSpec(
                role=role,
                vehicle_type=vt,
                behaviors=tuple(behaviors),
                relative_position=pos,
            )
        )
    return AbstractScenario(
        road_type=road_type, participants=tuple(specs), traffic_signal=signal
    )


def slow_npc_abstract():
    """Straight road, ego passes through, one NPC braking to a stop ahead."""
    return make_abstract(
        road_type=RoadType.STRAIGHT,
        ego_behaviors=(Action.DRIVE_THROUGH,),
        others=(
            (
                Role.NPC,
                VehicleType.CAR,
                (Action.BRAKE, Action.STOP),
                RelativePosition.AHEAD,
            ),
        ),
    )
