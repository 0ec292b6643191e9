from __future__ import annotations

import pytest

from cleansynth.harness import load_builtin
from cleansynth.scenario import CHARGER, ROOM, Place, RobotParams, RoomParams, Scenario


def line_scenario(
    k: int = 1,
    T: int = 4,
    pr: float = 0.05,
    threshold: int = 4,
    max_charge: int = 4,
    charge_rate: int = 2,
    omega_chg: int | None = None,
    allow_swaps: bool = True,
    a_bit: int = 10_000,
    util=(),
) -> Scenario:
    """Line graph C0 - R1 - R2, plus a second charger C3 next to R2 when k = 2."""
    places = [Place(0, CHARGER, "C0"), Place(1, ROOM, "R1"), Place(2, ROOM, "R2")]
    edges = {(0, 1), (1, 2)}
    if k == 2:
        places.append(Place(3, CHARGER, "C3"))
        edges.add((2, 3))
    rooms = (
        RoomParams(pr, threshold, 1, threshold // 2, tuple(util)),
        RoomParams(pr, threshold, 1, threshold // 2),
    )
    oc = max_charge if omega_chg is None else omega_chg
    robots = [RobotParams(0, max_charge, charge_rate, 1, oc)]
    if k == 2:
        robots.append(RobotParams(3, max_charge, charge_rate, 1, oc))
    return Scenario(tuple(places), frozenset(edges), rooms, tuple(robots), T, a_bit=a_bit, allow_swaps=allow_swaps)


def single_room(T: int = 2, pr: float = 0.05, a_bit: int = 10_000, max_charge: int = 2) -> Scenario:
    places = (Place(0, CHARGER, "C0"), Place(1, ROOM, "R1"))
    return Scenario(
        places,
        frozenset({(0, 1)}),
        (RoomParams(pr, 4, 1, 2),),
        (RobotParams(0, max_charge, max_charge, 1, max_charge),),
        T,
        a_bit=a_bit,
    )


@pytest.fixture
def line1() -> Scenario:
    return line_scenario()


@pytest.fixture
def line2() -> Scenario:
    return line_scenario(k=2)


@pytest.fixture(scope="session")
def reduced() -> Scenario:
    return load_builtin("reduced")


@pytest.fixture(scope="session")
def five_two() -> Scenario:
    return load_builtin("five_rooms_two_robots")


@pytest.fixture(scope="session")
def five_one() -> Scenario:
    return load_builtin("five_rooms_one_robot")


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
