from types import SimpleNamespace

import pytest

from app.core.config import EvaluationConfig, ScenarioConfig, Strategy
from app.models.world import Heading, Position, RoadMap, VehicleKind, WorldState


@pytest.fixture
def quiet_config() -> ScenarioConfig:
    """19x19 junction with spawning switched off and obedient vehicles"""
    return ScenarioConfig(spawn_min=0, spawn_max=0, violation_rate=0.0, strategy=Strategy.UNS, runs=1)


@pytest.fixture
def small_evaluation() -> EvaluationConfig:
    return EvaluationConfig(refinement_interval=2, stats_window=2)


@pytest.fixture
def empty_world() -> WorldState:
    return WorldState(roadmap=RoadMap.two_roads(19))


def build_crossing(world: WorldState, priority_b: bool = False) -> SimpleNamespace:
    """
    Two queues on a collision course at the junction of a 19x19 grid:
    A heads East from (9,7) with C, D, E, F queued behind it, B heads South
    from (8,8) with G behind it. Both A and B target (9,8).
    """
    a = world.place_vehicle(Position(9, 7), Heading.EAST)
    b = world.place_vehicle(
        Position(8, 8), Heading.SOUTH, kind=VehicleKind.PRIORITY if priority_b else VehicleKind.ORDINARY
    )
    c = world.place_vehicle(Position(9, 6), Heading.EAST)
    d = world.place_vehicle(Position(9, 5), Heading.EAST)
    e = world.place_vehicle(Position(9, 4), Heading.EAST)
    f = world.place_vehicle(Position(9, 3), Heading.EAST)
    g = world.place_vehicle(Position(7, 8), Heading.SOUTH)
    return SimpleNamespace(A=a.id, B=b.id, C=c.id, D=d.id, E=e.id, F=f.id, G=g.id)


@pytest.fixture
def crossing(empty_world):
    return empty_world, build_crossing(empty_world)
