"""
Shared fixtures and small scenario builders
"""
import pytest

from config import config
from scenario import (
    Robot,
    Scenario,
    Task,
    Topology,
    case1_dynamic_scenario,
    case1_scenario,
    default_constants,
)


def make_scenario(robots, tasks, topology=None, **constants):
    robots = tuple(robots)
    tasks = tuple(tasks)
    return Scenario(
        robots=robots,
        tasks=tasks,
        topology=topology or Topology.complete(len(robots)),
        constants=default_constants(len(tasks), len(robots), **constants),
        seed=config.DEFAULT_SEED,
        name="test",
    )


def robot(i, x=0.0, y=0.0, v=1.0, a=0.0, b=0.0):
    return Robot(id=i, position=(float(x), float(y)), velocity=v, payload_a=a, payload_b=b)


def task(j, x=0.0, y=0.0, a=0.0, b=0.0, duration=0.0, announce=0.0):
    return Task(id=j, position=(float(x), float(y)), duration=duration,
                demand_a=a, demand_b=b, announce_time=announce)


@pytest.fixture
def one_robot_one_task():
    return make_scenario([robot(0, a=10)], [task(0, 3, 4, a=6)])


@pytest.fixture(scope="session")
def case1():
    return case1_scenario()


@pytest.fixture(scope="session")
def case1_dynamic():
    return case1_dynamic_scenario()
