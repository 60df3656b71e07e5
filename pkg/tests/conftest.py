from __future__ import annotations

import functools

import pytest
from hypothesis import HealthCheck, settings

from semcover.engine import SimConfig, run
from semcover.world import Arena, OOI, Obstacle, Pose, Scenario, build_scenario

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def cached_run(name: str, seed: int, controller: str = "semantic_fuzzy", n_robots: int = 2,
               comms: bool = True, max_steps: int = 3000):
    """One engine run per key for the whole session; returns (scenario, result)."""
    sc = build_scenario(name, seed=seed)
    cfg = SimConfig(seed=seed, controller=controller, n_robots=n_robots, comms_enabled=comms,
                    max_steps=max_steps, log_gait=False)
    return sc, run(cfg, sc)


@pytest.fixture(scope="session")
def session_run():
    return cached_run


def open_scenario(oois=((6.0, 4.0),), obstacles=(), spawns=((1.0, 1.0, 0.0),), radius=0.25) -> Scenario:
    """Hand-built scenario that skips the procedural layout."""
    return Scenario(
        "custom", Arena(12.0, 8.0),
        tuple(Obstacle(tuple(v)) for v in obstacles),
        tuple(OOI(i, float(x), float(y)) for i, (x, y) in enumerate(oois)),
        tuple(Pose(0, x, y, th) for x, y, th in spawns),
        robot_radius=radius,
    )


@pytest.fixture
def make_scenario():
    return open_scenario


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
