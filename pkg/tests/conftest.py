import contextlib
import copy
from dataclasses import dataclass

import pytest

from plsim.calibration import Calibration
from plsim.config import MissionConfig, load_config
from plsim.world import ScenarioSpec, World


@pytest.fixture(scope="session")
def bundled_config():
    return load_config()


@pytest.fixture
def config(bundled_config):
    return copy.deepcopy(bundled_config)


@pytest.fixture
def calibration():
    return Calibration()


def small_config(n_sites=1, **overrides) -> MissionConfig:
    """Bundled mission with a short random scenario; handy for fast mission runs."""
    cfg = copy.deepcopy(load_config())
    cfg.scenario = ScenarioSpec(n_sites, cfg.scenario.profile, name=f"small{n_sites}")
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def small_world(seed, cfg):
    return World.from_scenario(seed, cfg.scenario)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@dataclass
class Criterion:
    number: int
    title: str
    detail: str = ""


@pytest.fixture
def criterion(request):
    """Context manager that logs one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def check(number, title):
        c = Criterion(number, title)
        ok = False
        try:
            yield c
            ok = True
        finally:
            line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title}"
            if c.detail:
                line += f" [{c.detail}]"
            print(line)
            request.config.stash[ACCEPTANCE].append((number, line))
    return check
