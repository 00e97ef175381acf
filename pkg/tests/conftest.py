"""
Pytest configuration and shared fixtures.

Every test starts with a fresh config cache, no framemap log handlers and no
FRAMEMAP_* environment variables. Acceptance checks are marked ``acceptance``;
deselect them with ``-m "not acceptance"``.
"""
import pytest

from framemap.core.config import reset_config
from framemap.core.logger import reset_logging
from framemap.data import frames_path, scenario_path
from framemap.frames.dsl import parse_frame_library
from framemap.inference.potentials import PotentialParams
from framemap.world.models import SensorModel
from framemap.world.scenario import parse_scenario
from framemap.world.simulator import World

_ENV = (
    "FRAMEMAP_CONFIG",
    "FRAMEMAP_LOG_LEVEL",
    "FRAMEMAP_LOG_DIR",
    "FRAMEMAP_OUTPUT_DIR",
    "FRAMEMAP_WORKERS",
)


@pytest.fixture(autouse=True)
def _isolated_state(monkeypatch):
    for name in _ENV:
        monkeypatch.delenv(name, raising=False)
    reset_config()
    reset_logging()
    yield
    reset_config()
    reset_logging()


@pytest.fixture(scope="session")
def household_library():
    return parse_frame_library(frames_path().read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def apartment_text() -> str:
    return scenario_path("apartment.scn").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def studio_text() -> str:
    return scenario_path("studio.scn").read_text(encoding="utf-8")


@pytest.fixture
def apartment_world(apartment_text) -> World:
    return World(parse_scenario(apartment_text), seed=7)


@pytest.fixture
def studio_world(studio_text) -> World:
    return World(parse_scenario(studio_text), seed=7)


@pytest.fixture
def params() -> PotentialParams:
    return PotentialParams()


@pytest.fixture
def sensor() -> SensorModel:
    return SensorModel()
