"""Unit tests for framemap.world.models."""
import math

import numpy as np
import pytest

from framemap.core.exceptions import ConfigurationError, EmptyFreeSpace
from framemap.frames.models import Pose
from framemap.world.geometry import Rect
from framemap.world.models import (
    BACKGROUND,
    Detection,
    Observation,
    Room,
    SensorModel,
    WorldMap,
    WorldSettings,
)


@pytest.fixture
def two_rooms() -> WorldMap:
    return WorldMap(
        bounds=Rect(0.0, 0.0, 5.0, 2.0),
        rooms=(Room("a", Rect(0.0, 0.0, 2.0, 2.0)), Room("b", Rect(2.0, 0.0, 4.0, 2.0))),
        obstacles=(Rect(1.0, 0.5, 1.5, 1.5),),
        priors=(("cup", (("a", 0.25), ("b", 0.5))),),
        name="pair",
    )


# ---------------------------------------------------------------------------
# WorldMap
# ---------------------------------------------------------------------------

def test_room_lookup(two_rooms):
    assert two_rooms.room_names == ("a", "b")
    assert two_rooms.room("b").rect.x0 == 2.0
    with pytest.raises(KeyError):
        two_rooms.room("attic")


def test_room_of_and_background(two_rooms):
    assert two_rooms.room_of(0.5, 0.5) == "a"
    assert two_rooms.room_of(3.0, 1.0) == "b"
    assert two_rooms.room_of(4.5, 1.0) == BACKGROUND
    assert two_rooms.room_index([[0.5, 0.5], [4.5, 1.0]]).tolist() == [0, -1]


def test_free_mask(two_rooms):
    pts = [[0.5, 0.5], [1.2, 1.0], [1.6, 1.0], [6.0, 1.0]]
    assert two_rooms.free_mask(pts).tolist() == [True, False, True, False]
    assert two_rooms.free_mask(pts, clearance=0.2).tolist() == [True, False, False, False]
    assert two_rooms.is_free(0.5, 0.5)
    assert not two_rooms.is_free(1.2, 1.0)


def test_prior_for(two_rooms):
    assert two_rooms.prior_for("cup") == {"a": 0.25, "b": 0.5}
    assert two_rooms.prior_for("spoon") == {}


def test_sample_free_respects_region_and_obstacles(two_rooms):
    rng = np.random.default_rng(3)
    region = two_rooms.room("a").rect
    pts = two_rooms.sample_free(rng, 300, region=region, clearance=0.1)
    assert pts.shape == (300, 2)
    assert region.contains_points(pts).all()
    assert two_rooms.free_mask(pts, clearance=0.1).all()


def test_sample_free_zero_points(two_rooms):
    assert two_rooms.sample_free(np.random.default_rng(0), 0).shape == (0, 2)


def test_sample_free_without_free_space_raises():
    blocked = WorldMap(bounds=Rect(0.0, 0.0, 1.0, 1.0), obstacles=(Rect(-0.5, -0.5, 1.5, 1.5),))
    with pytest.raises(EmptyFreeSpace):
        blocked.sample_free(np.random.default_rng(0), 5)


def test_maps_compare_by_value(two_rooms):
    same = WorldMap(
        bounds=Rect(0.0, 0.0, 5.0, 2.0),
        rooms=two_rooms.rooms,
        obstacles=two_rooms.obstacles,
        priors=two_rooms.priors,
        name="pair",
    )
    assert same == two_rooms


# ---------------------------------------------------------------------------
# Observations
# ---------------------------------------------------------------------------

def test_observation_of_class_and_record():
    obs = Observation(
        (Detection("cup", (1.0, 2.0), 0.9), Detection("spoon", (3.0, 1.0), 0.8)),
        Pose(0.0, 0.0, 0.5),
        5.0,
        math.pi,
    )
    assert [d.position for d in obs.of_class("cup")] == [(1.0, 2.0)]
    assert obs.of_class("apple") == []
    record = obs.to_record()
    assert record["viewpoint"] == [0.0, 0.0, 0.5]
    assert record["detections"][1] == {"cls": "spoon", "position": [3.0, 1.0], "confidence": 0.8}


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [{"range": 0.0}, {"fov": 0.0}, {"fov": 7.0}, {"noise": -0.1}, {"miss_rate": 1.0}],
)
def test_sensor_model_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SensorModel(**kwargs)


def test_sensor_model_from_config():
    s = SensorModel.from_config({"sensor": {"range": 3, "miss_rate": 0.0}})
    assert s.range == 3.0
    assert s.miss_rate == 0.0
    assert s.fov == pytest.approx(2.0 * math.pi / 3.0)


def test_world_settings_validation():
    with pytest.raises(ConfigurationError, match="approach_radius"):
        WorldSettings(reach_radius=0.8, approach_radius=1.0)
    with pytest.raises(ConfigurationError, match="step_length"):
        WorldSettings(step_length=0.0)
    with pytest.raises(ConfigurationError, match="primitive_success"):
        WorldSettings(primitive_success=(("pick", 1.5),))


def test_world_settings_success_probability():
    s = WorldSettings.from_config({"world": {"primitive_success": {"pick": 0.75}}})
    assert s.success_probability("pick") == 0.75
    assert s.success_probability("stir") == 1.0
