"""Unit tests for framemap.planner.goals."""
import math

import numpy as np
import pytest

from framemap.core.exceptions import NoReachableViewpoint
from framemap.frames.models import Pose
from framemap.planner.goals import nearest_free_point, select_navigation_goal, viewpoint_for
from framemap.planner.mixture import GaussianMixture, MixtureComponent
from framemap.world.geometry import Rect
from framemap.world.models import SensorModel, WorldMap
from framemap.world.navigation import GridNavigator
from framemap.world.sensor import can_see

SENSOR = SensorModel(range=5.0, fov=2.0 * math.pi / 3.0)
OPEN = WorldMap(bounds=Rect(0.0, 0.0, 20.0, 20.0))
# Wall at x = 5 with an opening above y = 8.
WALLED = WorldMap(bounds=Rect(0.0, 0.0, 10.0, 10.0), obstacles=(Rect(5.0, 0.0, 5.2, 8.0),))
# Thick-walled closed box around (7, 7).
BOXED = WorldMap(
    bounds=Rect(0.0, 0.0, 10.0, 10.0),
    obstacles=(
        Rect(6.0, 6.0, 8.0, 6.7),
        Rect(6.0, 7.3, 8.0, 8.0),
        Rect(6.0, 6.7, 6.7, 7.3),
        Rect(7.3, 6.7, 8.0, 7.3),
    ),
)


def _mixture(*components):
    return GaussianMixture(tuple(MixtureComponent(np.array(m, dtype=float), np.eye(2), w) for m, w in components))


# ---------------------------------------------------------------------------
# nearest_free_point
# ---------------------------------------------------------------------------

def test_free_point_is_kept():
    np.testing.assert_allclose(nearest_free_point(OPEN, (3.0, 4.0)), [3.0, 4.0])


def test_point_in_obstacle_moves_out():
    p = nearest_free_point(WALLED, (5.1, 4.0))
    assert WALLED.is_free(p[0], p[1])
    assert math.hypot(p[0] - 5.1, p[1] - 4.0) <= 0.5


def test_point_outside_bounds_is_clamped():
    p = nearest_free_point(OPEN, (-3.0, 25.0))
    assert OPEN.bounds.contains_points(p[None, :])[0]


# ---------------------------------------------------------------------------
# viewpoint_for
# ---------------------------------------------------------------------------

def test_open_space_stops_short_of_the_target():
    nav = GridNavigator(OPEN)
    robot = Pose(2.0, 2.0, math.pi)
    pose = viewpoint_for((15.0, 15.0), nav, robot, SENSOR, view_fraction=0.8)
    assert pose.distance_to(15.0, 15.0) == pytest.approx(4.0, abs=1e-6)
    assert pose.heading == pytest.approx(math.pi / 4.0, abs=1e-6)
    assert can_see(OPEN, pose, 15.0, 15.0, SENSOR)


def test_close_target_is_approached_along_the_segment():
    nav = GridNavigator(OPEN)
    robot = Pose(2.0, 2.0, math.pi)
    pose = viewpoint_for((5.0, 2.0), nav, robot, SENSOR)
    # Already within range but behind the robot: the viewpoint is the robot position turned around.
    assert pose.xy == pytest.approx((2.0, 2.0))
    assert pose.heading == pytest.approx(0.0, abs=1e-9)


def test_already_visible_returns_the_robot_pose():
    nav = GridNavigator(OPEN)
    robot = Pose(5.0, 5.0, 0.0)
    assert viewpoint_for((7.0, 5.0), nav, robot, SENSOR) is robot


def test_wall_is_walked_around():
    nav = GridNavigator(WALLED)
    robot = Pose(2.0, 2.0, 0.0)
    pose = viewpoint_for((8.0, 2.0), nav, robot, SENSOR)
    assert pose.x > 5.2
    assert pose.distance_to(8.0, 2.0) <= 4.0 + 1e-6
    assert can_see(WALLED, pose, 8.0, 2.0, SENSOR)
    assert nav.reachable(robot.xy, pose.xy)


def test_enclosed_target_has_no_viewpoint():
    nav = GridNavigator(BOXED)
    with pytest.raises(NoReachableViewpoint):
        viewpoint_for((7.0, 7.0), nav, Pose(2.0, 2.0, 0.0), SENSOR)


# ---------------------------------------------------------------------------
# select_navigation_goal
# ---------------------------------------------------------------------------

def test_goal_targets_the_heaviest_component():
    nav = GridNavigator(OPEN)
    robot = Pose(10.0, 10.0, math.pi)
    mixture = _mixture(((3.0, 10.0), 0.3), ((17.0, 10.0), 0.7))
    pose = select_navigation_goal(mixture, nav, robot, SENSOR)
    assert can_see(OPEN, pose, 17.0, 10.0, SENSOR)
    assert pose.x > 10.0


def test_tied_weights_prefer_the_nearest_mean():
    nav = GridNavigator(OPEN)
    robot = Pose(4.0, 10.0, math.pi / 2.0)
    mixture = _mixture(((18.0, 10.0), 0.5), ((1.0, 16.0), 0.5))
    pose = select_navigation_goal(mixture, nav, robot, SENSOR)
    assert can_see(OPEN, pose, 1.0, 16.0, SENSOR)


def test_empty_mixture():
    with pytest.raises(NoReachableViewpoint):
        select_navigation_goal(GaussianMixture(()), GridNavigator(OPEN), Pose(1.0, 1.0, 0.0), SENSOR)
