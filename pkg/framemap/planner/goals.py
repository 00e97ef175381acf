"""
Navigation-goal selection: a reachable pose from which the robot can observe the
mean of the most probable mixture component.
"""
import math
from typing import Iterable, Optional

import numpy as np

from framemap.core.exceptions import NoReachableViewpoint
from framemap.frames.models import Pose
from framemap.world.geometry import as_point
from framemap.world.models import SensorModel, WorldMap
from framemap.world.navigation import GridNavigator
from framemap.world.sensor import can_see

from .mixture import GaussianMixture

RING_ANGLES = 32
_RING_SCALES = (1.0, 0.75, 0.5, 0.25)


def nearest_free_point(world_map: WorldMap, point, clearance: float = 0.0, step: float = 0.25) -> np.ndarray:
    """point itself when free, else the closest free point on growing rings around it."""
    p = as_point(point)
    b = world_map.bounds
    p = np.array([min(max(p[0], b.x0 + 1e-6), b.x1 - 1e-6), min(max(p[1], b.y0 + 1e-6), b.y1 - 1e-6)])
    if world_map.is_free(p[0], p[1], clearance):
        return p
    radius = step
    limit = math.hypot(b.width, b.height)
    while radius <= limit:
        angles = 2.0 * math.pi * np.arange(RING_ANGLES) / RING_ANGLES
        ring = p + radius * np.column_stack((np.cos(angles), np.sin(angles)))
        ok = world_map.free_mask(ring, clearance)
        if ok.any():
            return ring[np.flatnonzero(ok)[0]]
        radius += step
    return p


def _viewpoint_ok(
    navigator: GridNavigator, sensor: SensorModel, start, candidate: np.ndarray, target: np.ndarray
) -> Optional[Pose]:
    world_map = navigator.map
    if not world_map.is_free(candidate[0], candidate[1], navigator.clearance):
        return None
    pose = Pose(float(candidate[0]), float(candidate[1])).facing(float(target[0]), float(target[1]))
    if not can_see(world_map, pose, target[0], target[1], sensor):
        return None
    if not navigator.reachable(start, candidate):
        return None
    return pose


def _ring_candidates(target: np.ndarray, radii: Iterable[float], start: np.ndarray):
    angles = 2.0 * math.pi * np.arange(RING_ANGLES) / RING_ANGLES
    for r in radii:
        ring = target + r * np.column_stack((np.cos(angles), np.sin(angles)))
        order = np.lexsort((np.arange(RING_ANGLES), np.linalg.norm(ring - start, axis=1)))
        for k in order:
            yield ring[k]


def viewpoint_for(
    target,
    navigator: GridNavigator,
    robot_pose: Pose,
    sensor: SensorModel,
    view_fraction: float = 0.8,
) -> Pose:
    """
    A reachable pose within view_fraction * range of target that sees it. The robot
    pose itself when it already sees the target; otherwise the point on the segment
    towards the robot, then rings of shrinking radius around the target.

    Raises:
        NoReachableViewpoint: No candidate is free, reachable and has line of sight.
    """
    t = nearest_free_point(navigator.map, target)
    if can_see(navigator.map, robot_pose, t[0], t[1], sensor):
        return robot_pose
    start = np.array(robot_pose.xy)
    max_dist = view_fraction * sensor.range
    offset = start - t
    dist = float(np.linalg.norm(offset))
    if dist > 1e-9:
        candidate = t + offset / dist * min(max_dist, dist)
        pose = _viewpoint_ok(navigator, sensor, start, candidate, t)
        if pose is not None:
            return pose
    for candidate in _ring_candidates(t, [s * max_dist for s in _RING_SCALES], start):
        pose = _viewpoint_ok(navigator, sensor, start, candidate, t)
        if pose is not None:
            return pose
    raise NoReachableViewpoint("no reachable pose sees (%.2f, %.2f)" % (t[0], t[1]))


def select_navigation_goal(
    mixture: GaussianMixture,
    navigator: GridNavigator,
    robot_pose: Pose,
    sensor: SensorModel,
    view_fraction: float = 0.8,
) -> Pose:
    """
    Viewpoint of the highest-weight component's mean (ties: nearest mean).

    Raises:
        NoReachableViewpoint: The chosen component cannot be observed from any reachable pose.
    """
    if mixture.count == 0:
        raise NoReachableViewpoint("empty mixture")
    best = mixture.ranked(robot_pose.xy)[0]
    return viewpoint_for(best.mean, navigator, robot_pose, sensor, view_fraction)
