"""
Sensor geometry: which map points a viewpoint can see.
Used by the simulator to produce detections and by the object filter for negative updates.
"""
import numpy as np

from framemap.frames.models import Pose

from .geometry import as_points, segments_hit_rects, wrap_angle
from .models import SensorModel, WorldMap


def visible_mask(world_map: WorldMap, pose: Pose, points, sensor: SensorModel) -> np.ndarray:
    """(N,) bool: within range, inside the field of view, and not occluded by an obstacle."""
    pts = as_points(points)
    if len(pts) == 0:
        return np.zeros(0, dtype=bool)
    d = pts - np.array([pose.x, pose.y])
    dist = np.hypot(d[:, 0], d[:, 1])
    mask = dist <= sensor.range
    if sensor.fov < 2.0 * np.pi:
        bearing = wrap_angle(np.arctan2(d[:, 1], d[:, 0]) - pose.heading)
        mask &= (np.abs(bearing) <= 0.5 * sensor.fov) | (dist < 1e-9)
    if mask.any() and len(world_map.obstacle_array):
        idx = np.flatnonzero(mask)
        hit = segments_hit_rects((pose.x, pose.y), pts[idx], world_map.obstacle_array)
        mask[idx[hit]] = False
    return mask


def can_see(world_map: WorldMap, pose: Pose, x: float, y: float, sensor: SensorModel) -> bool:
    return bool(visible_mask(world_map, pose, np.array([[x, y]]), sensor)[0])
