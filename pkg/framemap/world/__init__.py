"""Deterministic 2D household world: map, scenarios, navigation, sensing, primitives."""
from .geometry import Rect
from .models import (
    BACKGROUND,
    ActionResult,
    Detection,
    GroundTruthObject,
    NavigationResult,
    Observation,
    Room,
    SensorModel,
    WorldMap,
    WorldSettings,
)
from .navigation import GridNavigator, approach_pose
from .scenario import AFFORDANCE_OBJECT, AFFORDANCE_POSE, ObjectSpec, Scenario, parse_scenario, serialize_scenario
from .sensor import can_see, visible_mask
from .simulator import World, load_scenario

__all__ = [
    "AFFORDANCE_OBJECT",
    "AFFORDANCE_POSE",
    "ActionResult",
    "BACKGROUND",
    "Detection",
    "GridNavigator",
    "GroundTruthObject",
    "NavigationResult",
    "ObjectSpec",
    "Observation",
    "Rect",
    "Room",
    "Scenario",
    "SensorModel",
    "World",
    "WorldMap",
    "WorldSettings",
    "approach_pose",
    "can_see",
    "load_scenario",
    "parse_scenario",
    "serialize_scenario",
    "visible_mask",
]
