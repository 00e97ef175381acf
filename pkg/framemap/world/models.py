"""
World data model: annotated map, ground-truth objects, observations, sensor and
simulator settings, navigation/action results.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from framemap.core.exceptions import ConfigurationError, EmptyFreeSpace
from framemap.frames.models import Pose

from .geometry import Rect, as_points, points_in_rects, rects_array

BACKGROUND = "background"


@dataclass(frozen=True)
class Room:
    name: str
    rect: Rect


@dataclass(frozen=True)
class WorldMap:
    """Metric map with named room rectangles, obstacles and per-class room priors."""

    bounds: Rect
    rooms: Tuple[Room, ...] = ()
    obstacles: Tuple[Rect, ...] = ()
    priors: Tuple[Tuple[str, Tuple[Tuple[str, float], ...]], ...] = ()
    name: str = "map"

    def __post_init__(self) -> None:
        object.__setattr__(self, "_obstacles", rects_array(self.obstacles))
        object.__setattr__(self, "_rooms", rects_array(r.rect for r in self.rooms))

    @property
    def obstacle_array(self) -> np.ndarray:
        return self._obstacles

    @property
    def room_names(self) -> Tuple[str, ...]:
        return tuple(r.name for r in self.rooms)

    def room(self, name: str) -> Room:
        for r in self.rooms:
            if r.name == name:
                return r
        raise KeyError("no room '%s'" % name)

    def prior_for(self, object_class: str) -> Dict[str, float]:
        for cls, masses in self.priors:
            if cls == object_class:
                return dict(masses)
        return {}

    def in_bounds(self, points) -> np.ndarray:
        return self.bounds.contains_points(points)

    def is_free(self, x: float, y: float, clearance: float = 0.0) -> bool:
        return bool(self.free_mask(np.array([[x, y]]), clearance)[0])

    def free_mask(self, points, clearance: float = 0.0) -> np.ndarray:
        """(N,) bool: inside bounds and outside every obstacle inflated by clearance."""
        pts = as_points(points)
        return self.bounds.contains_points(pts) & ~points_in_rects(pts, self._obstacles, clearance)

    def room_index(self, points) -> np.ndarray:
        """(N,) index of the first room containing each point, -1 for background."""
        pts = as_points(points)
        out = np.full(len(pts), -1, dtype=np.int64)
        for i in range(len(self.rooms) - 1, -1, -1):
            out[self.rooms[i].rect.contains_points(pts)] = i
        return out

    def room_of(self, x: float, y: float) -> str:
        idx = int(self.room_index(np.array([[x, y]]))[0])
        return self.rooms[idx].name if idx >= 0 else BACKGROUND

    def sample_free(
        self,
        rng: np.random.Generator,
        n: int,
        region: Optional[Rect] = None,
        clearance: float = 0.0,
        max_rounds: int = 64,
    ) -> np.ndarray:
        """n uniform points of free space (optionally restricted to region) by rejection."""
        area = region or self.bounds
        out: List[np.ndarray] = []
        have = 0
        batch = max(16, 2 * n)
        for _ in range(max_rounds):
            if have >= n:
                break
            pts = area.sample(rng, batch)
            pts = pts[self.free_mask(pts, clearance)]
            out.append(pts)
            have += len(pts)
        if have < n:
            raise EmptyFreeSpace("no free space to sample in %s" % (region or "map bounds",))
        return np.concatenate(out)[:n] if n else np.zeros((0, 2))


@dataclass
class GroundTruthObject:
    """An object instance. ``container`` names the object it sits in/on, if any."""

    cls: str
    position: Tuple[float, float]
    flags: set = field(default_factory=set)
    container: Optional[str] = None


@dataclass(frozen=True)
class Detection:
    cls: str
    position: Tuple[float, float]
    confidence: float


@dataclass(frozen=True)
class Observation:
    detections: Tuple[Detection, ...]
    viewpoint: Pose
    range: float
    fov: float

    def of_class(self, object_class: str) -> List[Detection]:
        return [d for d in self.detections if d.cls == object_class]

    def to_record(self) -> dict:
        return {
            "viewpoint": [self.viewpoint.x, self.viewpoint.y, self.viewpoint.heading],
            "detections": [
                {"cls": d.cls, "position": list(d.position), "confidence": d.confidence} for d in self.detections
            ],
        }


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigurationError(message)


@dataclass(frozen=True)
class SensorModel:
    """Range-limited detector."""

    range: float = 5.0
    fov: float = 2.0 * math.pi / 3.0
    noise: float = 0.15
    miss_rate: float = 0.05

    def __post_init__(self) -> None:
        _require(self.range > 0.0, "sensor.range must be > 0")
        _require(0.0 < self.fov <= 2.0 * math.pi, "sensor.fov must be in (0, 2*pi]")
        _require(self.noise >= 0.0, "sensor.noise must be >= 0")
        _require(0.0 <= self.miss_rate < 1.0, "sensor.miss_rate must be in [0, 1)")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "SensorModel":
        s = cfg.get("sensor", {})
        return cls(
            range=float(s.get("range", 5.0)),
            fov=float(s.get("fov", 2.0 * math.pi / 3.0)),
            noise=float(s.get("noise", 0.15)),
            miss_rate=float(s.get("miss_rate", 0.05)),
        )


@dataclass(frozen=True)
class WorldSettings:
    reach_radius: float = 0.8
    step_length: float = 0.25
    clearance: float = 0.15
    approach_radius: float = 0.35
    placement_clearance: float = 0.5
    primitive_success: Tuple[Tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        _require(self.reach_radius > 0.0, "world.reach_radius must be > 0")
        _require(self.step_length > 0.0, "world.step_length must be > 0")
        _require(self.clearance >= 0.0, "world.clearance must be >= 0")
        _require(0.0 < self.approach_radius <= self.reach_radius, "world.approach_radius must be in (0, reach_radius]")
        for action, p in self.primitive_success:
            _require(0.0 <= p <= 1.0, "world.primitive_success.%s must be in [0, 1]" % action)

    def success_probability(self, action: str) -> float:
        return dict(self.primitive_success).get(action, 1.0)

    @classmethod
    def from_config(cls, cfg: Mapping) -> "WorldSettings":
        w = cfg.get("world", {})
        success = w.get("primitive_success") or {}
        return cls(
            reach_radius=float(w.get("reach_radius", 0.8)),
            step_length=float(w.get("step_length", 0.25)),
            clearance=float(w.get("clearance", 0.15)),
            approach_radius=float(w.get("approach_radius", 0.35)),
            placement_clearance=float(w.get("placement_clearance", 0.5)),
            primitive_success=tuple(sorted((str(k), float(v)) for k, v in success.items())),
        )


@dataclass
class NavigationResult:
    path: List[Pose]
    length: float
    observations: List[Observation]
    reached: bool


@dataclass
class ActionResult:
    action: str
    frame_id: str
    success: bool
    completed_frame: bool = False
    target: Optional[str] = None
    observation: Optional[Observation] = None
    message: str = ""
