"""
Deterministic household-world simulator.

A World owns the ground truth (objects, robot state) of one trial and three seeded
streams: sensing, primitive outcomes and random placement. Identical (scenario, seed,
action sequence) triples replay identically.
"""
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from framemap.core.exceptions import GeometryError, NoAffordance, OutOfReach, PreconditionViolation
from framemap.core.logger import get_logger
from framemap.core.rng import make_rng
from framemap.frames.models import EffectKind, Pose, RobotState, SemanticFrame, StateEffect
from framemap.frames.relations import core_class, next_unmet_precondition

from .geometry import walk_polyline, wrap_angle
from .models import (
    ActionResult,
    Detection,
    GroundTruthObject,
    NavigationResult,
    Observation,
    SensorModel,
    WorldSettings,
)
from .navigation import GridNavigator, approach_pose
from .scenario import AFFORDANCE_POSE, Scenario, parse_scenario
from .sensor import can_see, visible_mask

logger = get_logger("world")

PERCEPTION_PRIMITIVES = ("look",)
MOTION_PRIMITIVES = ("navigate",)

_PLACEMENT_SPACING = 0.6
_NOISE_REDRAWS = 8


class World:
    """Single-owner mutable simulator state for one trial."""

    def __init__(
        self,
        scenario: Scenario,
        seed: int,
        sensor: Optional[SensorModel] = None,
        settings: Optional[WorldSettings] = None,
    ) -> None:
        self.scenario = scenario
        self.map = scenario.map
        self.seed = seed
        self.sensor = sensor or SensorModel()
        self.settings = settings or WorldSettings()
        self._sense_rng = make_rng(seed, "world", "sensor")
        self._action_rng = make_rng(seed, "world", "primitive")
        self._place_rng = make_rng(seed, "world", "placement")
        self.navigator = GridNavigator(self.map, resolution=0.25, clearance=self.settings.clearance)
        self.objects: Dict[str, GroundTruthObject] = {}
        self.held: Optional[GroundTruthObject] = None
        self.state = RobotState(pose=scenario.robot)
        self.distance_travelled = 0.0
        self._place_objects()
        if scenario.holding:
            self.set_holding(scenario.holding)

    # ------------------------------------------------------------------
    # Setup
    # ------------------------------------------------------------------

    @property
    def pose_level(self) -> bool:
        return self.scenario.affordance == AFFORDANCE_POSE

    def _place_objects(self) -> None:
        for spec in self.scenario.objects:
            pos = spec.position if spec.position is not None else self._random_position(spec.cls)
            self.objects[spec.cls] = GroundTruthObject(spec.cls, (float(pos[0]), float(pos[1])), set(spec.flags))

    def _random_position(self, cls: str) -> Tuple[float, float]:
        prior = self.map.prior_for(cls)
        rooms = list(prior.items())
        masses = np.array([m for _, m in rooms] + [max(0.0, 1.0 - sum(m for _, m in rooms))])
        if masses.sum() <= 0.0:
            masses = np.ones_like(masses)
        masses = masses / masses.sum()
        taken = [o.position for o in self.objects.values()]
        for _ in range(200):
            k = int(self._place_rng.choice(len(masses), p=masses))
            region = self.map.room(rooms[k][0]).rect if k < len(rooms) else None
            p = self.map.sample_free(self._place_rng, 1, region=region, clearance=self.settings.placement_clearance)[0]
            if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= _PLACEMENT_SPACING for q in taken):
                if self.navigator.reachable(self.scenario.robot.xy, p):
                    return (float(p[0]), float(p[1]))
        raise GeometryError("cannot place '%s' in free space" % cls)

    def set_holding(self, cls: Optional[str]) -> None:
        """Put an object class in the gripper (or empty it), bypassing primitives."""
        if self.held is not None:
            self._drop_held()
        self.state = StateEffect(EffectKind.GRIPPER_CLEAR).apply(self.state)
        if cls is None:
            return
        obj = self.objects.pop(cls, None) or GroundTruthObject(cls, self.state.pose.xy)
        self.held = obj
        self.state = StateEffect(EffectKind.GRIPPER_SET, (cls,)).apply(self.state)

    # ------------------------------------------------------------------
    # Sensing
    # ------------------------------------------------------------------

    def visible_objects(self) -> List[GroundTruthObject]:
        return [o for o in self.objects.values() if not self._is_carried(o)]

    def _is_carried(self, obj: GroundTruthObject) -> bool:
        seen = set()
        cur = obj
        while cur.container is not None and cur.container not in seen:
            seen.add(cur.container)
            if self.held is not None and cur.container == self.held.cls:
                return True
            nxt = self.objects.get(cur.container)
            if nxt is None:
                return False
            cur = nxt
        return False

    def observe(self, pose: Optional[Pose] = None) -> Observation:
        """Detections of every visible object from pose (default: the robot pose)."""
        pose = pose or self.state.pose
        objs = sorted(self.visible_objects(), key=lambda o: o.cls)
        detections = []
        if objs:
            pts = np.array([o.position for o in objs], dtype=np.float64)
            mask = visible_mask(self.map, pose, pts, self.sensor)
            for obj, p, vis in zip(objs, pts, mask):
                if not vis:
                    continue
                u = self._sense_rng.random()
                noise = self._sense_rng.normal(0.0, 1.0, size=2) * self.sensor.noise
                if u < self.sensor.miss_rate:
                    continue
                z = self._in_view_reading(pose, p, noise)
                if z is None:
                    logger.debug("Detection of %s dropped: noisy reading kept leaving the view", obj.cls)
                    continue
                dist = math.hypot(z[0] - pose.x, z[1] - pose.y)
                confidence = 1.0 - self.sensor.miss_rate * dist / self.sensor.range
                detections.append(Detection(obj.cls, (float(z[0]), float(z[1])), float(confidence)))
        return Observation(tuple(detections), pose, self.sensor.range, self.sensor.fov)

    def _in_view_reading(self, pose: Pose, p: np.ndarray, noise: np.ndarray) -> Optional[np.ndarray]:
        """p plus sensor noise, redrawn until the reading lies in view; None if it never does."""
        for _ in range(_NOISE_REDRAWS):
            z = p + noise
            if visible_mask(self.map, pose, z[None, :], self.sensor)[0]:
                return z
            noise = self._sense_rng.normal(0.0, 1.0, size=2) * self.sensor.noise
        return None

    # ------------------------------------------------------------------
    # Motion
    # ------------------------------------------------------------------

    def _move_to(self, pose: Pose) -> None:
        self.distance_travelled += self.state.pose.distance_to(pose.x, pose.y)
        self.state = self.state.with_pose(pose)
        if self.held is not None:
            self.held.position = pose.xy
            self._sync_contents()

    def step_navigate(self, target: Pose, max_steps: Optional[int] = None) -> NavigationResult:
        """
        Advance along the shortest free path to target, observing after every step.

        Raises:
            Unreachable: target outside the map, inside an obstacle, or not connected.
        """
        start = self.state.pose
        polyline = self.navigator.plan(start.xy, target.xy)
        full = walk_polyline(np.array(polyline), self.settings.step_length)
        if len(full) == 0:
            self._move_to(Pose(start.x, start.y, target.heading))
            return NavigationResult([self.state.pose], 0.0, [self.observe()], True)
        steps = full if max_steps is None else full[: max(1, max_steps)]
        reached = len(steps) == len(full)
        path: List[Pose] = []
        observations: List[Observation] = []
        travelled = 0.0
        prev = np.array(start.xy)
        for k, p in enumerate(steps):
            last = reached and k == len(steps) - 1
            delta = p - prev
            if last:
                heading = target.heading
            elif np.hypot(delta[0], delta[1]) > 1e-9:
                heading = math.atan2(delta[1], delta[0])
            else:
                heading = self.state.pose.heading
            travelled += float(np.hypot(delta[0], delta[1]))
            self._move_to(Pose(float(p[0]), float(p[1]), float(heading)))
            path.append(self.state.pose)
            observations.append(self.observe())
            prev = p
        return NavigationResult(path, travelled, observations, reached)

    def rotate(self, angle: float) -> Observation:
        """Turn in place by angle (rad) and observe."""
        pose = self.state.pose
        self._move_to(Pose(pose.x, pose.y, float(wrap_angle(pose.heading + angle))))
        return self.observe()

    # ------------------------------------------------------------------
    # Primitives
    # ------------------------------------------------------------------

    def execute_primitive(self, action: str, frame: SemanticFrame) -> ActionResult:
        """
        Run one action of a (resolved) frame. The frame's postconditions are applied
        when its last action succeeds.

        Raises:
            PreconditionViolation: A precondition is unmet, or a single-shot frame reruns.
            OutOfReach: Target object beyond reach (or out of sight for ``look``).
            NoAffordance: The frame's core object, or an object its postconditions
                grasp or move, is not in the world.
        """
        if action not in frame.actions:
            raise ValueError("'%s' is not an action of frame '%s'" % (action, frame.id))
        if not frame.repeatable and frame.id in self.state.executed:
            raise PreconditionViolation(frame.id, "%s (single-shot, already executed)" % frame.id)
        unmet = next_unmet_precondition(frame, self.state)
        if unmet is not None:
            raise PreconditionViolation(frame.id, unmet)

        target = core_class(frame, self.state)
        if action not in MOTION_PRIMITIVES:
            obj = self.objects.get(target) if target else None
            if obj is None or self._is_carried(obj):
                raise NoAffordance("'%s' needs '%s', which is not in the world" % (frame.id, target))
            pose = self.state.pose
            dist = pose.distance_to(*obj.position)
            if action in PERCEPTION_PRIMITIVES:
                if not can_see(self.map, pose, obj.position[0], obj.position[1], self.sensor):
                    raise OutOfReach(target, dist, self.sensor.range)
            elif dist > self.settings.reach_radius + 1e-9:
                raise OutOfReach(target, dist, self.settings.reach_radius)

        p = self.settings.success_probability(action)
        success = bool(self._action_rng.random() < p)
        if not success:
            logger.info("Primitive %s of %s failed (p=%.2f)", action, frame.id, p)
            return ActionResult(action, frame.id, False, target=target, message="primitive failed")
        completed = action == frame.actions[-1]
        if completed:
            self._apply_effects(frame.postconditions)
            self.state = self.state.with_executed(frame.id)
        return ActionResult(action, frame.id, True, completed_frame=completed, target=target)

    def _apply_effects(self, effects) -> None:
        """
        Raises:
            NoAffordance: An effect grasps or moves an object that is not in the world.
        """
        effects = tuple(effects)
        present = set(self.objects) | ({self.held.cls} if self.held is not None else set())
        for effect in effects:
            if effect.kind in (EffectKind.GRIPPER_SET, EffectKind.OBJECT_MOVED_TO) and effect.arguments[0] not in present:
                raise NoAffordance("%s needs '%s', which is not in the world" % (effect.to_text(), effect.arguments[0]))
        for effect in effects:
            kind = effect.kind
            if kind is EffectKind.GRIPPER_SET:
                cls = effect.arguments[0]
                if self.held is not None and self.held.cls != cls:
                    self._drop_held()
                if self.held is None:
                    obj = self.objects.pop(cls)
                    obj.container = None
                    obj.position = self.state.pose.xy
                    self.held = obj
            elif kind is EffectKind.GRIPPER_CLEAR:
                self._drop_held()
            elif kind is EffectKind.OBJECT_MOVED_TO:
                cls, dest = effect.arguments
                obj = self.held if self.held is not None and self.held.cls == cls else self.objects[cls]
                if obj is self.held:
                    self.held = None
                self.objects[cls] = obj
                obj.container = dest
                container = self.objects.get(dest)
                obj.position = container.position if container is not None else self.state.pose.xy
            else:
                cls = effect.arguments[0]
                name, value = effect.flag
                obj = self.objects.get(cls) or (self.held if self.held is not None and self.held.cls == cls else None)
                if obj is not None:
                    if value:
                        obj.flags.add(name)
                    else:
                        obj.flags.discard(name)
            self.state = effect.apply(self.state)
        self._sync_contents()

    def _drop_held(self) -> None:
        obj = self.held
        if obj is None:
            return
        pose = self.state.pose
        front = (pose.x + 0.3 * math.cos(pose.heading), pose.y + 0.3 * math.sin(pose.heading))
        obj.position = front if self.map.is_free(*front) else pose.xy
        obj.container = None
        self.objects[obj.cls] = obj
        self.held = None
        self._sync_contents()

    def _sync_contents(self) -> None:
        """Contained objects follow their container (the gripper for a held container)."""
        for _ in range(len(self.objects) + 1):
            moved = False
            for obj in self.objects.values():
                if obj.container is None:
                    continue
                if self.held is not None and obj.container == self.held.cls:
                    pos = self.held.position
                else:
                    parent = self.objects.get(obj.container)
                    if parent is None:
                        continue
                    pos = parent.position
                if obj.position != pos:
                    obj.position = pos
                    moved = True
            if not moved:
                break

    # ------------------------------------------------------------------
    # Oracles
    # ------------------------------------------------------------------

    def object_position(self, cls: str) -> Optional[Tuple[float, float]]:
        """Ground-truth position of an object class (held objects: robot position)."""
        if self.held is not None and self.held.cls == cls:
            return self.state.pose.xy
        obj = self.objects.get(cls)
        return obj.position if obj is not None else None

    def ground_truth_afforded_pose(self, frame: SemanticFrame) -> Pose:
        """
        Collision-free pose within reach of the frame's current core object.

        Raises:
            NoAffordance: The core object is not in the world.
        """
        target = core_class(frame, self.state)
        obj = self.objects.get(target) if target else None
        if obj is None or self._is_carried(obj):
            raise NoAffordance("'%s' has no core object in the world" % frame.id)
        return approach_pose(
            self.navigator, obj.position, self.state.pose.xy, self.settings.approach_radius, self.settings.reach_radius
        )

    def tour_waypoints(self) -> List[Tuple[float, float]]:
        """Scripted waypoints, or the centers of every room (nearest free point)."""
        if self.scenario.waypoints:
            return list(self.scenario.waypoints)
        out = []
        for room in self.map.rooms:
            c = np.array(room.rect.center)
            if not self.map.is_free(c[0], c[1], self.settings.clearance):
                cand = self.map.sample_free(make_rng(self.seed, "world", "tour", room.name), 64, room.rect,
                                            self.settings.clearance)
                c = cand[np.argmin(np.linalg.norm(cand - c, axis=1))]
            out.append((float(c[0]), float(c[1])))
        return out

    def snapshot(self) -> dict:
        """Ground truth as a trace record fragment."""
        return {
            "robot": {
                "pose": [self.state.pose.x, self.state.pose.y, self.state.pose.heading],
                "gripper": self.state.gripper,
                "executed": list(self.state.executed),
            },
            "objects": {
                cls: {"position": list(o.position), "flags": sorted(o.flags), "container": o.container}
                for cls, o in sorted(self.objects.items())
            },
        }


def load_scenario(
    source_text: str,
    seed: int,
    sensor: Optional[SensorModel] = None,
    settings: Optional[WorldSettings] = None,
) -> World:
    """Parse a scenario document and build a seeded world from it."""
    return World(parse_scenario(source_text), seed, sensor=sensor, settings=settings)
