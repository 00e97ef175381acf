"""
Search-and-execute loop for one task.

Every timestep the robot either moves one step, turns in place or runs one action
primitive, then observes and updates its beliefs. The precondition chain is re-planned
from the current state each step; its first frame is the current subgoal. When the
subgoal's core object is localized the robot approaches and acts, otherwise it
navigates to a viewpoint of the most probable region of the subgoal's belief.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from framemap.core.exceptions import (
    ConfigurationError,
    NoAffordance,
    NoReachableViewpoint,
    OutOfReach,
    Unreachable,
)
from framemap.core.logger import get_logger
from framemap.core.rng import make_rng
from framemap.frames.models import FrameInstance, FrameLibrary, Pose, SemanticFrame
from framemap.frames.relations import core_class
from framemap.inference.belief import BeliefState
from framemap.world.models import Observation
from framemap.world.navigation import approach_pose
from framemap.world.sensor import can_see
from framemap.world.simulator import MOTION_PRIMITIVES, PERCEPTION_PRIMITIVES, World

from .chain import plan_precondition_chain, state_to_record, verify_ordering
from .goals import select_navigation_goal, viewpoint_for
from .mixture import fit_mixture

logger = get_logger("planner")

_ARRIVED = 1e-6
_REUSE_RADIUS = 0.1


class Status(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class PlannerSettings:
    budget: int = 400
    k_max: int = 3
    confidence_mass: float = 0.5
    confidence_radius: float = 1.0
    view_fraction: float = 0.8
    max_attempts: int = 3
    em_max_iter: int = 100
    em_tol: float = 1e-6
    covariance_floor: float = 1e-3
    stall_limit: int = 4

    def __post_init__(self) -> None:
        if self.budget < 1 or self.k_max < 1 or self.max_attempts < 1 or self.em_max_iter < 1:
            raise ConfigurationError("planner budget, k_max, max_attempts and em_max_iter must be >= 1")
        if not 0.0 < self.confidence_mass <= 1.0:
            raise ConfigurationError("planner.confidence_mass must be in (0, 1]")
        if not 0.0 < self.view_fraction <= 1.0:
            raise ConfigurationError("planner.view_fraction must be in (0, 1]")
        if self.confidence_radius <= 0.0 or self.covariance_floor <= 0.0 or self.em_tol <= 0.0:
            raise ConfigurationError("planner.confidence_radius, covariance_floor and em_tol must be > 0")
        if self.stall_limit < 0:
            raise ConfigurationError("planner.stall_limit must be >= 0")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "PlannerSettings":
        p = cfg.get("planner", {})
        d = cls()
        return cls(
            budget=int(p.get("budget", d.budget)),
            k_max=int(p.get("k_max", d.k_max)),
            confidence_mass=float(p.get("confidence_mass", d.confidence_mass)),
            confidence_radius=float(p.get("confidence_radius", d.confidence_radius)),
            view_fraction=float(p.get("view_fraction", d.view_fraction)),
            max_attempts=int(p.get("max_attempts", d.max_attempts)),
            em_max_iter=int(p.get("em_max_iter", d.em_max_iter)),
            em_tol=float(p.get("em_tol", d.em_tol)),
            covariance_floor=float(p.get("covariance_floor", d.covariance_floor)),
            stall_limit=int(p.get("stall_limit", d.stall_limit)),
        )


@dataclass
class ExecutionTrace:
    """Ordered step records of one task and its single terminal status."""

    task: str
    utterance: str = ""
    records: List[dict] = field(default_factory=list)
    status: Optional[Status] = None
    reason: str = ""
    steps: int = 0
    path_length: float = 0.0
    frames_executed: List[str] = field(default_factory=list)
    manipulation_actions: int = 0
    ordering_violations: List[str] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status is Status.SUCCESS

    def add(self, record: dict) -> None:
        if self.status is not None:
            raise RuntimeError("trace of '%s' is already finished" % self.task)
        if self.records and record["t"] <= self.records[-1]["t"]:
            raise ValueError("timestep %d does not follow %d" % (record["t"], self.records[-1]["t"]))
        self.records.append(record)

    def finish(self, status: Status, reason: str = "") -> dict:
        if self.status is not None:
            raise RuntimeError("trace of '%s' is already finished" % self.task)
        self.status = status
        self.reason = reason
        return self.result_record()

    def result_record(self) -> dict:
        return {
            "kind": "result",
            "task": self.task,
            "status": self.status.value if self.status else None,
            "reason": self.reason,
            "steps": self.steps,
            "path_length": self.path_length,
            "frames_executed": list(self.frames_executed),
            "manipulation_actions": self.manipulation_actions,
            "ordering_safe": not self.ordering_violations,
        }

    def metrics(self) -> dict:
        out = self.result_record()
        out.pop("kind")
        out["success"] = self.success
        return out


def step_record(
    t: int,
    world: World,
    beliefs: BeliefState,
    observation: Observation,
    events: List[dict],
    include_particles: bool = False,
) -> dict:
    """Trace record of one timestep: robot, ground truth, observation and belief summaries."""
    pose = world.state.pose
    snapshot = world.snapshot()
    return {
        "kind": "step",
        "t": t,
        "robot": {
            "pose": [pose.x, pose.y, pose.heading],
            "gripper": world.state.gripper,
            "executed": list(world.state.executed),
        },
        "truth": snapshot["objects"],
        "observation": observation.to_record(),
        "events": events,
        "beliefs": beliefs.summaries(include_particles),
    }


class FrameExecutor:
    """Runs one task instance against a world with a belief state."""

    def __init__(
        self,
        world: World,
        beliefs: BeliefState,
        library: FrameLibrary,
        settings: Optional[PlannerSettings] = None,
        writer=None,
        trace_particles: bool = False,
        seed: Optional[int] = None,
    ) -> None:
        self.world = world
        self.beliefs = beliefs
        self.library = library
        self.settings = settings or PlannerSettings()
        self.writer = writer
        self.trace_particles = trace_particles
        self.seed = world.seed if seed is None else seed
        self.t = 0
        self._action_index: Dict[str, int] = {}
        self._failures: Dict[str, int] = {}
        self._stalls = 0
        self._fallback: Optional[Pose] = None
        self._approach: Optional[Tuple[str, np.ndarray, Pose]] = None
        self._tour = world.tour_waypoints()
        self._tour_index = 0

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------

    def _emit(self, trace: ExecutionTrace, record: dict) -> None:
        trace.add(record)
        if self.writer is not None:
            self.writer.write(record)

    def _observe(self, trace: ExecutionTrace, observation: Observation, **fields) -> None:
        events = self.beliefs.update(observation, self.world.state)
        record = step_record(self.t, self.world, self.beliefs, observation, events, self.trace_particles)
        record.update(fields)
        self._emit(trace, record)

    # ------------------------------------------------------------------
    # Loop
    # ------------------------------------------------------------------

    def run(self, task: FrameInstance, budget: Optional[int] = None) -> ExecutionTrace:
        budget = self.settings.budget if budget is None else budget
        bound = self.library.bind(task)
        target = bound[task.frame_id]
        trace = ExecutionTrace(task.frame_id, task.utterance)
        satisfied_at_start = target.is_satisfied(self.world.state)
        self._observe(trace, self.world.observe(), phase="start", subgoal=None, goal=None)
        status, reason = Status.TIMEOUT, "budget of %d steps exhausted" % budget
        while True:
            state = self.world.state
            if target.is_satisfied(state) and (satisfied_at_start or target.id in state.executed):
                status, reason = Status.SUCCESS, ""
                break
            if self.t >= budget:
                break
            chain = plan_precondition_chain(task, state, self.library)
            frame = bound[chain[0]]
            core = core_class(frame, state)
            if core is None:
                status, reason = Status.FAILURE, "frame '%s' has no core object at this stage" % frame.id
                break
            self.t += 1
            estimate = self.beliefs.localized(core, self.settings.confidence_mass, self.settings.confidence_radius)
            if estimate is not None:
                failure = self._engage(trace, frame, core, estimate)
                if failure:
                    status, reason = Status.FAILURE, failure
                    break
            else:
                self._search(trace, frame)

        trace.steps = self.t
        trace.path_length = self.world.distance_travelled
        trace.ordering_violations = verify_ordering(trace.records, bound)
        if status is Status.SUCCESS and trace.ordering_violations:
            status, reason = Status.FAILURE, "ordering violated: %s" % trace.ordering_violations[0]
        result = trace.finish(status, reason)
        if self.writer is not None:
            self.writer.write(result)
        logger.info("Task %s finished: %s after %d steps %s", task.frame_id, status.value, self.t, reason)
        return trace

    # ------------------------------------------------------------------
    # Acting on a localized core object
    # ------------------------------------------------------------------

    def _engage(self, trace: ExecutionTrace, frame: SemanticFrame, core: str, estimate: np.ndarray) -> str:
        world = self.world
        pose = world.state.pose
        perceptual = any(a in PERCEPTION_PRIMITIVES for a in frame.actions)
        try:
            if perceptual:
                ready = can_see(world.map, pose, estimate[0], estimate[1], world.sensor)
                goal = pose if ready else viewpoint_for(
                    estimate, world.navigator, pose, world.sensor, self.settings.view_fraction
                )
            else:
                goal = self._approach_goal(core, estimate)
                ready = pose.distance_to(goal.x, goal.y) < _ARRIVED
        except (Unreachable, NoReachableViewpoint) as e:
            logger.debug("t=%d: cannot approach %s estimate (%s)", self.t, core, e)
            self.beliefs.drop_detection(core)
            self._approach = None
            self._observe(trace, world.rotate(world.sensor.fov), phase="scan", subgoal=frame.id, goal=None)
            return ""
        if not ready:
            nav = world.step_navigate(goal, max_steps=1)
            self._observe(trace, nav.observations[-1], phase="approach", subgoal=frame.id, goal=_pose_list(goal))
            return ""
        return self._act(trace, frame, core)

    def _approach_goal(self, core: str, estimate: np.ndarray) -> Pose:
        """Approach pose for the estimate, kept while the estimate moves less than the reuse radius."""
        cached = self._approach
        if cached is not None and cached[0] == core and np.linalg.norm(cached[1] - estimate) < _REUSE_RADIUS:
            return cached[2]
        world = self.world
        goal = approach_pose(
            world.navigator, estimate, world.state.pose.xy, world.settings.approach_radius, world.settings.reach_radius
        )
        self._approach = (core, np.array(estimate), goal)
        return goal

    def _act(self, trace: ExecutionTrace, frame: SemanticFrame, core: str) -> str:
        world = self.world
        index = self._action_index.get(frame.id, 0)
        action = frame.actions[index]
        before = state_to_record(world.state)
        try:
            result = world.execute_primitive(action, frame)
        except (OutOfReach, NoAffordance) as e:
            logger.debug("t=%d: %s of %s not possible: %s", self.t, action, frame.id, e)
            self.beliefs.drop_detection(core)
            self._action_index[frame.id] = 0
            self._observe(
                trace, world.observe(), phase="act", frame=frame.id, action=action,
                result=type(e).__name__, state_before=before, goal=None,
            )
            return ""
        if result.success:
            if action not in MOTION_PRIMITIVES and action not in PERCEPTION_PRIMITIVES:
                trace.manipulation_actions += 1
            if result.completed_frame:
                trace.frames_executed.append(frame.id)
                self._action_index[frame.id] = 0
                self._failures.pop(frame.id, None)
            else:
                self._action_index[frame.id] = index + 1
            outcome = "completed" if result.completed_frame else "ok"
        else:
            self._failures[frame.id] = self._failures.get(frame.id, 0) + 1
            outcome = "failed"
        self._observe(
            trace, world.observe(), phase="act", frame=frame.id, action=action,
            result=outcome, state_before=before, goal=None,
        )
        if self._failures.get(frame.id, 0) >= self.settings.max_attempts:
            return "primitive '%s' of '%s' failed %d times" % (action, frame.id, self._failures[frame.id])
        return ""

    # ------------------------------------------------------------------
    # Searching
    # ------------------------------------------------------------------

    def _search(self, trace: ExecutionTrace, frame: SemanticFrame) -> None:
        world = self.world
        pose = world.state.pose
        if self._fallback is not None:
            goal = self._fallback
            if pose.distance_to(goal.x, goal.y) < _ARRIVED:
                self._fallback = None
            else:
                self._navigate(trace, frame, goal, "tour")
                return
        s = self.settings
        mixture = fit_mixture(
            self.beliefs.frame_sets[frame.id],
            s.k_max,
            make_rng(self.seed, "planner", "mixture", self.t),
            max_iter=s.em_max_iter,
            tol=s.em_tol,
            covariance_floor=s.covariance_floor,
        )
        try:
            goal = select_navigation_goal(mixture, world.navigator, pose, world.sensor, s.view_fraction)
        except NoReachableViewpoint as e:
            logger.debug("t=%d: %s", self.t, e)
            goal = None
        if goal is not None and goal != pose:
            self._stalls = 0
            self._navigate(trace, frame, goal, "search")
            return
        self._stalls += 1
        if self._stalls > s.stall_limit:
            self._stalls = 0
            self._fallback = self._next_waypoint()
            if self._fallback is not None:
                self._navigate(trace, frame, self._fallback, "tour")
                return
        self._observe(trace, world.rotate(world.sensor.fov), phase="scan", subgoal=frame.id, goal=None)

    def _navigate(self, trace: ExecutionTrace, frame: SemanticFrame, goal: Pose, phase: str) -> None:
        try:
            nav = self.world.step_navigate(goal, max_steps=1)
        except Unreachable as e:
            logger.debug("t=%d: goal dropped: %s", self.t, e)
            self._fallback = None
            self._observe(trace, self.world.rotate(self.world.sensor.fov), phase="scan", subgoal=frame.id, goal=None)
            return
        self._observe(trace, nav.observations[-1], phase=phase, subgoal=frame.id, goal=_pose_list(goal))

    def _next_waypoint(self) -> Optional[Pose]:
        here = self.world.state.pose
        for _ in range(len(self._tour)):
            x, y = self._tour[self._tour_index % len(self._tour)]
            self._tour_index += 1
            if math.hypot(x - here.x, y - here.y) < 1.0:
                continue
            if self.world.navigator.reachable(here.xy, (x, y)):
                return Pose(x, y, math.atan2(y - here.y, x - here.x))
        return None


def _pose_list(pose: Pose) -> List[float]:
    return [pose.x, pose.y, pose.heading]


def execute_frame(
    task: FrameInstance,
    world: World,
    beliefs: BeliefState,
    library: FrameLibrary,
    settings: Optional[PlannerSettings] = None,
    budget: Optional[int] = None,
    writer=None,
    trace_particles: bool = False,
) -> ExecutionTrace:
    """
    Search for and execute task (with its precondition chain) until its
    postconditions hold or the step budget runs out.

    Raises:
        PreconditionViolation: The chain let a frame run early (a planner bug).
    """
    executor = FrameExecutor(world, beliefs, library, settings, writer=writer, trace_particles=trace_particles)
    return executor.run(task, budget=budget)
