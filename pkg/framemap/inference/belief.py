"""
BeliefState: every particle set of one run and the per-timestep update order
(object filters first, then frame filters).
"""
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from framemap.core.logger import get_logger
from framemap.core.rng import make_rng
from framemap.frames.models import FrameLibrary, RobotState
from framemap.world.models import Detection, Observation, SensorModel, WorldMap

from .frame_filter import update_frame_filter
from .object_filter import collapse_to, scatter_around, update_object_filter
from .particles import ParticleSet, init_particles_from_prior, init_uniform, summarize
from .potentials import PotentialParams

logger = get_logger("inference.belief")

PLACEMENT_SIGMA = 0.1


def tracked_frames(library: FrameLibrary, frame_ids: Iterable[str]) -> Tuple[str, ...]:
    """The given frames plus, transitively, all their preconditions (sorted)."""
    out = set()
    stack = list(frame_ids)
    while stack:
        fid = stack.pop()
        if fid in out:
            continue
        out.add(fid)
        stack.extend(library[fid].preconditions)
    return tuple(sorted(out))


def carried_classes(state: RobotState) -> Tuple[str, ...]:
    """Gripper contents plus everything placed (transitively) inside it."""
    if state.gripper is None:
        return ()
    carried = {state.gripper}
    changed = True
    while changed:
        changed = False
        for obj, target in state.placements:
            if target in carried and obj not in carried:
                carried.add(obj)
                changed = True
    return tuple(sorted(carried))


class BeliefState:
    """
    Object and frame particle sets of one trial.

    Example::

        beliefs = BeliefState(world.map, library.bind(instance), ["stir_cup"], params, world.sensor, seed=7)
        beliefs.update(world.observe(), world.state)
    """

    def __init__(
        self,
        world_map: WorldMap,
        library: FrameLibrary,
        frame_ids: Sequence[str],
        params: Optional[PotentialParams] = None,
        sensor: Optional[SensorModel] = None,
        seed: int = 0,
        particles: int = 200,
        core_ring_radius: float = 0.0,
    ) -> None:
        self.map = world_map
        self.library = library
        self.params = params or PotentialParams()
        self.sensor = sensor or SensorModel()
        self.seed = seed
        self.core_ring_radius = core_ring_radius
        self.step = 0
        self.frame_ids = tracked_frames(library, frame_ids)
        classes = sorted({cls for fid in self.frame_ids for cls in library[fid].object_classes})
        self.object_sets: Dict[str, ParticleSet] = {
            cls: init_particles_from_prior(world_map, cls, particles, make_rng(seed, "init", "object", cls))
            for cls in classes
        }
        self.frame_sets: Dict[str, ParticleSet] = {
            fid: init_uniform(world_map, fid, particles, make_rng(seed, "init", "frame", fid)) for fid in self.frame_ids
        }
        self.last_detection: Dict[str, Detection] = {}
        self.events: List[dict] = []
        self._carried: Tuple[str, ...] = ()

    @property
    def object_classes(self) -> Tuple[str, ...]:
        return tuple(self.object_sets)

    def update(self, observation: Observation, state: RobotState) -> List[dict]:
        """
        Fold one observation into every set. Returns the events of this step
        (injections, resamples, reinvigorations, resets).
        """
        events: List[dict] = []
        carried = carried_classes(state)
        robot = np.array(state.pose.xy)
        for cls in sorted(self.object_sets):
            current = self.object_sets[cls]
            if cls in carried:
                self.object_sets[cls] = collapse_to(current, robot)
                self.last_detection.pop(cls, None)
                continue
            if cls in self._carried:
                current = scatter_around(
                    current, self.map, robot, PLACEMENT_SIGMA, make_rng(self.seed, "placed", cls, self.step)
                )
                events.append({"kind": "released", "owner": cls})
            self.object_sets[cls] = update_object_filter(
                current,
                observation,
                self.map,
                self.sensor,
                self.params,
                make_rng(self.seed, "objects", cls, self.step),
                events,
            )
            dets = observation.of_class(cls)
            if dets:
                self.last_detection[cls] = dets[0]
        self._carried = carried
        self.frame_sets = update_frame_filter(
            self.frame_sets,
            self.object_sets,
            state,
            self.library,
            self.params,
            self.seed,
            self.map,
            step=self.step,
            core_ring_radius=self.core_ring_radius,
            events=events,
        )
        for event in events:
            event["step"] = self.step
        self.events.extend(events)
        self.step += 1
        return events

    def drop_detection(self, cls: str) -> None:
        """Forget the latest detection of cls (it did not survive an approach)."""
        self.last_detection.pop(cls, None)

    def localized(self, cls: str, mass: float, radius: float) -> Optional[np.ndarray]:
        """
        Estimated position of cls when at least ``mass`` of its belief lies within
        ``radius`` of the latest detection; None otherwise.
        """
        det = self.last_detection.get(cls)
        particles = self.object_sets.get(cls)
        if det is None or particles is None:
            return None
        if particles.mass_within(det.position, radius) < mass:
            return None
        return particles.mean_within(det.position, radius)

    def mass_by_room(self, owner: str) -> Dict[str, float]:
        return self._set(owner).mass_by_room(self.map)

    def _set(self, owner: str) -> ParticleSet:
        if owner in self.frame_sets:
            return self.frame_sets[owner]
        return self.object_sets[owner]

    def summaries(self, include_particles: bool = False) -> dict:
        """Trace fragment: per-owner summaries of frames and objects."""
        return {
            "frames": {fid: summarize(ps, self.map, include_particles) for fid, ps in sorted(self.frame_sets.items())},
            "objects": {
                cls: summarize(ps, self.map, include_particles) for cls, ps in sorted(self.object_sets.items())
            },
        }
