"""
Frame-location particle filter.

Per timestep and frame: resample by the previous weights, predict with the frame's
permanence model, then weight every particle by the product of measurement factors
(related objects) and context factors (pending precondition frame). Neighbours whose
relation belief is entirely Disjoint are left out of the product. Context factors read
the previous timestep's frame sets, so frames can be updated in any order.
"""
from typing import Dict, List, Mapping, Optional

import numpy as np

from framemap.core.exceptions import DegenerateBelief
from framemap.core.logger import get_logger
from framemap.core.rng import as_generator, make_rng
from framemap.frames.models import FrameLibrary, Permanence, RobotState, SemanticFrame
from framemap.frames.relations import frame_neighbors, object_neighbors
from framemap.world.models import WorldMap

from .particles import (
    ParticleSet,
    SeedLike,
    effective_sample_size,
    reinvigorate,
    resample,
    uniform_weights,
)
from .potentials import PotentialParams, log_context_factors, log_measurement_factors

logger = get_logger("inference.frames")

SUPPORT_PROBES = 64


def _record(events: Optional[List[dict]], **event) -> None:
    if events is not None:
        events.append(event)


def predict_frame(
    particles: ParticleSet,
    frame: SemanticFrame,
    params: PotentialParams,
    world_map: Optional[WorldMap] = None,
    seed: SeedLike = 0,
) -> ParticleSet:
    """
    Permanence step: static frames keep their positions; movable frames drift by
    N(0, sigma^2 I). Moves that leave free space are undone.
    """
    if frame.permanence is Permanence.STATIC:
        return particles.copy()
    sigma = params.sigma_p_movable if frame.movable_sigma is None else frame.movable_sigma
    if sigma <= 0.0:
        return particles.copy()
    rng = as_generator(seed, "predict", particles.owner)
    moved = particles.positions + rng.normal(0.0, sigma, size=particles.positions.shape)
    if world_map is not None:
        ok = world_map.free_mask(moved)
        moved[~ok] = particles.positions[~ok]
    return ParticleSet(moved, particles.weights.copy(), particles.owner)


def log_frame_factors(
    positions: np.ndarray,
    frame: SemanticFrame,
    state: RobotState,
    library: FrameLibrary,
    object_sets: Mapping[str, ParticleSet],
    frame_sets: Mapping[str, ParticleSet],
    params: PotentialParams,
    core_ring_radius: float = 0.0,
) -> Optional[np.ndarray]:
    """
    Summed log factors of every neighbour at the given positions; None when the
    frame has no tracked non-Disjoint neighbour.
    """
    total = np.zeros(len(positions))
    used = 0
    for cls, rel in object_neighbors(frame, state):
        obj = object_sets.get(cls)
        if obj is None:
            continue
        total += log_measurement_factors(positions, obj, rel, params, core_ring_radius=core_ring_radius)
        used += 1
    for other_id, rel in frame_neighbors(frame, state, library):
        other = frame_sets.get(other_id)
        if other is None:
            continue
        total += log_context_factors(positions, other, rel, params)
        used += 1
    return total if used else None


def _reset(particles: ParticleSet, world_map: WorldMap, rng: np.random.Generator) -> ParticleSet:
    return ParticleSet(world_map.sample_free(rng, particles.count), uniform_weights(particles.count), particles.owner)


def update_frame(
    particles: ParticleSet,
    frame: SemanticFrame,
    state: RobotState,
    library: FrameLibrary,
    object_sets: Mapping[str, ParticleSet],
    frame_sets: Mapping[str, ParticleSet],
    params: PotentialParams,
    world_map: WorldMap,
    seed: SeedLike,
    core_ring_radius: float = 0.0,
    events: Optional[List[dict]] = None,
) -> ParticleSet:
    """Resample, predict and reweight one frame's set."""
    rng = as_generator(seed, "frame", frame.id)
    owner = particles.owner
    prior = resample(particles, rng)
    prior = predict_frame(prior, frame, params, world_map, rng)
    log_w = log_frame_factors(
        prior.positions, frame, state, library, object_sets, frame_sets, params, core_ring_radius
    )
    if log_w is None:
        return ParticleSet(prior.positions, uniform_weights(prior.count), owner)

    peak = float(np.max(log_w))
    try:
        if not np.isfinite(peak):
            raise DegenerateBelief(owner)
        out = ParticleSet(prior.positions, np.exp(log_w - peak), owner).normalized()
    except DegenerateBelief:
        logger.warning("%s: all frame weights vanished, resetting to uniform", owner)
        _record(events, kind="degenerate", owner=owner)
        return _reset(prior, world_map, rng)

    trigger = None
    if effective_sample_size(out) < params.ess_threshold * out.count:
        trigger = "ess"
    elif params.support_check:
        probes = world_map.sample_free(rng, SUPPORT_PROBES)
        probe_w = log_frame_factors(
            probes, frame, state, library, object_sets, frame_sets, params, core_ring_radius
        )
        particle_mean = float(np.mean(np.exp(log_w - peak)))
        probe_mean = float(np.mean(np.exp(np.minimum(probe_w - peak, 700.0))))
        if particle_mean < probe_mean:
            trigger = "support"
    if trigger is not None and params.reinvigoration_fraction > 0.0:
        out = reinvigorate(out, world_map, params.reinvigoration_fraction, rng)
        logger.debug("%s: reinvigorated (%s)", owner, trigger)
        _record(events, kind="reinvigorate", owner=owner, trigger=trigger)
    return out


def update_frame_filter(
    frame_sets: Mapping[str, ParticleSet],
    object_sets: Mapping[str, ParticleSet],
    state: RobotState,
    library: FrameLibrary,
    params: PotentialParams,
    seed: int,
    world_map: WorldMap,
    step: int = 0,
    core_ring_radius: float = 0.0,
    events: Optional[List[dict]] = None,
) -> Dict[str, ParticleSet]:
    """
    One synchronous update of every tracked frame. Each frame draws from its own
    stream ``(seed, "frames", frame id, step)``, so the result does not depend on
    iteration order.
    """
    previous = dict(frame_sets)
    updated: Dict[str, ParticleSet] = {}
    for frame_id in sorted(previous):
        frame = library[frame_id]
        updated[frame_id] = update_frame(
            previous[frame_id],
            frame,
            state,
            library,
            object_sets,
            previous,
            params,
            world_map,
            make_rng(seed, "frames", frame_id, step),
            core_ring_radius=core_ring_radius,
            events=events,
        )
    return updated
