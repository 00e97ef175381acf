"""
Object-location particle filter.

Each object class keeps a ParticleSet over its position. Detections of the class
reweight particles with a Gaussian around the detection; an observation without a
detection down-weights the particles the sensor could see by the miss rate.
"""
import math
from typing import List, Optional

import numpy as np

from framemap.core.exceptions import DegenerateBelief
from framemap.core.logger import get_logger
from framemap.core.rng import as_generator
from framemap.world.models import Observation, SensorModel, WorldMap
from framemap.world.sensor import visible_mask

from .particles import (
    ParticleSet,
    SeedLike,
    effective_sample_size,
    lowest_weight_indices,
    reinvigorate,
    resample,
    uniform_weights,
)
from .potentials import PotentialParams, gaussian_density

logger = get_logger("inference.objects")

_MIN_SIGMA = 1e-3
_EXPLAINED_SIGMAS = 3.0


def _record(events: Optional[List[dict]], **event) -> None:
    if events is not None:
        events.append(event)


def _free_draws(world_map: WorldMap, rng: np.random.Generator, center: np.ndarray, sigma: float, n: int) -> np.ndarray:
    """n draws of N(center, sigma^2 I) moved back onto center where they land outside free space."""
    pts = center + rng.normal(0.0, sigma, size=(n, 2))
    bad = ~world_map.free_mask(pts)
    pts[bad] = center
    return pts


def collapse_to(particles: ParticleSet, position) -> ParticleSet:
    """Every particle at position with uniform weights (object in the gripper)."""
    pos = np.broadcast_to(np.asarray(position, dtype=np.float64), particles.positions.shape).copy()
    return ParticleSet(pos, uniform_weights(particles.count), particles.owner)


def scatter_around(
    particles: ParticleSet, world_map: WorldMap, position, sigma: float, seed: SeedLike
) -> ParticleSet:
    """Particles redrawn around a known position (an object the robot just put down)."""
    rng = as_generator(seed, "scatter", particles.owner)
    pts = _free_draws(world_map, rng, np.asarray(position, dtype=np.float64), sigma, particles.count)
    return ParticleSet(pts, uniform_weights(particles.count), particles.owner)


def update_object_filter(
    object_set: ParticleSet,
    observation: Observation,
    world_map: WorldMap,
    sensor: Optional[SensorModel] = None,
    params: Optional[PotentialParams] = None,
    seed: SeedLike = 0,
    events: Optional[List[dict]] = None,
) -> ParticleSet:
    """
    One measurement update of an object's particle set.

    Positive update: weights times N(particle; detection, sigma_z^2 I) + epsilon
    for every detection of the class. Negative update: without a detection, weights
    of particles inside the observed region times the miss rate. A detection no
    particle explains first replaces the lowest-weight particles with draws around
    it. When the ESS drops below threshold the set is resampled, roughened and
    reinvigorated with uniform free-space draws.
    Events (injection, degenerate, resample, reinvigorate) are appended to ``events``.
    """
    sensor = sensor or SensorModel(range=observation.range, fov=observation.fov)
    params = params or PotentialParams()
    rng = as_generator(seed, "object", object_set.owner)
    out = object_set.copy()
    owner = out.owner
    sigma_z = max(sensor.noise, _MIN_SIGMA)
    detections = observation.of_class(owner)

    for det in detections:
        z = np.asarray(det.position, dtype=np.float64)
        nearest = float(np.min(np.linalg.norm(out.positions - z, axis=1)))
        if nearest > _EXPLAINED_SIGMAS * sigma_z and params.detection_injection > 0.0:
            n = min(out.count, int(math.ceil(params.detection_injection * out.count)))
            idx = lowest_weight_indices(out.weights, n)
            out.positions[idx] = _free_draws(world_map, rng, z, sigma_z, n)
            out.weights[idx] = out.weights.mean() if out.weights.sum() > 0.0 else 1.0 / out.count
            logger.debug("%s: injected %d particles around unexplained detection", owner, n)
            _record(events, kind="injection", owner=owner, count=n)
        likelihood = gaussian_density(np.linalg.norm(out.positions - z, axis=1), sigma_z)
        out.weights = out.weights * (likelihood + params.epsilon_floor)

    if not detections:
        seen = visible_mask(world_map, observation.viewpoint, out.positions, sensor)
        out.weights[seen] *= sensor.miss_rate

    try:
        out = out.normalized()
    except DegenerateBelief:
        logger.warning("%s: object belief degenerate, reinitialising uniformly", owner)
        _record(events, kind="degenerate", owner=owner)
        return ParticleSet(world_map.sample_free(rng, out.count), uniform_weights(out.count), owner)

    if effective_sample_size(out) < params.ess_threshold * out.count:
        out = resample(out, rng)
        if params.object_roughening > 0.0:
            jitter = rng.normal(0.0, params.object_roughening, size=out.positions.shape)
            moved = out.positions + jitter
            ok = world_map.free_mask(moved)
            out.positions[ok] = moved[ok]
        _record(events, kind="resample", owner=owner)
        if params.reinvigoration_fraction > 0.0:
            out = reinvigorate(out, world_map, params.reinvigoration_fraction, rng)
            logger.debug("%s: reinvigorated (ess)", owner)
            _record(
                events, kind="reinvigorate", owner=owner, trigger="ess",
                count=min(out.count, math.ceil(params.reinvigoration_fraction * out.count - 1e-12)),
            )
    return out
