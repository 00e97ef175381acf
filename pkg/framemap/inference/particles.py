"""
Weighted particle sets and the generic operations on them: initialisation,
systematic resampling, effective sample size and reinvigoration.
"""
import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from framemap.core.exceptions import DegenerateBelief
from framemap.core.rng import as_generator
from framemap.world.geometry import as_point, as_points
from framemap.world.models import BACKGROUND, WorldMap

SeedLike = Union[int, np.random.Generator]

WEIGHT_TOLERANCE = 1e-9


@dataclass
class ParticleSet:
    """P weighted 2D positions belonging to one frame id or object class."""

    positions: np.ndarray
    weights: np.ndarray
    owner: str

    def __post_init__(self) -> None:
        self.positions = as_points(self.positions).astype(np.float64, copy=False)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(self.positions) != len(self.weights):
            raise ValueError(
                "%s: %d positions but %d weights" % (self.owner, len(self.positions), len(self.weights))
            )

    @property
    def count(self) -> int:
        return len(self.weights)

    def copy(self) -> "ParticleSet":
        return ParticleSet(self.positions.copy(), self.weights.copy(), self.owner)

    def is_normalized(self) -> bool:
        return bool(np.all(self.weights >= 0.0)) and abs(float(self.weights.sum()) - 1.0) <= WEIGHT_TOLERANCE

    def normalized(self) -> "ParticleSet":
        """
        Copy with weights scaled to sum to one.

        Raises:
            DegenerateBelief: weights are all zero or not finite.
        """
        total = float(self.weights.sum())
        if not math.isfinite(total) or total <= 0.0 or not np.all(np.isfinite(self.weights)):
            raise DegenerateBelief(self.owner)
        return ParticleSet(self.positions, self.weights / total, self.owner)

    def mean(self) -> np.ndarray:
        return self.weights @ self.positions

    def mass_within(self, point, radius: float) -> float:
        d = np.linalg.norm(self.positions - as_point(point), axis=1)
        return float(self.weights[d <= radius].sum())

    def mean_within(self, point, radius: float) -> Optional[np.ndarray]:
        """Weighted mean of the particles within radius of point (None when none are)."""
        d = np.linalg.norm(self.positions - as_point(point), axis=1)
        mask = d <= radius
        w = self.weights[mask]
        if not mask.any() or w.sum() <= 0.0:
            return None
        return (w @ self.positions[mask]) / w.sum()

    def mass_by_room(self, world_map: WorldMap) -> Dict[str, float]:
        """Weight mass per room name (plus ``background``) in map room order."""
        idx = world_map.room_index(self.positions)
        out = {name: float(self.weights[idx == i].sum()) for i, name in enumerate(world_map.room_names)}
        out[BACKGROUND] = float(self.weights[idx < 0].sum())
        return out


def uniform_weights(count: int) -> np.ndarray:
    return np.full(count, 1.0 / count)


def init_uniform(world_map: WorldMap, owner: str, count: int, seed: SeedLike) -> ParticleSet:
    """count particles uniform over free space, equal weights (frame initialisation)."""
    if count < 1:
        raise ValueError("particle count must be >= 1, got %d" % count)
    rng = as_generator(seed, "init", owner)
    return ParticleSet(world_map.sample_free(rng, count), uniform_weights(count), owner)


def init_particles_from_prior(world_map: WorldMap, object_class: str, count: int, seed: SeedLike) -> ParticleSet:
    """
    Object initialisation from the class's room prior: each prior room receives its
    mass share of the particles, the remainder is uniform over free space.

    Raises:
        EmptyFreeSpace: A prior room (or the map) has no free space.
    """
    if count < 1:
        raise ValueError("particle count must be >= 1, got %d" % count)
    rng = as_generator(seed, "init", object_class)
    prior = world_map.prior_for(object_class)
    if not prior:
        return ParticleSet(world_map.sample_free(rng, count), uniform_weights(count), object_class)
    rooms = list(prior.items())
    masses = [m for _, m in rooms]
    masses.append(max(0.0, 1.0 - sum(masses)))
    counts = rng.multinomial(count, np.asarray(masses) / sum(masses))
    chunks = []
    for (room, _), n in zip(rooms, counts[:-1]):
        if n:
            chunks.append(world_map.sample_free(rng, int(n), region=world_map.room(room).rect))
    if counts[-1]:
        chunks.append(world_map.sample_free(rng, int(counts[-1])))
    positions = np.concatenate(chunks)
    return ParticleSet(positions, uniform_weights(count), object_class)


def effective_sample_size(particles: ParticleSet) -> float:
    """1 / sum(w^2) of the normalised weights."""
    w = particles.weights / particles.weights.sum()
    return float(1.0 / np.sum(np.square(w)))


def systematic_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Low-variance resampling: one uniform offset, P evenly spaced pointers."""
    n = len(weights)
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]
    positions = (np.arange(n) + rng.random()) / n
    idx = np.searchsorted(cumulative, positions, side="right")
    return np.minimum(idx, n - 1)


def resample(particles: ParticleSet, seed: SeedLike) -> ParticleSet:
    """Systematic resampling; output weights are uniform."""
    rng = as_generator(seed, "resample", particles.owner)
    idx = systematic_indices(particles.weights, rng)
    return ParticleSet(particles.positions[idx].copy(), uniform_weights(particles.count), particles.owner)


def lowest_weight_indices(weights: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n smallest weights; ties resolved by index."""
    return np.argsort(weights, kind="stable")[:n]


def reinvigorate(
    particles: ParticleSet,
    world_map: WorldMap,
    fraction: float,
    seed: SeedLike,
) -> ParticleSet:
    """
    Replace the ceil(fraction * P) lowest-weight particles with uniform free-space
    draws at weight 1/P, then renormalise.
    """
    n = min(particles.count, int(math.ceil(fraction * particles.count - 1e-12)))
    if n <= 0:
        return particles.copy()
    rng = as_generator(seed, "reinvigorate", particles.owner)
    out = particles.copy()
    idx = lowest_weight_indices(out.weights, n)
    out.positions[idx] = world_map.sample_free(rng, n)
    out.weights[idx] = 1.0 / particles.count
    return out.normalized()


def summarize(particles: ParticleSet, world_map: Optional[WorldMap] = None, include_particles: bool = False) -> dict:
    """Trace summary of a set: mean, ESS and optionally the full particle arrays."""
    out = {
        "owner": particles.owner,
        "count": particles.count,
        "mean": particles.mean(),
        "ess": effective_sample_size(particles),
    }
    if world_map is not None:
        out["mass_by_room"] = particles.mass_by_room(world_map)
    if include_particles:
        out["positions"] = particles.positions
        out["weights"] = particles.weights
    return out
