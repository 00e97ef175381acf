"""
Factor potentials of the frame model.

measurement: frame location vs. the particle set of a related object
context:     frame location vs. the particle set of a precondition frame
prediction:  temporal permanence of a frame (see frame_filter.predict_frame)

Factors are isotropic Gaussians summed over the neighbour's weighted particles and
scaled by the relation belief. Everything is evaluated in log space so products over
many neighbours cannot underflow.
"""
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from framemap.core.exceptions import ConfigurationError
from framemap.frames.models import ContextRole, RelationDistribution, Role
from framemap.world.geometry import as_point, as_points

from .particles import ParticleSet

_CHUNK = 2048


@dataclass(frozen=True)
class PotentialParams:
    """Scales of the potentials and the reinvigoration heuristics."""

    sigma_m: float = 0.5
    sigma_c: float = 0.5
    sigma_p_movable: float = 0.05
    reinvigoration_fraction: float = 0.05
    ess_threshold: float = 0.5
    epsilon_floor: float = 1e-6
    object_roughening: float = 0.05
    detection_injection: float = 0.5
    support_check: bool = True

    def __post_init__(self) -> None:
        for name in ("sigma_m", "sigma_c", "sigma_p_movable"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError("inference.%s must be > 0" % name)
        for name in ("reinvigoration_fraction", "ess_threshold", "detection_injection"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError("inference.%s must be in [0, 1]" % name)
        if self.epsilon_floor < 0.0 or self.object_roughening < 0.0:
            raise ConfigurationError("inference.epsilon_floor and object_roughening must be >= 0")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "PotentialParams":
        s = cfg.get("inference", {})
        d = cls()
        return cls(
            sigma_m=float(s.get("sigma_m", d.sigma_m)),
            sigma_c=float(s.get("sigma_c", d.sigma_c)),
            sigma_p_movable=float(s.get("sigma_p_movable", d.sigma_p_movable)),
            reinvigoration_fraction=float(s.get("reinvigoration_fraction", d.reinvigoration_fraction)),
            ess_threshold=float(s.get("ess_threshold", d.ess_threshold)),
            epsilon_floor=float(s.get("epsilon_floor", d.epsilon_floor)),
            object_roughening=float(s.get("object_roughening", d.object_roughening)),
            detection_injection=float(s.get("detection_injection", d.detection_injection)),
            support_check=bool(s.get("support_check", d.support_check)),
        )


def gaussian_density(distance, sigma: float):
    """Isotropic bivariate normal density at the given distance from the mean."""
    d = np.asarray(distance, dtype=np.float64)
    return np.exp(-0.5 * (d / sigma) ** 2) / (2.0 * math.pi * sigma ** 2)


def log_mixture_density(points, centers, weights, sigma: float, ring_radius: float = 0.0) -> np.ndarray:
    """
    log sum_s w_s K(|p - c_s|) for every point p.

    K is the isotropic Gaussian of scale sigma, or, with ring_radius > 0, a ring
    kernel: a radial Gaussian around ring_radius normalised over the plane.
    Zero-weight centres contribute nothing; an empty or all-zero set gives -inf.
    """
    pts = as_points(points)
    c = as_points(centers)
    w = np.asarray(weights, dtype=np.float64)
    keep = w > 0.0
    c, w = c[keep], w[keep]
    out = np.full(len(pts), -np.inf)
    if len(c) == 0 or len(pts) == 0:
        return out
    if ring_radius > 0.0:
        log_norm = -math.log(2.0 * math.pi * ring_radius * math.sqrt(2.0 * math.pi) * sigma)
    else:
        log_norm = -math.log(2.0 * math.pi * sigma ** 2)
    for start in range(0, len(pts), _CHUNK):
        d = cdist(pts[start:start + _CHUNK], c)
        if ring_radius > 0.0:
            d = d - ring_radius
        out[start:start + _CHUNK] = logsumexp(-0.5 * (d / sigma) ** 2, b=w, axis=1) + log_norm
    return out


def _log_coefficient(mass: float) -> float:
    return math.log(mass) if mass > 0.0 else -np.inf


def log_measurement_factors(
    frame_positions,
    object_set: ParticleSet,
    rel: RelationDistribution,
    params: PotentialParams,
    core_ring_radius: float = 0.0,
) -> np.ndarray:
    """
    Log measurement factor for every frame position.

    The Core term uses a ring kernel of radius core_ring_radius when it is positive
    (frames over robot interaction poses); Disjoint contributes nothing.
    """
    pts = as_points(frame_positions)
    total = np.full(len(pts), -np.inf)
    for role, ring in ((Role.CORE, core_ring_radius), (Role.OTHER, 0.0)):
        mass = rel.mass(role)
        if mass <= 0.0:
            continue
        term = _log_coefficient(mass) + log_mixture_density(
            pts, object_set.positions, object_set.weights, params.sigma_m, ring_radius=ring
        )
        total = np.logaddexp(total, term)
    return total


def log_context_factors(
    frame_positions,
    precondition_set: ParticleSet,
    rel: RelationDistribution,
    params: PotentialParams,
) -> np.ndarray:
    """Log context factor for every frame position; Disjoint contributes nothing."""
    pts = as_points(frame_positions)
    mass = rel.mass(ContextRole.PRECONDITION)
    if mass <= 0.0:
        return np.full(len(pts), -np.inf)
    return _log_coefficient(mass) + log_mixture_density(
        pts, precondition_set.positions, precondition_set.weights, params.sigma_c
    )


def measurement_factor(frame_particle, object_set: ParticleSet, rel: RelationDistribution, params: PotentialParams) -> float:
    """
    sum over {core, other} of B(r) * sum_s alpha_s N(f; o_s, sigma_m^2 I).

    Example::

        measurement_factor((0, 0), point_set_at_origin, core_belief, PotentialParams())  # 0.63662
    """
    p = as_point(frame_particle)[None, :]
    return float(np.exp(log_measurement_factors(p, object_set, rel, params)[0]))


def context_factor(frame_particle, precondition_set: ParticleSet, rel: RelationDistribution, params: PotentialParams) -> float:
    """B(precondition) * sum_s alpha_s N(f; f_s, sigma_c^2 I)."""
    p = as_point(frame_particle)[None, :]
    return float(np.exp(log_context_factors(p, precondition_set, rel, params)[0]))
