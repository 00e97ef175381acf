"""Unit tests for framemap.inference.potentials."""
import math

import numpy as np
import pytest

from framemap.core.exceptions import ConfigurationError
from framemap.frames.models import ContextRole, RelationDistribution, Role
from framemap.inference.particles import ParticleSet
from framemap.inference.potentials import (
    PotentialParams,
    context_factor,
    gaussian_density,
    log_measurement_factors,
    log_mixture_density,
    measurement_factor,
)

PEAK = 1.0 / (2.0 * math.pi * 0.25)
CORE = RelationDistribution.point_mass(Role.CORE)
OTHER = RelationDistribution.point_mass(Role.OTHER)
DISJOINT = RelationDistribution.point_mass(Role.DISJOINT)
PRECONDITION = RelationDistribution.point_mass(ContextRole.PRECONDITION)


def _point(x=0.0, y=0.0, owner="spoon") -> ParticleSet:
    return ParticleSet(np.array([[x, y]]), np.array([1.0]), owner)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [{"sigma_m": 0.0}, {"sigma_c": -1.0}, {"ess_threshold": 1.5}, {"reinvigoration_fraction": -0.1},
     {"epsilon_floor": -1e-3}],
)
def test_params_validation(kwargs):
    with pytest.raises(ConfigurationError):
        PotentialParams(**kwargs)


def test_params_from_config_keeps_defaults():
    p = PotentialParams.from_config({"inference": {"sigma_m": 0.4, "support_check": False}})
    assert p.sigma_m == 0.4
    assert p.sigma_c == 0.5
    assert p.support_check is False


# ---------------------------------------------------------------------------
# Measurement factor
# ---------------------------------------------------------------------------

def test_gaussian_density_peak():
    assert gaussian_density(0.0, 0.5) == pytest.approx(PEAK)


def test_measurement_at_zero_offset(params):
    assert measurement_factor((0.0, 0.0), _point(), CORE, params) == pytest.approx(0.63662, abs=1e-5)
    assert measurement_factor((0.0, 0.0), _point(), OTHER, params) == pytest.approx(PEAK)


def test_measurement_disjoint_is_zero(params):
    assert measurement_factor((0.0, 0.0), _point(), DISJOINT, params) == 0.0


def test_measurement_is_linear_in_the_weights(params):
    ps = ParticleSet(np.array([[0.0, 0.0], [1000.0, 1000.0]]), np.array([0.5, 0.5]), "spoon")
    assert measurement_factor((0.0, 0.0), ps, CORE, params) == pytest.approx(0.5 * PEAK)


def test_measurement_mixed_belief(params):
    half = RelationDistribution.from_mapping({Role.CORE: 0.5, Role.DISJOINT: 0.5})
    assert measurement_factor((0.0, 0.0), _point(), half, params) == pytest.approx(0.5 * PEAK)


def test_measurement_decreases_with_distance(params):
    values = [measurement_factor((d, 0.0), _point(), CORE, params) for d in (0.0, 0.2, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_ring_kernel_peaks_at_the_radius(params):
    pts = np.array([[0.0, 0.0], [0.8, 0.0], [1.6, 0.0]])
    log_f = log_measurement_factors(pts, _point(), CORE, params, core_ring_radius=0.8)
    assert log_f[1] > log_f[0]
    assert log_f[1] > log_f[2]
    plain = log_measurement_factors(pts, _point(), OTHER, params, core_ring_radius=0.8)
    assert plain[0] > plain[1] > plain[2]


def test_ring_kernel_integrates_to_one():
    xs = np.arange(-5.0, 5.0, 0.02) + 0.01
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack((gx.ravel(), gy.ravel()))
    density = np.exp(log_mixture_density(pts, [[0.0, 0.0]], [1.0], 0.3, ring_radius=3.0))
    assert density.sum() * 0.02 ** 2 == pytest.approx(1.0, rel=0.02)


def test_mixture_ignores_zero_weights():
    out = log_mixture_density([[0.0, 0.0]], [[0.0, 0.0], [5.0, 5.0]], [0.0, 1.0], 0.5)
    expected = math.log(gaussian_density(math.hypot(5.0, 5.0), 0.5))
    assert out[0] == pytest.approx(expected)
    assert log_mixture_density([[0.0, 0.0]], [[1.0, 1.0]], [0.0], 0.5)[0] == -np.inf


def test_far_particles_do_not_underflow(params):
    log_f = log_measurement_factors([[0.0, 0.0]], _point(50.0, 0.0), CORE, params)
    assert np.isfinite(log_f[0])


# ---------------------------------------------------------------------------
# Context factor
# ---------------------------------------------------------------------------

def test_context_at_zero_offset(params):
    assert context_factor((1.0, 2.0), _point(1.0, 2.0, "grasp_spoon"), PRECONDITION, params) == pytest.approx(
        0.63662, abs=1e-5
    )


def test_context_disjoint_is_zero(params):
    rel = RelationDistribution.point_mass(ContextRole.DISJOINT)
    assert context_factor((0.0, 0.0), _point(owner="grasp_spoon"), rel, params) == 0.0


def test_context_of_a_uniform_set_is_flat(params):
    xs = np.arange(0.0, 20.0, 0.1) + 0.05
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack((gx.ravel(), gy.ravel()))
    uniform = ParticleSet(pts, np.full(len(pts), 1.0 / len(pts)), "grasp_spoon")
    for p in [(10.0, 10.0), (8.0, 12.5), (6.0, 6.0)]:
        assert context_factor(p, uniform, PRECONDITION, params) == pytest.approx(1.0 / 400.0, rel=0.01)
