"""Unit tests for framemap.inference.frame_filter."""
from dataclasses import replace

import numpy as np
import pytest

from framemap.frames.models import RobotState
from framemap.inference.frame_filter import predict_frame, update_frame, update_frame_filter
from framemap.inference.particles import ParticleSet, init_uniform
from framemap.inference.potentials import PotentialParams
from framemap.world.geometry import Rect
from framemap.world.models import WorldMap

OPEN = WorldMap(bounds=Rect(0.0, 0.0, 10.0, 10.0))
EMPTY = RobotState()
HOLDING_SPOON = RobotState(gripper="spoon")


def _cluster(x, y, owner, n=20, spread=0.05, seed=0) -> ParticleSet:
    rng = np.random.default_rng(seed)
    pts = np.array([x, y]) + rng.normal(0.0, spread, size=(n, 2))
    return ParticleSet(pts, np.full(n, 1.0 / n), owner)


@pytest.fixture
def objects():
    return {"spoon": _cluster(2.0, 2.0, "spoon"), "cup": _cluster(8.0, 8.0, "cup", seed=1)}


def _stir_update(library, objects, state, seed=3, count=2000, **kwargs):
    frame = library["stir_cup"]
    start = init_uniform(OPEN, "stir_cup", count, seed)
    return update_frame(start, frame, state, library, objects, {}, PotentialParams(), OPEN, seed, **kwargs)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def test_static_prediction_is_identity(household_library, params):
    ps = init_uniform(OPEN, "goto_couch", 100, 1)
    out = predict_frame(ps, household_library["goto_couch"], params, OPEN, 2)
    np.testing.assert_array_equal(out.positions, ps.positions)
    np.testing.assert_array_equal(out.weights, ps.weights)


def test_movable_prediction_drifts_by_sigma(household_library, params):
    frame = household_library["grasp_spoon"]
    ps = ParticleSet(np.full((20000, 2), 5.0), np.full(20000, 1.0 / 20000), "grasp_spoon")
    out = predict_frame(ps, frame, params, OPEN, 7)
    step = np.linalg.norm(out.positions - ps.positions, axis=1)
    assert step.mean() == pytest.approx(0.05 * np.sqrt(np.pi / 2.0), rel=0.03)
    np.testing.assert_array_equal(out.weights, ps.weights)


def test_zero_sigma_prediction_is_identity(household_library, params):
    frame = replace(household_library["grasp_spoon"], movable_sigma=0.0)
    ps = init_uniform(OPEN, "grasp_spoon", 50, 1)
    np.testing.assert_array_equal(predict_frame(ps, frame, params, OPEN, 2).positions, ps.positions)


def test_prediction_stays_in_free_space(household_library, params):
    walled = WorldMap(bounds=Rect(0.0, 0.0, 10.0, 10.0), obstacles=(Rect(5.0, 0.0, 5.2, 10.0),))
    ps = ParticleSet(np.full((500, 2), [4.99, 5.0]), np.full(500, 1.0 / 500), "grasp_spoon")
    out = predict_frame(ps, household_library["grasp_spoon"], params, walled, 3)
    assert walled.free_mask(out.positions).all()


# ---------------------------------------------------------------------------
# Weighting
# ---------------------------------------------------------------------------

def test_empty_gripper_weights_both_objects(household_library, objects):
    out = _stir_update(household_library, objects, EMPTY)
    assert out.is_normalized()
    assert out.mass_within((5.0, 5.0), 1.5) > 0.8


def test_disjoint_object_drops_out(household_library, objects):
    out = _stir_update(household_library, objects, HOLDING_SPOON)
    assert out.mass_within((8.0, 8.0), 1.5) > 0.85
    assert out.mass_within((2.0, 2.0), 1.5) < 0.05


def test_no_neighbours_gives_uniform_weights(household_library):
    out = _stir_update(household_library, {}, EMPTY, count=300)
    np.testing.assert_allclose(out.weights, 1.0 / 300)


def test_context_factor_pulls_towards_the_precondition(household_library):
    frame = household_library["stir_cup"]
    start = init_uniform(OPEN, "stir_cup", 2000, 4)
    grasp = _cluster(2.0, 8.0, "grasp_spoon")
    out = update_frame(start, frame, EMPTY, household_library, {}, {"grasp_spoon": grasp},
                       PotentialParams(), OPEN, 4)
    assert out.mass_within((2.0, 8.0), 1.5) > 0.85


def test_ring_kernel_keeps_a_gap_around_the_core(household_library, objects):
    ring = _stir_update(household_library, objects, HOLDING_SPOON, core_ring_radius=0.8)
    plain = _stir_update(household_library, objects, HOLDING_SPOON)
    assert ring.mass_within((8.0, 8.0), 0.3) < 0.1
    assert plain.mass_within((8.0, 8.0), 0.3) > ring.mass_within((8.0, 8.0), 0.3)
    assert ring.mass_within((8.0, 8.0), 2.0) > 0.85


def test_vanished_weights_reset_the_frame(household_library, objects):
    dead = ParticleSet(objects["cup"].positions, np.zeros(20), "cup")
    events = []
    out = _stir_update(household_library, {"cup": dead}, HOLDING_SPOON, count=100, events=events)
    assert events == [{"kind": "degenerate", "owner": "stir_cup"}]
    np.testing.assert_allclose(out.weights, 0.01)


def test_update_is_seeded(household_library, objects):
    a = _stir_update(household_library, objects, EMPTY, seed=9, count=300)
    b = _stir_update(household_library, objects, EMPTY, seed=9, count=300)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.weights, b.weights)


# ---------------------------------------------------------------------------
# Synchronous update
# ---------------------------------------------------------------------------

def test_filter_does_not_depend_on_dict_order(household_library, objects, params):
    grasp = init_uniform(OPEN, "grasp_spoon", 200, 1)
    stir = init_uniform(OPEN, "stir_cup", 200, 2)
    forward = update_frame_filter({"grasp_spoon": grasp, "stir_cup": stir}, objects, EMPTY,
                                  household_library, params, 5, OPEN, step=3)
    backward = update_frame_filter({"stir_cup": stir, "grasp_spoon": grasp}, objects, EMPTY,
                                   household_library, params, 5, OPEN, step=3)
    for fid in ("grasp_spoon", "stir_cup"):
        np.testing.assert_array_equal(forward[fid].positions, backward[fid].positions)
        np.testing.assert_array_equal(forward[fid].weights, backward[fid].weights)


def test_each_step_draws_a_fresh_stream(household_library, objects, params):
    sets = {"grasp_spoon": init_uniform(OPEN, "grasp_spoon", 200, 1), "stir_cup": init_uniform(OPEN, "stir_cup", 200, 2)}
    first = update_frame_filter(sets, objects, EMPTY, household_library, params, 5, OPEN, step=0)
    second = update_frame_filter(sets, objects, EMPTY, household_library, params, 5, OPEN, step=1)
    assert set(first) == {"grasp_spoon", "stir_cup"}
    assert all(ps.is_normalized() for ps in first.values())
    assert not np.array_equal(first["grasp_spoon"].positions, second["grasp_spoon"].positions)
