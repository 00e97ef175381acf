"""Unit tests for framemap.planner.executor."""
from dataclasses import replace

import pytest

from framemap.core.exceptions import ConfigurationError
from framemap.core.trace import TraceWriter, read_trace
from framemap.data import scenario_path
from framemap.frames.models import FrameInstance
from framemap.inference.belief import BeliefState
from framemap.planner.executor import ExecutionTrace, PlannerSettings, Status, execute_frame
from framemap.world.models import WorldSettings
from framemap.world.scenario import parse_scenario
from framemap.world.simulator import World


def _run(world, library, frame_id, budget=None, settings=None, writer=None, particles=200):
    task = FrameInstance(frame_id)
    beliefs = BeliefState(
        world.map, library.bind(task), [frame_id], sensor=world.sensor, seed=world.seed, particles=particles
    )
    return execute_frame(task, world, beliefs, library, settings=settings, budget=budget, writer=writer)


# ---------------------------------------------------------------------------
# PlannerSettings
# ---------------------------------------------------------------------------

def test_settings_defaults():
    s = PlannerSettings()
    assert (s.budget, s.k_max, s.max_attempts) == (400, 3, 3)
    assert s.view_fraction == 0.8


@pytest.mark.parametrize(
    "changes",
    [
        {"budget": 0},
        {"k_max": 0},
        {"confidence_mass": 0.0},
        {"confidence_mass": 1.5},
        {"view_fraction": 0.0},
        {"confidence_radius": -1.0},
        {"covariance_floor": 0.0},
        {"stall_limit": -1},
    ],
)
def test_settings_validation(changes):
    with pytest.raises(ConfigurationError):
        replace(PlannerSettings(), **changes)


def test_settings_from_config():
    s = PlannerSettings.from_config({"planner": {"budget": 50, "k_max": 2, "view_fraction": 0.5}})
    assert (s.budget, s.k_max, s.view_fraction) == (50, 2, 0.5)
    assert s.max_attempts == PlannerSettings().max_attempts
    assert PlannerSettings.from_config({}) == PlannerSettings()


# ---------------------------------------------------------------------------
# ExecutionTrace
# ---------------------------------------------------------------------------

def test_trace_timesteps_must_increase():
    trace = ExecutionTrace("stir_cup")
    trace.add({"kind": "step", "t": 0})
    trace.add({"kind": "step", "t": 1})
    with pytest.raises(ValueError):
        trace.add({"kind": "step", "t": 1})


def test_trace_finishes_once():
    trace = ExecutionTrace("stir_cup")
    trace.add({"kind": "step", "t": 0})
    result = trace.finish(Status.TIMEOUT, "budget")
    assert result["status"] == "timeout"
    assert result["ordering_safe"] is True
    with pytest.raises(RuntimeError):
        trace.finish(Status.SUCCESS)
    with pytest.raises(RuntimeError):
        trace.add({"kind": "step", "t": 5})


def test_trace_metrics():
    trace = ExecutionTrace("grasp_cup", utterance="grab the cup", steps=12, path_length=3.5)
    trace.finish(Status.SUCCESS)
    metrics = trace.metrics()
    assert "kind" not in metrics
    assert metrics["success"] is True
    assert metrics["steps"] == 12
    assert metrics["task"] == "grasp_cup"


# ---------------------------------------------------------------------------
# execute_frame
# ---------------------------------------------------------------------------

def test_stir_cup_runs_its_precondition_first(apartment_world, household_library):
    trace = _run(apartment_world, household_library, "stir_cup")
    assert trace.status is Status.SUCCESS, trace.reason
    assert trace.frames_executed == ["grasp_spoon", "stir_cup"]
    assert trace.ordering_violations == []
    assert ("cup", "stirred") in apartment_world.state.flags
    assert trace.steps <= PlannerSettings().budget
    assert [r["t"] for r in trace.records] == list(range(len(trace.records)))


def test_look_at_uses_no_manipulation(studio_world, household_library):
    trace = _run(studio_world, household_library, "look_at_apple")
    assert trace.success, trace.reason
    assert trace.manipulation_actions == 0
    assert trace.frames_executed == ["look_at_apple"]


def test_absent_object_times_out(household_library):
    text = scenario_path("studio_absent.scn").read_text(encoding="utf-8")
    world = World(parse_scenario(text), seed=7)
    trace = _run(world, household_library, "grasp_apple", budget=25)
    assert trace.status is Status.TIMEOUT
    assert trace.steps == 25
    assert trace.frames_executed == []
    assert trace.records[-1]["t"] == 25


def test_already_satisfied_task(apartment_world, household_library):
    apartment_world.set_holding("spoon")
    trace = _run(apartment_world, household_library, "grasp_spoon")
    assert trace.success
    assert trace.steps == 0
    assert len(trace.records) == 1
    assert trace.records[0]["phase"] == "start"


def test_failing_primitive_gives_up(studio_text, household_library):
    world = World(parse_scenario(studio_text), seed=7, settings=WorldSettings(primitive_success=(("pick", 0.0),)))
    trace = _run(world, household_library, "grasp_cup", settings=PlannerSettings(max_attempts=2))
    assert trace.status is Status.FAILURE
    assert "failed 2 times" in trace.reason
    assert world.state.gripper is None


def test_trace_is_streamed(tmp_path, apartment_world, household_library):
    path = tmp_path / "trace.jsonl"
    with TraceWriter(path, meta={"seed": 7}) as writer:
        trace = _run(apartment_world, household_library, "grasp_spoon", writer=writer)
    header, records = read_trace(path)
    assert header["seed"] == 7
    assert len(records) == len(trace.records) + 1
    assert records[-1]["kind"] == "result"
    assert records[-1]["status"] == trace.status.value
    step = records[1]
    assert {"robot", "truth", "observation", "events", "beliefs"} <= set(step)
