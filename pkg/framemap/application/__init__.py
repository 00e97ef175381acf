"""Runs, suites, metrics and rendering on top of the framemap engine."""
from .experiments import (
    RunConfig,
    RunResult,
    TrialSpec,
    load_suite,
    prepare_run,
    run_experiment_suite,
    run_scenario,
    run_trial,
)
from .metrics import mass_by_room_table, mass_near_truth, summarize_suite

__all__ = [
    "RunConfig",
    "RunResult",
    "TrialSpec",
    "load_suite",
    "mass_by_room_table",
    "mass_near_truth",
    "prepare_run",
    "run_experiment_suite",
    "run_scenario",
    "run_trial",
    "summarize_suite",
]
