"""Precondition chaining, goal selection and the search-and-execute loop."""
from .chain import plan_precondition_chain, verify_ordering
from .executor import ExecutionTrace, FrameExecutor, PlannerSettings, Status, execute_frame, step_record
from .goals import select_navigation_goal, viewpoint_for
from .mixture import GaussianMixture, MixtureComponent, fit_mixture

__all__ = [
    "ExecutionTrace",
    "FrameExecutor",
    "GaussianMixture",
    "MixtureComponent",
    "PlannerSettings",
    "Status",
    "execute_frame",
    "fit_mixture",
    "plan_precondition_chain",
    "select_navigation_goal",
    "step_record",
    "verify_ordering",
    "viewpoint_for",
]
