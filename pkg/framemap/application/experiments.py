"""
Seeded runs and experiment suites.

A run builds a world and a belief state from a RunConfig and drives them in one
of three modes:

- ``fixed``: the robot stays at its scenario pose for ``iterations`` belief updates
  (conditioning experiments);
- ``tour``: the robot drives the scripted waypoint tour, scanning at each stop
  (convergence experiments);
- ``task``: the frame executor searches for and executes the commanded frame.

Every run writes ``trace.jsonl`` and ``metrics.json`` into its output directory.
All inputs are validated before anything is written.
"""
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from framemap.core.config import load_config, merge_overrides
from framemap.core.exceptions import (
    AmbiguousEvocation,
    ConfigurationError,
    FrameMapError,
    NoFrameEvoked,
    Unreachable,
)
from framemap.core.logger import get_logger, get_trial_logger
from framemap.core.parallel import ParallelExecutor
from framemap.core.rng import check_seed, derive_seed
from framemap.core.trace import TraceWriter, write_json
from framemap.data import DATA_DIR, frames_path
from framemap.frames.commands import parse_command
from framemap.frames.dsl import parse_frame_library, serialize_frame_library
from framemap.frames.models import FrameInstance, FrameLibrary, Pose
from framemap.inference.belief import BeliefState
from framemap.inference.potentials import PotentialParams
from framemap.planner.executor import FrameExecutor, PlannerSettings, step_record
from framemap.world.models import SensorModel, WorldSettings
from framemap.world.scenario import parse_scenario, serialize_scenario
from framemap.world.simulator import World

from .metrics import format_summary, mass_by_room_table, mass_near_truth, summarize_suite

logger = get_logger("application.experiments")

MODES = ("task", "fixed", "tour")
STATUS_COMPLETED = "completed"
TRACE_FILE = "trace.jsonl"
METRICS_FILE = "metrics.json"
REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.txt"


def resolve_data_path(value: str | Path, kind: str, suffix: str) -> Path:
    """
    A user path, or the name of a packaged file (``apartment`` ->
    ``framemap/data/scenarios/apartment.scn``).

    Raises:
        ConfigurationError: Neither exists.
    """
    p = Path(value)
    if p.is_file():
        return p
    for candidate in (DATA_DIR / kind / p.name, DATA_DIR / kind / (p.name + suffix)):
        if candidate.is_file():
            return candidate
    raise ConfigurationError("%s not found: %s" % (kind.rstrip("s"), value))


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """
    One seeded run. Unset optional fields fall back to the merged YAML config
    (``inference.particles``, ``run.iterations``, ``planner.budget``, ...).

    ``holding``: None keeps the scenario's gripper; ``"none"`` empties it; any
    other value puts that object class in the gripper.
    """

    scenario: str
    task: str
    library: str = str(frames_path())
    seed: int = 0
    mode: str = "task"
    holding: Optional[str] = None
    particles: Optional[int] = None
    iterations: Optional[int] = None
    budget: Optional[int] = None
    output_dir: Optional[str] = None
    render: Optional[bool] = None
    trace_particles: Optional[bool] = None
    overrides: Mapping[str, Any] = field(default_factory=dict)


@dataclass
class PreparedRun:
    """A validated RunConfig with every input parsed."""

    config: RunConfig
    settings: dict
    scenario_text: str
    library: FrameLibrary
    instance: FrameInstance
    particles: int
    iterations: int
    budget: int
    output_dir: Path
    render: bool
    trace_particles: bool
    params: PotentialParams
    sensor: SensorModel
    world_settings: WorldSettings
    planner: PlannerSettings


@dataclass
class RunResult:
    status: str
    metrics: dict
    output_dir: Path

    @property
    def ok(self) -> bool:
        return self.status in ("success", STATUS_COMPLETED)


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError("cannot read %s %s: %s" % (what, path, e)) from None


def _resolve_task(task: str, library: FrameLibrary) -> FrameInstance:
    """A frame id names the frame directly; anything else is parsed as a command."""
    text = task.strip()
    if text in library:
        return FrameInstance(frame_id=text, utterance=text)
    try:
        return parse_command(text, library)
    except (NoFrameEvoked, AmbiguousEvocation) as e:
        raise ConfigurationError(str(e)) from None


def prepare_run(config: RunConfig, base: Optional[dict] = None) -> PreparedRun:
    """
    Validate config and parse its inputs. Nothing is written.

    Raises:
        ConfigurationError: Missing paths, bad counts, bad seed or mode, an
            unresolvable task.
        DefinitionSyntaxError, FrameValidationError, GeometryError: The frame
            library or scenario does not parse.
    """
    settings = merge_overrides(base if base is not None else load_config(), dict(config.overrides))
    run = settings.get("run", {})
    if config.mode not in MODES:
        raise ConfigurationError("mode must be one of %s, got %r" % ("/".join(MODES), config.mode))
    try:
        check_seed(config.seed)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e)) from None
    scenario_path = resolve_data_path(config.scenario, "scenarios", ".scn")
    library_path = resolve_data_path(config.library, "frames", ".frames")

    particles = int(config.particles if config.particles is not None else settings["inference"]["particles"])
    iterations = int(config.iterations if config.iterations is not None else run.get("iterations", 20))
    budget = int(config.budget if config.budget is not None else settings["planner"]["budget"])
    if particles < 1:
        raise ConfigurationError("particles must be >= 1, got %d" % particles)
    if iterations < 1 or budget < 1:
        raise ConfigurationError("iterations and budget must be >= 1")

    scenario_text = _read_text(scenario_path, "scenario")
    scenario = parse_scenario(scenario_text)
    library = parse_frame_library(_read_text(library_path, "frame library"))
    instance = _resolve_task(config.task, library)
    holding = config.holding
    if holding not in (None, "none") and scenario.object_spec(holding) is None:
        raise ConfigurationError("holding: scenario has no object '%s'" % holding)

    output_dir = Path(config.output_dir or run.get("output_dir") or "framemap_out")
    return PreparedRun(
        config=config,
        settings=settings,
        scenario_text=scenario_text,
        library=library,
        instance=instance,
        particles=particles,
        iterations=iterations,
        budget=budget,
        output_dir=output_dir,
        render=bool(config.render if config.render is not None else run.get("render", False)),
        trace_particles=bool(
            config.trace_particles if config.trace_particles is not None else run.get("trace_particles", True)
        ),
        params=PotentialParams.from_config(settings),
        sensor=SensorModel.from_config(settings),
        world_settings=WorldSettings.from_config(settings),
        planner=replace(PlannerSettings.from_config(settings), budget=budget),
    )


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------


def build_world(prepared: PreparedRun) -> World:
    world = World(parse_scenario(prepared.scenario_text), prepared.config.seed, prepared.sensor, prepared.world_settings)
    holding = prepared.config.holding
    if holding == "none":
        world.set_holding(None)
    elif holding is not None:
        world.set_holding(holding)
    return world


def build_beliefs(prepared: PreparedRun, world: World) -> BeliefState:
    library = prepared.library.bind(prepared.instance)
    return BeliefState(
        world.map,
        library,
        [prepared.instance.frame_id],
        prepared.params,
        world.sensor,
        seed=derive_seed(prepared.config.seed, "beliefs"),
        particles=prepared.particles,
        core_ring_radius=world.settings.reach_radius if world.pose_level else 0.0,
    )


def trace_meta(prepared: PreparedRun, world: World) -> dict:
    """Header fields of a run trace. Holds documents, never file paths."""
    return {
        "mode": prepared.config.mode,
        "seed": prepared.config.seed,
        "task": prepared.instance.utterance,
        "frame": prepared.instance.frame_id,
        "bindings": [list(b) for b in prepared.instance.bindings],
        "holding": world.state.gripper,
        "particles": prepared.particles,
        "scenario": serialize_scenario(world.scenario),
        "library": serialize_frame_library(prepared.library),
    }


def _run_fixed(world: World, beliefs: BeliefState, writer: TraceWriter, prepared: PreparedRun) -> int:
    for t in range(prepared.iterations):
        observation = world.observe()
        events = beliefs.update(observation, world.state)
        record = step_record(t, world, beliefs, observation, events, prepared.trace_particles)
        record["phase"] = "fixed"
        writer.write(record)
    return prepared.iterations


def _scan_turns(fov: float) -> int:
    return max(0, math.ceil(2.0 * math.pi / fov) - 1)


def _run_tour(world: World, beliefs: BeliefState, writer: TraceWriter, prepared: PreparedRun) -> int:
    """Drive every tour waypoint in order and scan a full turn at each stop."""
    t = 0

    def record(observation, phase: str, waypoint: int) -> None:
        nonlocal t
        events = beliefs.update(observation, world.state)
        rec = step_record(t, world, beliefs, observation, events, prepared.trace_particles)
        rec.update(phase=phase, waypoint=waypoint)
        writer.write(rec)
        t += 1

    record(world.observe(), "start", -1)
    turns = _scan_turns(world.sensor.fov)
    for k, (x, y) in enumerate(world.tour_waypoints()):
        if t >= prepared.budget:
            break
        try:
            nav = world.step_navigate(Pose(x, y, world.state.pose.heading), max_steps=prepared.budget - t)
        except Unreachable as e:
            logger.warning("Tour waypoint %d (%.2f, %.2f) skipped: %s", k, x, y, e)
            continue
        for observation in nav.observations:
            record(observation, "tour", k)
        if not nav.reached:
            break
        for _ in range(turns):
            if t >= prepared.budget:
                break
            record(world.rotate(world.sensor.fov), "scan", k)
    return t


def _belief_metrics(beliefs: BeliefState, world: World) -> dict:
    return {
        "mass_by_room": mass_by_room_table(beliefs),
        "mass_near_truth": mass_near_truth(beliefs, world),
    }


def execute_run(prepared: PreparedRun) -> RunResult:
    """Run a prepared config and write its trace and metrics."""
    config = prepared.config
    world = build_world(prepared)
    beliefs = build_beliefs(prepared, world)
    out = prepared.output_dir
    out.mkdir(parents=True, exist_ok=True)
    metrics: Dict[str, Any] = {
        "mode": config.mode,
        "seed": config.seed,
        "task": prepared.instance.utterance,
        "frame": prepared.instance.frame_id,
        "particles": prepared.particles,
    }
    with TraceWriter(out / TRACE_FILE, meta=trace_meta(prepared, world)) as writer:
        if config.mode == "task":
            executor = FrameExecutor(
                world,
                beliefs,
                prepared.library,
                prepared.planner,
                writer=writer,
                trace_particles=prepared.trace_particles,
                seed=config.seed,
            )
            trace = executor.run(prepared.instance, budget=prepared.budget)
            metrics.update(trace.metrics())
            status = trace.status.value
        else:
            steps = (_run_fixed if config.mode == "fixed" else _run_tour)(world, beliefs, writer, prepared)
            status = STATUS_COMPLETED
            metrics.update(status=status, steps=steps, path_length=world.distance_travelled)
    metrics.update(_belief_metrics(beliefs, world))
    write_json(out / METRICS_FILE, metrics)
    if prepared.render:
        from .render import render_trace

        render_trace(out / TRACE_FILE, out / "frames")
    logger.info("Run %s (%s, seed %d) finished: %s", prepared.instance.frame_id, config.mode, config.seed, status)
    return RunResult(status, metrics, out)


def run_scenario(config: RunConfig, base: Optional[dict] = None) -> RunResult:
    """
    Validate config, then run it. Nothing is written when validation fails.

    Example::

        result = run_scenario(RunConfig("apartment", "stir_cup", seed=3, mode="fixed", output_dir="out/a"))
        result.metrics["mass_by_room"]["frames"]["stir_cup"]
    """
    return execute_run(prepare_run(config, base))


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialSpec:
    """One suite trial; carries the merged settings so it can run in a worker process."""

    group: str
    index: int
    task: str
    seed: int
    scenario_text: str
    library_text: str
    particles: int
    budget: int
    settings: Mapping[str, Any]

    @property
    def name(self) -> str:
        return "%s/%03d" % (self.group, self.index)


@dataclass(frozen=True)
class Suite:
    name: str
    trials: Tuple[TrialSpec, ...]


def _suite_path(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def load_suite(path: str | Path, settings: Optional[dict] = None) -> Suite:
    """
    Expand a suite document into trial specs. Trial i of a group runs
    ``tasks[i % len(tasks)]`` with seed ``seed_start + i``.

    Raises:
        ConfigurationError: Unreadable or malformed suite, missing files.
    """
    path = resolve_data_path(path, "suites", ".yaml")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError("cannot load suite %s: %s" % (path, e)) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("groups"), dict) or not doc["groups"]:
        raise ConfigurationError("suite %s has no groups" % path)
    settings = settings if settings is not None else load_config()
    base = path.parent
    defaults = doc.get("defaults") or {}
    library_file = _suite_path(base, doc.get("library") or str(frames_path()))
    library_text = _read_text(library_file, "frame library")
    library = parse_frame_library(library_text)

    trials: List[TrialSpec] = []
    for group, raw in doc["groups"].items():
        spec = dict(defaults)
        spec.update(raw or {})
        tasks = spec.get("tasks") or []
        if not tasks:
            raise ConfigurationError("suite group '%s' has no tasks" % group)
        for task in tasks:
            _resolve_task(task, library)
        if "scenario" not in spec:
            raise ConfigurationError("suite group '%s' names no scenario" % group)
        scenario_text = _read_text(_suite_path(base, spec["scenario"]), "scenario")
        parse_scenario(scenario_text)
        count = int(spec.get("trials", 1))
        particles = int(spec.get("particles", settings["inference"]["particles"]))
        budget = int(spec.get("budget", settings["planner"]["budget"]))
        if count < 1 or particles < 1 or budget < 1:
            raise ConfigurationError("suite group '%s': trials, particles and budget must be >= 1" % group)
        seed_start = check_seed(int(spec.get("seed_start", 0)))
        for i in range(count):
            trials.append(
                TrialSpec(
                    group=str(group),
                    index=i,
                    task=tasks[i % len(tasks)],
                    seed=seed_start + i,
                    scenario_text=scenario_text,
                    library_text=library_text,
                    particles=particles,
                    budget=budget,
                    settings=settings,
                )
            )
    return Suite(str(doc.get("name") or path.stem), tuple(trials))


def run_trial(trial: TrialSpec) -> dict:
    """
    Run one suite trial in memory and return its report row. Errors are
    recorded as status ``error``; they never propagate.
    """
    log = get_trial_logger(logger, trial.name)
    row = {
        "group": trial.group,
        "trial": trial.index,
        "seed": trial.seed,
        "task": trial.task,
    }
    try:
        library = parse_frame_library(trial.library_text)
        instance = _resolve_task(trial.task, library)
        settings = dict(trial.settings)
        world = World(
            parse_scenario(trial.scenario_text),
            trial.seed,
            SensorModel.from_config(settings),
            WorldSettings.from_config(settings),
        )
        beliefs = BeliefState(
            world.map,
            library.bind(instance),
            [instance.frame_id],
            PotentialParams.from_config(settings),
            world.sensor,
            seed=derive_seed(trial.seed, "beliefs"),
            particles=trial.particles,
            core_ring_radius=world.settings.reach_radius if world.pose_level else 0.0,
        )
        planner = replace(PlannerSettings.from_config(settings), budget=trial.budget)
        trace = FrameExecutor(world, beliefs, library, planner, seed=trial.seed).run(instance, budget=trial.budget)
        result = trace.metrics()
        result.pop("task")
        row.update(frame=instance.frame_id, **result)
    except FrameMapError as e:
        log.warning("Trial failed with %s: %s", type(e).__name__, e)
        row.update(_error_row(e))
    except Exception as e:
        log.exception("Trial crashed")
        row.update(_error_row(e))
    return row


def _error_row(exc: BaseException) -> dict:
    return {
        "frame": None,
        "status": "error",
        "reason": "%s: %s" % (type(exc).__name__, exc),
        "success": False,
        "steps": 0,
        "path_length": 0.0,
        "frames_executed": [],
        "manipulation_actions": 0,
        "ordering_safe": True,
    }


def run_experiment_suite(
    suite_path: str | Path,
    output_dir: Optional[str | Path] = None,
    workers: Optional[int] = None,
    settings: Optional[dict] = None,
    groups: Optional[List[str]] = None,
    progress: bool = True,
) -> dict:
    """
    Run every trial of a suite and write ``report.json`` and ``summary.txt``.
    Rows are in suite order regardless of scheduling, so reruns are byte-identical.
    """
    settings = settings if settings is not None else load_config()
    suite = load_suite(suite_path, settings)
    trials = list(suite.trials)
    if groups:
        unknown = sorted(set(groups) - {t.group for t in trials})
        if unknown:
            raise ConfigurationError("suite has no group(s): %s" % ", ".join(unknown))
        trials = [t for t in trials if t.group in groups]
    if workers is None:
        workers = settings.get("run", {}).get("workers")
    out = Path(output_dir or settings.get("run", {}).get("output_dir") or "framemap_out")
    logger.info("Suite %s: %d trials", suite.name, len(trials))
    rows = ParallelExecutor.run_parallel(
        run_trial,
        trials,
        max_workers=workers,
        use_processes=True,
        progress=suite.name if progress else None,
    )
    report = summarize_suite(suite.name, rows)
    write_json(out / REPORT_FILE, report)
    (out / SUMMARY_FILE).write_text(format_summary(report), encoding="utf-8")
    for group, s in report["groups"].items():
        logger.info("%s: %d/%d successful", group, s["successes"], s["trials"])
    return report

