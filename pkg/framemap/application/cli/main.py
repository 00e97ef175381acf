"""
CLI entry point.

Usage:
    framemap run apartment stir_cup --mode fixed --seed 3 -o out/a
    framemap suite household -o out/suite
    framemap render out/a/trace.jsonl --every 5
    framemap validate framemap/data/frames/household.frames my.scn

Exit codes: 0 success, 1 task failure or timeout, 2 configuration error.
Errors are reported as one JSON object on stderr.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from framemap.core.config import ENV_LOG_DIR, load_config, merge_overrides, parse_override
from framemap.core.exceptions import (
    ConfigurationError,
    DefinitionSyntaxError,
    FrameValidationError,
    GeometryError,
    TraceSchemaError,
)
from framemap.core.logger import set_log_file_for_run, setup_logging, write_crash_report
from framemap.data import frames_path

logger = logging.getLogger("framemap.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

_CONFIG_ERRORS = (ConfigurationError, DefinitionSyntaxError, FrameValidationError, GeometryError, TraceSchemaError)


def error_record(exc: BaseException, exit_code: int) -> dict:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code}
    if isinstance(exc, DefinitionSyntaxError):
        record.update(line=exc.line, column=exc.column)
    return record


def _report_error(exc: BaseException, exit_code: int) -> int:
    sys.stderr.write(json.dumps(error_record(exc, exit_code), sort_keys=True) + "\n")
    return exit_code


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", type=str, default=None,
                   help="YAML config merged over default.yaml and FRAMEMAP_CONFIG")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="Config override, e.g. inference.sigma_m=0.4 (repeatable)")
    p.add_argument("--log-level", type=str, default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                   help="Log level (default: INFO or FRAMEMAP_LOG_LEVEL)")
    p.add_argument("--log-dir", type=str, default=None,
                   help="Directory for framemap.log (default: FRAMEMAP_LOG_DIR or console only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framemap", description="framemap: semantic frame localization and execution")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run one seeded scenario")
    run.add_argument("scenario", type=str, help="Scenario file or packaged scenario name (apartment, studio, ...)")
    run.add_argument("task", type=str, help="Command utterance or frame id")
    run.add_argument("--library", "-l", type=str, default=str(frames_path()), help="Frame library file")
    run.add_argument("--seed", type=int, default=0, help="64-bit unsigned run seed")
    run.add_argument("--mode", type=str, choices=["task", "fixed", "tour"], default="task",
                     help="task: execute; fixed: belief updates at the start pose; tour: scripted waypoint tour")
    run.add_argument("--holding", type=str, default=None,
                     help="Object class in the gripper at start ('none' empties it)")
    run.add_argument("--particles", "-p", type=int, default=None, help="Particles per set (default: config)")
    run.add_argument("--iterations", type=int, default=None, help="Belief updates in fixed mode (default: config)")
    run.add_argument("--budget", type=int, default=None, help="Step budget (default: config)")
    run.add_argument("--output", "-o", type=str, default=None,
                     help="Output directory (default: FRAMEMAP_OUTPUT_DIR or run.output_dir)")
    run.add_argument("--render", action=argparse.BooleanOptionalAction, default=None,
                     help="Render belief snapshots after the run")
    run.add_argument("--trace-particles", action=argparse.BooleanOptionalAction, default=None,
                     help="Store full particle sets in the trace")
    _add_common(run)

    suite = subparsers.add_parser("suite", help="Run an experiment suite")
    suite.add_argument("suite", type=str, nargs="?", default="household", help="Suite file or packaged suite name")
    suite.add_argument("--output", "-o", type=str, default=None, help="Output directory for report.json")
    suite.add_argument("--workers", "-j", type=int, default=None,
                       help="Worker processes (default: FRAMEMAP_WORKERS or physical cores)")
    suite.add_argument("--group", "-g", dest="groups", action="append", default=None,
                       help="Run only this group (repeatable)")
    suite.add_argument("--no-progress", action="store_true", help="Hide the progress bar")
    _add_common(suite)

    render = subparsers.add_parser("render", help="Render a trace into PNG snapshots")
    render.add_argument("trace", type=str, help="trace.jsonl of a run")
    render.add_argument("--output", "-o", type=str, default=None, help="Image directory (default: <trace dir>/frames)")
    render.add_argument("--every", type=int, default=1, help="Render every k-th step")
    render.add_argument("--owner", dest="owners", action="append", default=None,
                        help="Frame id or object class to draw (repeatable; default: all frames)")
    _add_common(render)

    validate = subparsers.add_parser("validate", help="Parse-check frame libraries, scenarios and suites")
    validate.add_argument("files", nargs="+", help=".frames, .scn or suite .yaml files")
    _add_common(validate)
    return parser


def _settings(args) -> dict:
    cfg = load_config(override_path=args.config)
    for text in args.overrides:
        cfg = merge_overrides(cfg, parse_override(text))
    return cfg


def _cmd_run(args, settings: dict) -> int:
    from framemap.application.experiments import RunConfig, execute_run, prepare_run

    config = RunConfig(
        scenario=args.scenario,
        task=args.task,
        library=args.library,
        seed=args.seed,
        mode=args.mode,
        holding=args.holding,
        particles=args.particles,
        iterations=args.iterations,
        budget=args.budget,
        output_dir=args.output,
        render=args.render,
        trace_particles=args.trace_particles,
    )
    prepared = prepare_run(config, settings)
    set_log_file_for_run(prepared.output_dir)
    result = execute_run(prepared)
    sys.stdout.write(json.dumps({"status": result.status, "output_dir": str(result.output_dir)}) + "\n")
    return EXIT_OK if result.ok else EXIT_FAILURE


def _cmd_suite(args, settings: dict) -> int:
    from framemap.application.experiments import run_experiment_suite

    report = run_experiment_suite(
        args.suite,
        output_dir=args.output,
        workers=args.workers,
        settings=settings,
        groups=args.groups,
        progress=not args.no_progress,
    )
    for group, s in report["groups"].items():
        sys.stdout.write("%s: %d/%d (%.3f)\n" % (group, s["successes"], s["trials"], s["success_rate"]))
    return EXIT_OK


def _cmd_render(args, settings: dict) -> int:
    from framemap.application.render import render_trace

    trace = Path(args.trace)
    if not trace.is_file():
        raise ConfigurationError("trace not found: %s" % trace)
    if args.every < 1:
        raise ConfigurationError("--every must be >= 1")
    out = Path(args.output) if args.output else trace.parent / "frames"
    written = render_trace(trace, out, every=args.every, owners=args.owners)
    sys.stdout.write("%d image(s) in %s\n" % (len(written), out))
    return EXIT_OK


def validate_file(path: Path, settings: Optional[dict] = None) -> None:
    """
    Parse one definition file by suffix.

    Raises:
        ConfigurationError: Unknown suffix or unreadable file.
        DefinitionSyntaxError, FrameValidationError, GeometryError: Invalid content.
    """
    from framemap.application.experiments import load_suite
    from framemap.frames.dsl import parse_frame_library
    from framemap.world.scenario import parse_scenario

    if not path.is_file():
        raise ConfigurationError("file not found: %s" % path)
    suffix = path.suffix.lower()
    if suffix in (".yaml", ".yml"):
        load_suite(path, settings)
        return
    parsers = {".frames": parse_frame_library, ".scn": parse_scenario}
    if suffix not in parsers:
        raise ConfigurationError("cannot tell what %s is (expected .frames, .scn or .yaml)" % path)
    parsers[suffix](path.read_text(encoding="utf-8"))


def _cmd_validate(args, settings: dict) -> int:
    code = EXIT_OK
    for name in args.files:
        try:
            validate_file(Path(name), settings)
        except _CONFIG_ERRORS as e:
            record = error_record(e, EXIT_CONFIG)
            record["file"] = name
            sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
            code = EXIT_CONFIG
        else:
            sys.stdout.write("ok %s\n" % name)
    return code


_COMMANDS = {
    "run": _cmd_run,
    "suite": _cmd_suite,
    "render": _cmd_render,
    "validate": _cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = getattr(logging, args.log_level) if args.log_level else None
    use_file = args.log_dir is not None or bool(os.environ.get(ENV_LOG_DIR))
    setup_logging(level=level, log_dir=args.log_dir, use_file=use_file)

    try:
        settings = _settings(args)
        return _COMMANDS[args.command](args, settings)
    except _CONFIG_ERRORS as e:
        logger.error("%s", e)
        return _report_error(e, EXIT_CONFIG)
    except Exception as e:
        logger.exception("Unexpected error")
        out = getattr(args, "output", None) or os.getcwd()
        write_crash_report(out, e)
        return _report_error(e, EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
