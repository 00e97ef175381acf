"""
Logging for framemap runs.

Every module logs through ``get_logger("planner")`` and friends, which hang off
the ``framemap`` logger. The CLI calls ``setup_logging`` once; a run then adds
``<output_dir>/logs/framemap.log`` with ``set_log_file_for_run`` so the log
travels with its trace. Suite workers tag their lines with the trial name via
``get_trial_logger``.

Environment: FRAMEMAP_LOG_LEVEL picks the level, FRAMEMAP_LOG_DIR adds a shared
rotating log next to the per-run files.
"""
import logging
import logging.handlers
import os
import platform
import sys
import traceback
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

from .config import ENV_LOG_DIR, ENV_LOG_LEVEL

PathLike = Union[str, os.PathLike]

ROOT_NAME = "framemap"
LOG_FILE_NAME = "framemap.log"

_STRUCTURED_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s%(trial)s | %(message)s"
_CONSOLE_FORMAT = "%(levelname)s %(name)s%(trial)s: %(message)s"
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# shared log only; per-run logs are small and never rotate
_SHARED_LOG_BYTES = 5 * 1024 * 1024
_SHARED_LOG_BACKUPS = 3

_configured = False


class FrameMapFormatter(logging.Formatter):
    """Formatter that tolerates records logged without a trial tag."""

    def __init__(self, fmt: str = _STRUCTURED_FORMAT, datefmt: str = _DATE_FORMAT):
        super().__init__(fmt=fmt, datefmt=datefmt)

    def format(self, record: logging.LogRecord) -> str:
        if not hasattr(record, "trial"):
            record.trial = ""
        return super().format(record)


class TrialAdapter(logging.LoggerAdapter):
    """Prefixes the logger name with ``[<suite group> <trial>]``."""

    @property
    def trial(self) -> str:
        return self.extra.get("trial", "")

    def process(self, msg, kwargs):
        extra = dict(kwargs.get("extra") or {})
        extra["trial"] = f" [{self.trial}]" if self.trial else ""
        kwargs["extra"] = extra
        return msg, kwargs


def _root() -> logging.Logger:
    return logging.getLogger(ROOT_NAME)


def _level_from_env() -> int:
    name = os.environ.get(ENV_LOG_LEVEL, "").strip().upper()
    level = logging.getLevelName(name) if name else logging.INFO
    return level if isinstance(level, int) else logging.INFO


def _file_handler(path: Path, level: int, rotate: bool) -> logging.Handler:
    if rotate:
        handler: logging.Handler = logging.handlers.RotatingFileHandler(
            path, maxBytes=_SHARED_LOG_BYTES, backupCount=_SHARED_LOG_BACKUPS, encoding="utf-8"
        )
    else:
        handler = logging.FileHandler(path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(FrameMapFormatter())
    return handler


def _has_file_handler(path: Path) -> bool:
    target = str(path.resolve())
    return any(
        isinstance(h, logging.FileHandler) and h.baseFilename == target for h in _root().handlers
    )


def setup_logging(
    level: Optional[int] = None,
    log_dir: Optional[PathLike] = None,
    use_console: bool = True,
    use_file: bool = True,
) -> None:
    """
    Configure the ``framemap`` logger once per process.

    Console output goes to stderr (stdout carries the CLI's JSON). With
    ``use_file`` a rotating ``framemap.log`` is written to ``log_dir`` or
    FRAMEMAP_LOG_DIR; if neither is set, or the directory cannot be created,
    only the console is used.
    """
    global _configured
    if _configured:
        return

    root = _root()
    level = _level_from_env() if level is None else level
    root.setLevel(level)

    if use_console:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(level)
        console.setFormatter(FrameMapFormatter(_CONSOLE_FORMAT))
        root.addHandler(console)

    directory = log_dir or os.environ.get(ENV_LOG_DIR)
    if use_file and directory:
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            root.warning("Log directory %s unusable (%s); logging to console only", directory, e)
        else:
            root.addHandler(_file_handler(directory / LOG_FILE_NAME, level, rotate=True))

    _configured = True


def set_log_file_for_run(output_dir: PathLike) -> Optional[Path]:
    """Also log to ``<output_dir>/logs/framemap.log``; returns that path, or None."""
    root = _root()
    path = Path(output_dir) / "logs" / LOG_FILE_NAME
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        root.warning("Run log %s not created: %s", path, e)
        return None
    if not _has_file_handler(path):
        level = root.level or logging.INFO
        root.addHandler(_file_handler(path, level, rotate=False))
    return path


def get_logger(name: str) -> logging.Logger:
    """``get_logger("planner")`` is the ``framemap.planner`` logger."""
    if name == ROOT_NAME or name.startswith(ROOT_NAME + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_NAME}.{name}")


def get_trial_logger(logger: Union[logging.Logger, TrialAdapter], trial: str) -> TrialAdapter:
    """Tag ``logger`` with ``trial``; tagging an adapter appends to its tag."""
    if isinstance(logger, TrialAdapter):
        tag = f"{logger.trial} {trial}".strip()
        return TrialAdapter(logger.logger, {"trial": tag})
    return TrialAdapter(logger, {"trial": trial})


def write_crash_report(output_dir: PathLike, exc: BaseException) -> Optional[Path]:
    """
    Dump an unexpected exception to ``<output_dir>/crash_report.txt``.

    The report holds the command line, versions and the traceback, which is what
    an issue needs besides the trace header. Returns None if it cannot be written.
    """
    from framemap import __version__

    import numpy
    import scipy

    path = Path(output_dir) / "crash_report.txt"
    body = [
        f"framemap {__version__} crashed at {datetime.now().isoformat(timespec='seconds')}",
        f"command: {' '.join(sys.argv)}",
        f"cwd: {os.getcwd()}",
        f"python {platform.python_version()} on {platform.platform()}",
        f"numpy {numpy.__version__}, scipy {scipy.__version__}",
        "",
        f"{type(exc).__name__}: {exc}",
        "",
        *traceback.format_exception(type(exc), exc, exc.__traceback__),
    ]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(line.rstrip("\n") for line in body) + "\n", encoding="utf-8")
    except OSError as e:
        _root().warning("Crash report not written to %s: %s", path, e)
        return None
    _root().info("Crash report: %s", path)
    return path


def reset_logging() -> None:
    """Detach and close every framemap handler so ``setup_logging`` runs again."""
    global _configured
    root = _root()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    _configured = False
