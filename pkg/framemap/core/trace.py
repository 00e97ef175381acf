"""
Versioned JSON-lines trace stream.

The first line of every trace is a header record::

    {"kind": "header", "schema": "framemap.trace", "version": 1, ...}

followed by one record per timestep. Floats are rounded to 6 decimals and keys are
sorted, so two runs with the same configuration write byte-identical files.
"""
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterator, Optional, TextIO

import numpy as np

from .exceptions import TraceSchemaError

TRACE_SCHEMA = "framemap.trace"
TRACE_VERSION = 1
FLOAT_DECIMALS = 6


def to_primitive(obj: Any) -> Any:
    """Convert numpy arrays/scalars, dataclasses, tuples and sets into JSON-safe values."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        rounded = round(value, FLOAT_DECIMALS)
        return 0.0 if rounded == 0.0 else rounded
    if isinstance(obj, np.ndarray):
        return [to_primitive(v) for v in obj.tolist()]
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_primitive(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_primitive(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return [to_primitive(v) for v in sorted(obj, key=repr)]
    if isinstance(obj, (list, tuple)):
        return [to_primitive(v) for v in obj]
    return str(obj)


def stable_json_dumps(obj: Any, pretty: bool = False) -> str:
    data = to_primitive(obj)
    if pretty:
        return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False)
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_json(path: Path | str, obj: Any) -> Path:
    """Write a pretty, key-sorted JSON document with a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(stable_json_dumps(obj, pretty=True) + "\n", encoding="utf-8")
    return path


class TraceWriter:
    """
    Append records to a trace file. Use as a context manager::

        with TraceWriter(out / "trace.jsonl", meta={"seed": 7}) as tw:
            tw.write({"kind": "step", "t": 0, ...})
    """

    def __init__(self, path: Path | str, meta: Optional[dict] = None) -> None:
        self.path = Path(path)
        self.meta = dict(meta or {})
        self._fh: Optional[TextIO] = None
        self.records = 0

    def open(self) -> "TraceWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        header = {"kind": "header", "schema": TRACE_SCHEMA, "version": TRACE_VERSION}
        header.update({k: v for k, v in self.meta.items() if k not in header})
        self._fh.write(stable_json_dumps(header) + "\n")
        return self

    def write(self, record: dict) -> None:
        if self._fh is None:
            raise RuntimeError("TraceWriter is not open")
        self._fh.write(stable_json_dumps(record) + "\n")
        self.records += 1

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "TraceWriter":
        return self.open()

    def __exit__(self, *exc) -> None:
        self.close()


def check_header(record: dict) -> dict:
    """Raise TraceSchemaError unless record is a supported trace header."""
    if record.get("kind") != "header" or record.get("schema") != TRACE_SCHEMA:
        raise TraceSchemaError("not a framemap trace (missing header record)")
    version = record.get("version")
    if version != TRACE_VERSION:
        raise TraceSchemaError(
            "unsupported trace schema version %r (this build reads version %d)" % (version, TRACE_VERSION)
        )
    return record


def iter_trace(path: Path | str) -> Iterator[dict]:
    """Yield the header and then every record of a trace file, validating the header first."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise TraceSchemaError("empty trace file: %s" % path)
        try:
            header = json.loads(first)
        except json.JSONDecodeError as e:
            raise TraceSchemaError("trace header is not JSON: %s" % e) from None
        yield check_header(header)
        for line in fh:
            if line.strip():
                yield json.loads(line)


def read_trace(path: Path | str) -> tuple[dict, list[dict]]:
    """Return (header, records) of a trace file."""
    it = iter_trace(path)
    header = next(it)
    return header, list(it)
