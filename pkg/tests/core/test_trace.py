"""Unit tests for framemap.core.trace."""
import json

import numpy as np
import pytest

from framemap.core.exceptions import TraceSchemaError
from framemap.core.trace import (
    TRACE_SCHEMA,
    TRACE_VERSION,
    TraceWriter,
    read_trace,
    stable_json_dumps,
    to_primitive,
    write_json,
)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_to_primitive_handles_numpy_and_containers():
    out = to_primitive({"a": np.array([1.0, 2.5]), "b": np.int64(3), "c": (np.bool_(True),), "d": {2, 1}})
    assert out == {"a": [1.0, 2.5], "b": 3, "c": [True], "d": [1, 2]}


def test_floats_are_rounded_and_non_finite_becomes_null():
    assert to_primitive(0.1234567891) == 0.123457
    assert to_primitive(float("nan")) is None
    assert to_primitive(-0.0000001) == 0.0


def test_stable_json_dumps_sorts_keys():
    assert stable_json_dumps({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_write_json_is_pretty_with_newline(tmp_path):
    p = write_json(tmp_path / "sub" / "m.json", {"x": 1})
    text = p.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert json.loads(text) == {"x": 1}


# ---------------------------------------------------------------------------
# Writer / reader
# ---------------------------------------------------------------------------

def test_trace_roundtrip(tmp_path):
    path = tmp_path / "trace.jsonl"
    with TraceWriter(path, meta={"seed": 7}) as tw:
        tw.write({"kind": "step", "t": 0})
        tw.write({"kind": "step", "t": 1})
    header, records = read_trace(path)
    assert header["schema"] == TRACE_SCHEMA
    assert header["version"] == TRACE_VERSION
    assert header["seed"] == 7
    assert [r["t"] for r in records] == [0, 1]


def test_meta_cannot_override_schema_fields(tmp_path):
    path = tmp_path / "trace.jsonl"
    with TraceWriter(path, meta={"version": 99}):
        pass
    header, _ = read_trace(path)
    assert header["version"] == TRACE_VERSION


def test_unknown_version_is_rejected(tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text(json.dumps({"kind": "header", "schema": TRACE_SCHEMA, "version": 2}) + "\n", encoding="utf-8")
    with pytest.raises(TraceSchemaError, match="version"):
        read_trace(path)


@pytest.mark.parametrize("content", ["", "not json\n", '{"kind": "step", "t": 0}\n'])
def test_bad_headers_are_rejected(tmp_path, content):
    path = tmp_path / "trace.jsonl"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(TraceSchemaError):
        read_trace(path)


def test_write_before_open_fails(tmp_path):
    with pytest.raises(RuntimeError):
        TraceWriter(tmp_path / "t.jsonl").write({"kind": "step"})
