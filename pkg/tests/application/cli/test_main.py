"""Unit tests for framemap.application.cli.main."""
import json
import subprocess
import sys

import pytest

from framemap.application.cli.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, build_parser, error_record, main
from framemap.core.exceptions import ConfigurationError, DefinitionSyntaxError
from framemap.data import frames_path, scenario_path, suite_path


def _error(capsys) -> dict:
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def test_help_exits_zero():
    result = subprocess.run(
        [sys.executable, "-m", "framemap", "--help"], capture_output=True, text=True, timeout=60
    )
    assert result.returncode == 0, result.stderr
    assert "usage" in result.stdout.lower()


def test_run_defaults():
    args = build_parser().parse_args(["run", "apartment", "stir the cup"])
    assert (args.mode, args.seed, args.holding) == ("task", 0, None)
    assert args.render is None and args.trace_particles is None
    assert args.overrides == []


def test_unknown_mode_is_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "apartment", "stir_cup", "--mode", "dance"])


def test_error_record():
    assert error_record(ConfigurationError("bad"), 2) == {"error": "ConfigurationError", "message": "bad", "exit_code": 2}
    rec = error_record(DefinitionSyntaxError("unknown key 'colour'", line=4, column=3), 2)
    assert (rec["line"], rec["column"]) == (4, 3)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def test_run_fixed(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "apartment", "stir_cup", "--mode", "fixed", "--iterations", "2", "-p", "30",
                 "--seed", "4", "-o", str(out), "--no-trace-particles"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["status"] == "completed"
    assert (out / "trace.jsonl").is_file() and (out / "metrics.json").is_file()
    assert (out / "logs" / "framemap.log").is_file()


def test_run_timeout_exits_one(tmp_path, capsys):
    code = main(["run", str(scenario_path("studio_absent.scn")), "look at the apple", "--budget", "3",
                 "-p", "20", "-o", str(tmp_path / "run")])
    assert code == EXIT_FAILURE
    assert json.loads(capsys.readouterr().out)["status"] == "timeout"


def test_run_configuration_error(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "nowhere.scn", "stir_cup", "-o", str(out)])
    assert code == EXIT_CONFIG
    record = _error(capsys)
    assert record["error"] == "ConfigurationError"
    assert record["exit_code"] == EXIT_CONFIG
    assert not out.exists()


def test_bad_override(tmp_path, capsys):
    code = main(["run", "apartment", "stir_cup", "--set", "inference.particles", "-o", str(tmp_path / "run")])
    assert code == EXIT_CONFIG
    assert "section.key=value" in _error(capsys)["message"]


def test_override_reaches_the_run(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "apartment", "stir_cup", "--mode", "fixed", "--iterations", "1",
                 "--set", "inference.particles=25", "-o", str(out)])
    assert code == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["particles"] == 25


# ---------------------------------------------------------------------------
# validate / render
# ---------------------------------------------------------------------------

def test_validate_packaged_files(capsys):
    code = main(["validate", str(frames_path()), str(scenario_path("apartment.scn")), str(suite_path())])
    assert code == EXIT_OK
    assert capsys.readouterr().out.count("ok ") == 3


def test_validate_reports_each_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.frames"
    bad.write_text("frame broken\n  verbs: break\n", encoding="utf-8")
    odd = tmp_path / "notes.txt"
    odd.write_text("hello\n", encoding="utf-8")
    code = main(["validate", str(bad), str(odd), str(frames_path())])
    assert code == EXIT_CONFIG
    captured = capsys.readouterr()
    errors = [json.loads(line) for line in captured.err.strip().splitlines() if line.startswith("{")]
    assert [e["file"] for e in errors] == [str(bad), str(odd)]
    assert errors[0]["error"] == "DefinitionSyntaxError" and "line" in errors[0]
    assert errors[1]["error"] == "ConfigurationError"
    assert "ok %s" % frames_path() in captured.out


def test_render_missing_trace(tmp_path, capsys):
    assert main(["render", str(tmp_path / "none.jsonl")]) == EXIT_CONFIG
    assert _error(capsys)["error"] == "ConfigurationError"


def test_render_written_trace(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "apartment", "stir_cup", "--mode", "fixed", "--iterations", "3", "-p", "20",
                 "-o", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["render", str(out / "trace.jsonl"), "--every", "2", "-o", str(tmp_path / "img")]) == EXIT_OK
    assert "2 image(s)" in capsys.readouterr().out
    assert sorted(p.name for p in (tmp_path / "img").iterdir()) == ["step_0000.png", "step_0002.png"]
