"""Unit tests for framemap.application.experiments."""
import json

import pytest
import yaml

from framemap.application.experiments import (
    METRICS_FILE,
    REPORT_FILE,
    SUMMARY_FILE,
    TRACE_FILE,
    RunConfig,
    TrialSpec,
    load_suite,
    prepare_run,
    resolve_data_path,
    run_experiment_suite,
    run_scenario,
    run_trial,
)
from framemap.core.config import load_config
from framemap.core.exceptions import ConfigurationError, DefinitionSyntaxError
from framemap.core.trace import read_trace
from framemap.data import DATA_DIR, frames_path, scenario_path, suite_path


def _fixed(tmp_path, **kwargs) -> RunConfig:
    fields = dict(scenario="apartment", task="stir_cup", seed=3, mode="fixed", particles=50, iterations=3,
                  output_dir=str(tmp_path / "run"))
    fields.update(kwargs)
    return RunConfig(**fields)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

def test_packaged_names_resolve():
    assert resolve_data_path("apartment", "scenarios", ".scn") == scenario_path("apartment.scn")
    assert resolve_data_path("household", "suites", ".yaml") == suite_path()
    assert resolve_data_path(str(frames_path()), "frames", ".frames") == frames_path()


def test_missing_path():
    with pytest.raises(ConfigurationError, match="scenario not found"):
        resolve_data_path("nowhere", "scenarios", ".scn")


# ---------------------------------------------------------------------------
# prepare_run
# ---------------------------------------------------------------------------

def test_prepare_uses_config_defaults(tmp_path):
    prepared = prepare_run(RunConfig("apartment", "stir_cup", output_dir=str(tmp_path)))
    assert prepared.particles == 200
    assert prepared.iterations == 20
    assert prepared.budget == 400 == prepared.planner.budget
    assert prepared.instance.frame_id == "stir_cup"
    assert prepared.trace_particles is True and prepared.render is False


def test_prepare_parses_utterances(tmp_path):
    prepared = prepare_run(RunConfig("apartment", "please stir the cup", output_dir=str(tmp_path)))
    assert prepared.instance.frame_id == "stir_cup"
    assert prepared.instance.utterance == "please stir the cup"


def test_overrides_are_merged(tmp_path):
    config = RunConfig("apartment", "stir_cup", output_dir=str(tmp_path),
                       overrides={"inference": {"particles": 30, "sigma_m": 0.4}, "planner": {"budget": 9}})
    prepared = prepare_run(config)
    assert prepared.particles == 30
    assert prepared.params.sigma_m == 0.4
    assert prepared.budget == 9


@pytest.mark.parametrize(
    "changes",
    [
        {"mode": "dance"},
        {"seed": -1},
        {"seed": 2 ** 64},
        {"particles": 0},
        {"iterations": 0},
        {"budget": 0},
        {"scenario": "nowhere.scn"},
        {"library": "nowhere.frames"},
        {"task": "juggle the moon"},
        {"holding": "piano"},
    ],
)
def test_invalid_configs_write_nothing(tmp_path, changes):
    config = _fixed(tmp_path, **changes)
    with pytest.raises(ConfigurationError):
        run_scenario(config)
    assert not (tmp_path / "run").exists()


def test_broken_scenario_writes_nothing(tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text("map broken\n  bounds 0 0 4 4\n", encoding="utf-8")
    with pytest.raises(DefinitionSyntaxError):
        run_scenario(_fixed(tmp_path, scenario=str(bad)))
    assert not (tmp_path / "run").exists()


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def test_fixed_run_writes_trace_and_metrics(tmp_path):
    result = run_scenario(_fixed(tmp_path))
    assert result.ok and result.status == "completed"
    header, records = read_trace(tmp_path / "run" / TRACE_FILE)
    assert header["mode"] == "fixed" and header["seed"] == 3 and header["frame"] == "stir_cup"
    assert "scenario" in header and "library" in header
    assert [r["t"] for r in records] == [0, 1, 2]
    assert all(r["phase"] == "fixed" for r in records)
    metrics = json.loads((tmp_path / "run" / METRICS_FILE).read_text(encoding="utf-8"))
    assert metrics["steps"] == 3
    assert metrics["path_length"] == 0.0
    rooms = metrics["mass_by_room"]["frames"]["stir_cup"]
    assert sum(rooms.values()) == pytest.approx(1.0)
    assert set(metrics["mass_near_truth"]) == {"grasp_spoon", "stir_cup"}


def test_holding_is_applied(tmp_path):
    run_scenario(_fixed(tmp_path, holding="spoon", iterations=1))
    header, records = read_trace(tmp_path / "run" / TRACE_FILE)
    assert header["holding"] == "spoon"
    assert records[0]["robot"]["gripper"] == "spoon"


def test_tour_run_stays_within_budget(tmp_path):
    result = run_scenario(_fixed(tmp_path, mode="tour", budget=15))
    assert result.status == "completed"
    assert 1 <= result.metrics["steps"] <= 15
    assert result.metrics["path_length"] > 0.0
    _, records = read_trace(tmp_path / "run" / TRACE_FILE)
    assert records[0]["phase"] == "start"
    assert {r["phase"] for r in records[1:]} <= {"tour", "scan"}


def test_task_run(tmp_path):
    result = run_scenario(
        RunConfig("studio_absent", "look at the apple", seed=1, particles=50, budget=6, output_dir=str(tmp_path))
    )
    assert result.status == "timeout"
    assert not result.ok
    assert result.metrics["steps"] == 6
    _, records = read_trace(tmp_path / TRACE_FILE)
    assert records[-1]["kind"] == "result"
    assert records[-1]["status"] == "timeout"


def test_render_option(tmp_path):
    run_scenario(_fixed(tmp_path, iterations=2, render=True))
    images = sorted(p.name for p in (tmp_path / "run" / "frames").glob("*.png"))
    assert images == ["step_0000.png", "step_0001.png"]


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def test_packaged_suite_expands():
    suite = load_suite("household")
    assert suite.name == "household"
    groups = [t.group for t in suite.trials]
    assert groups.count("look_at") == 50
    assert groups.count("impossible") == 10
    look = [t for t in suite.trials if t.group == "look_at"]
    assert [t.task for t in look[:4]] == ["look at the apple", "find the spoon", "look at the cup", "look at the apple"]
    assert [t.seed for t in look[:3]] == [1000, 1001, 1002]
    impossible = [t for t in suite.trials if t.group == "impossible"][0]
    assert impossible.budget == 150
    assert "object apple" not in impossible.scenario_text


def _write_suite(tmp_path, groups, **top) -> str:
    doc = {"name": "mini", "library": str(frames_path()), "groups": groups}
    doc.update(top)
    path = tmp_path / "mini.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize(
    "groups",
    [
        {},
        {"g": {"scenario": str(DATA_DIR / "scenarios" / "studio.scn")}},
        {"g": {"tasks": ["look at the cup"]}},
        {"g": {"scenario": str(DATA_DIR / "scenarios" / "studio.scn"), "tasks": ["juggle the moon"]}},
        {"g": {"scenario": str(DATA_DIR / "scenarios" / "studio.scn"), "tasks": ["look at the cup"], "trials": 0}},
    ],
)
def test_malformed_suites(tmp_path, groups):
    with pytest.raises(ConfigurationError):
        load_suite(_write_suite(tmp_path, groups))


def test_trial_errors_become_rows():
    trial = TrialSpec(
        group="g", index=0, task="look at the cup", seed=1, scenario_text="teleport 1 2\n",
        library_text=frames_path().read_text(encoding="utf-8"), particles=10, budget=5, settings=load_config(),
    )
    row = run_trial(trial)
    assert row["status"] == "error"
    assert row["success"] is False
    assert row["reason"].startswith("DefinitionSyntaxError")
    assert trial.name == "g/000"


def test_small_suite_report(tmp_path):
    scn = str(DATA_DIR / "scenarios" / "studio_absent.scn")
    path = _write_suite(
        tmp_path,
        {
            "absent": {"scenario": scn, "tasks": ["look at the apple"], "trials": 2, "budget": 4, "seed_start": 9},
            "also_absent": {"scenario": scn, "tasks": ["grasp the apple"], "trials": 1, "budget": 3},
        },
        defaults={"particles": 30},
    )
    out = tmp_path / "out"
    report = run_experiment_suite(path, output_dir=out, workers=1, progress=False)
    assert list(report["groups"]) == ["absent", "also_absent"]
    assert report["groups"]["absent"]["timeouts"] == 2
    assert report["groups"]["absent"]["success_rate"] == 0.0
    assert [row["seed"] for row in report["trials"]] == [9, 10, 0]
    assert json.loads((out / REPORT_FILE).read_text(encoding="utf-8"))["suite"] == "mini"
    assert "also_absent" in (out / SUMMARY_FILE).read_text(encoding="utf-8")

    only = run_experiment_suite(path, output_dir=tmp_path / "only", workers=1, progress=False, groups=["also_absent"])
    assert list(only["groups"]) == ["also_absent"]
    with pytest.raises(ConfigurationError):
        run_experiment_suite(path, output_dir=tmp_path / "x", workers=1, progress=False, groups=["nope"])
