"""Unit tests for framemap.core.logger."""
import logging

from framemap.core.logger import (
    FrameMapFormatter,
    get_logger,
    get_trial_logger,
    set_log_file_for_run,
    setup_logging,
    write_crash_report,
)


def test_get_logger_namespaces_under_framemap():
    assert get_logger("planner").name == "framemap.planner"
    assert get_logger("framemap.world").name == "framemap.world"


def test_setup_logging_writes_structured_file(tmp_path):
    setup_logging(level=logging.INFO, log_dir=tmp_path, use_console=False)
    get_logger("test").info("hello %d", 1)
    for h in logging.getLogger("framemap").handlers:
        h.flush()
    text = (tmp_path / "framemap.log").read_text(encoding="utf-8")
    assert "| INFO" in text and "framemap.test" in text and "hello 1" in text


def test_setup_logging_is_idempotent(tmp_path):
    setup_logging(log_dir=tmp_path, use_console=False)
    n = len(logging.getLogger("framemap").handlers)
    setup_logging(log_dir=tmp_path, use_console=False)
    assert len(logging.getLogger("framemap").handlers) == n


def test_trial_adapter_tags_messages():
    record = logging.LogRecord("framemap.x", logging.INFO, __file__, 1, "msg", None, None)
    adapter = get_trial_logger(get_trial_logger(get_logger("x"), "pick_place"), "007")
    _, kwargs = adapter.process("msg", {})
    record.trial = kwargs["extra"]["trial"]
    out = FrameMapFormatter("%(name)s%(trial)s %(message)s").format(record)
    assert out == "framemap.x [pick_place 007] msg"


def test_formatter_without_trial():
    record = logging.LogRecord("framemap.x", logging.INFO, __file__, 1, "plain", None, None)
    assert FrameMapFormatter("%(name)s%(trial)s %(message)s").format(record) == "framemap.x plain"


def test_set_log_file_for_run_adds_one_handler(tmp_path):
    path = set_log_file_for_run(tmp_path)
    assert path == tmp_path / "logs" / "framemap.log"
    n = len(logging.getLogger("framemap").handlers)
    set_log_file_for_run(tmp_path)
    assert len(logging.getLogger("framemap").handlers) == n


def test_crash_report(tmp_path):
    try:
        raise ValueError("boom")
    except ValueError as e:
        path = write_crash_report(tmp_path, e)
    text = path.read_text(encoding="utf-8")
    assert "ValueError: boom" in text
    assert "Traceback" in text
