import io
import json
import logging
import sys
from unittest.mock import patch

from ..src.utils.logger import JSONFormatter, StderrHandler, log_error, log_performance, setup_logger


def _record(**extra):
    record = logging.LogRecord("relay_dof.test", logging.INFO, __file__, 10, "stage done", (), None)
    record.__dict__.update(extra)
    return record


def test_json_formatter_includes_extra_fields():
    payload = json.loads(JSONFormatter().format(_record(stage="relay", retries=2)))
    assert payload["message"] == "stage done"
    assert payload["level"] == "INFO"
    assert payload["stage"] == "relay"
    assert payload["retries"] == 2


def test_setup_logger_is_idempotent():
    logger = setup_logger("relay_dof.test_idempotent", level="debug")
    again = setup_logger("relay_dof.test_idempotent", level="info")
    assert logger is again
    assert len(logger.handlers) == 1
    assert logger.level == logging.INFO


def test_log_error_reports_to_sentry():
    error = RuntimeError("boom")
    with patch("dof_services.src.utils.logger.capture_exception") as capture:
        log_error(error, {'stage': 'relay'})
    capture.assert_called_once_with(error)


def test_log_performance_leaves_breadcrumb():
    with patch("dof_services.src.utils.logger.add_breadcrumb") as breadcrumb:
        log_performance("design_seconds", 0.5, {'M': 14})
    breadcrumb.assert_called_once()
    assert breadcrumb.call_args.kwargs["data"]["value"] == 0.5


def test_logger_follows_replaced_stderr(monkeypatch):
    logger = setup_logger("relay_dof.test_stderr", level="info")
    first = io.StringIO()
    monkeypatch.setattr(sys, "stderr", first)
    logger.info("first", extra={'stage': 'relay'})
    assert json.loads(first.getvalue())["stage"] == "relay"

    first.close()
    second = io.StringIO()
    monkeypatch.setattr(sys, "stderr", second)
    logger.info("second")
    assert json.loads(second.getvalue())["message"] == "second"


def test_stderr_handler_ignores_assigned_stream():
    handler = StderrHandler()
    handler.stream = None
    assert handler.stream is sys.stderr
