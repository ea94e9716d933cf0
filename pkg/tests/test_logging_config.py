"""Tests for the logging setup."""

import logging
import sys

import numpy as np
import pytest
import structlog

from ued_tomography import logging_config
from ued_tomography.config.settings import Settings
from ued_tomography.logging_config import configure_logging, numpy_to_builtin


@pytest.fixture
def configured(monkeypatch):
    """Record the structlog configuration instead of applying it; restore the root logger afterwards."""
    calls = []
    monkeypatch.setattr(logging_config.structlog, "configure", lambda **kwargs: calls.append(kwargs))
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield calls
    root.handlers[:] = handlers
    root.setLevel(level)
    logging.captureWarnings(False)
    structlog.contextvars.clear_contextvars()


class TestConfigureLogging:
    def test_run_context_replaces_previous(self, configured):
        structlog.contextvars.bind_contextvars(stale="yes")
        configure_logging(Settings(log_json=True, log_level="WARNING"), command="simulate")
        assert structlog.contextvars.get_contextvars() == {"command": "simulate"}

    def test_root_logger_on_stderr(self, configured):
        configure_logging(Settings(log_json=False, log_level="debug"))
        root = logging.getLogger()
        assert root.level == logging.DEBUG
        assert len(root.handlers) == 1
        assert root.handlers[0].stream is sys.stderr

    def test_numpy_processor_in_chain(self, configured):
        configure_logging(Settings())
        assert numpy_to_builtin in configured[0]["processors"]


class TestNumpyToBuiltin:
    def test_scalars_and_arrays(self):
        event = numpy_to_builtin(
            None,
            "info",
            {"event": "x", "n": np.int64(3), "eps": np.float64(0.5), "small": np.arange(3), "big": np.zeros((5, 5))},
        )
        assert event["n"] == 3 and type(event["n"]) is int
        assert type(event["eps"]) is float
        assert event["small"] == [0, 1, 2]
        assert event["big"] == "array(5, 5)"
        assert event["event"] == "x"
