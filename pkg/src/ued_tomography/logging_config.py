"""structlog setup shared by the CLI and the benchmark script.

Package events and stdlib records (scipy, ``warnings`` from numpy) run
through one processor chain and go to stderr, so tables and reports on
stdout stay machine readable.  Numpy scalars and small arrays in event
fields are turned into plain Python values before rendering.
"""

import logging
import sys
from typing import Any

import numpy as np
import structlog

from ued_tomography.config.settings import Settings

# arrays above this size are summarized by shape
MAX_LOGGED_ARRAY = 16


def numpy_to_builtin(_logger: Any, _method: str, event_dict: dict[str, Any]) -> dict[str, Any]:
    """Render numpy values as JSON-friendly builtins."""
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            event_dict[key] = value.tolist() if value.size <= MAX_LOGGED_ARRAY else f"array{value.shape}"
    return event_dict


def configure_logging(settings: Settings, **run_context: object) -> None:
    """Configure structlog and the stdlib root logger from ``settings``.

    Args:
        settings: ``log_json`` picks JSON lines or the console renderer;
            ``log_level`` sets the root level.
        **run_context: Fields bound to every event of this run, e.g. the
            command name.  Context from a previous run is cleared.
    """
    shared_processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        numpy_to_builtin,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if settings.log_json:
        renderer: structlog.types.Processor = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer()

    structlog.configure(
        processors=shared_processors + [structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    formatter = structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=shared_processors,
        processors=[structlog.stdlib.ProcessorFormatter.remove_processors_meta, renderer],
    )
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(getattr(logging, settings.log_level.upper()))
    logging.captureWarnings(True)

    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(**run_context)
