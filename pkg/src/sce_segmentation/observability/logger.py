from __future__ import annotations

import logging
import sys
from typing import Any

import structlog
from structlog.stdlib import ProcessorFormatter

_active: dict[str, str] | None = None


def _coerce_log_format(value: str | None) -> str:
    normalized = (value or "").strip().lower()
    return normalized if normalized in {"json", "human"} else "human"


def configure_logging(*, log_level: str = "INFO", log_format: str | None = "human") -> None:
    """
    Minimal structlog + stdlib logging configuration.

    Logs go to stderr; stdout is reserved for command summaries.
    """
    resolved_level = (log_level or "INFO").strip().upper()
    resolved_format = _coerce_log_format(log_format)
    global _active
    _active = {"log_level": resolved_level, "log_format": resolved_format}

    shared_processors: list[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.TimeStamper(fmt="iso", utc=True),
    ]

    renderer: Any
    if resolved_format == "json":
        shared_processors.insert(4, structlog.processors.format_exc_info)
        renderer = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer()

    formatter = ProcessorFormatter(
        processor=renderer,
        foreign_pre_chain=shared_processors,
    )

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(resolved_level)

    # joblib/loky workers report pool lifecycle at INFO.
    logging.getLogger("joblib").setLevel(logging.WARNING)

    structlog.configure(
        processors=[
            *shared_processors,
            ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def active_logging() -> dict[str, str] | None:
    """Arguments of the last configure_logging call, for re-use in worker processes."""
    return dict(_active) if _active is not None else None


def ensure_logging(options: dict[str, str] | None) -> None:
    """Configure logging in a fresh worker process once; a no-op where it is already set."""
    if options is not None and _active is None:
        configure_logging(**options)
