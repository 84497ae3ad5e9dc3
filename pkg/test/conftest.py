from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from pathlib import Path

import pytest
import structlog
from hypothesis import HealthCheck, settings

_SRC = Path(__file__).resolve().parents[1] / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from sce_segmentation.observability import logger as _logger  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def _reset_logging() -> None:
    _logger._active = None
    structlog.reset_defaults()
    structlog.contextvars.clear_contextvars()
    logging.getLogger().handlers = []


@pytest.fixture(autouse=True)
def _isolate_logging() -> Iterator[None]:
    """Every test starts with unconfigured logging."""
    _reset_logging()
    yield
    _reset_logging()
