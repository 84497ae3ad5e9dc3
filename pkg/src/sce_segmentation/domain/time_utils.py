from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import UTC, datetime


def now_utc() -> datetime:
    return datetime.now(UTC)


def format_timestamp_utc(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC).replace(microsecond=0).isoformat().replace("+00:00", "Z")


@dataclass
class StageTimer:
    """Wall-clock seconds per named stage, in the order stages were first entered."""

    seconds: dict[str, float] = field(default_factory=dict)

    def record(self, stage: str, started: float) -> float:
        elapsed = time.perf_counter() - started
        self.seconds[stage] = self.seconds.get(stage, 0.0) + elapsed
        return elapsed

    def rounded(self, digits: int = 3) -> dict[str, float]:
        return {stage: round(value, digits) for stage, value in self.seconds.items()}
