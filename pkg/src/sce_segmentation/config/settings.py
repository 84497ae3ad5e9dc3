"""Configuration models for SOM runs, ensembles, synthetic data and logging."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sce_segmentation.domain.error_messages import ErrorMessages

SEED_MAX = 2**64 - 1
# Training length rule of thumb: 500 steps per neuron.
STEPS_PER_NEURON = 500


class _BaseSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SomConfig(_BaseSection):
    map_rows: int = Field(ge=1)
    map_cols: int = Field(ge=1)
    alpha0: float = Field(gt=0, lt=1)
    alpha_final: float = Field(default=0.01, gt=0, lt=1)
    # None = 500 * map size.
    iterations: int | None = Field(default=None, ge=1)
    # None = max(map_rows, map_cols) / 2, never below sigma_final.
    sigma0: float | None = None
    sigma_final: float = Field(default=1.0, ge=1)
    join_k: int = Field(default=4, ge=2)
    # kmeans: k-means over all neuron weights. linkage: single linkage over hit neurons.
    join_method: Literal["kmeans", "linkage"] = "kmeans"
    seed: int = Field(default=0, ge=0, le=SEED_MAX)

    @model_validator(mode="after")
    def _check_schedules(self) -> SomConfig:
        if self.alpha_final > self.alpha0:
            raise ValueError("alpha_final must be <= alpha0")
        if self.sigma0 is not None and self.sigma0 < self.sigma_final:
            raise ValueError("sigma0 must be >= sigma_final")
        if self.join_k > self.map_rows * self.map_cols:
            raise ValueError("join_k must be <= map_rows * map_cols")
        return self

    @property
    def n_neurons(self) -> int:
        return self.map_rows * self.map_cols

    @property
    def steps(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return STEPS_PER_NEURON * self.n_neurons

    @property
    def radius0(self) -> float:
        if self.sigma0 is not None:
            return self.sigma0
        return max(max(self.map_rows, self.map_cols) / 2.0, self.sigma_final)


class EnsembleConfig(_BaseSection):
    master_seed: int = Field(default=0, ge=0, le=SEED_MAX)
    runs: tuple[SomConfig, ...]
    epsilon: float = Field(default=1e-6, gt=0)
    ratio_cap: float = Field(default=1e6, gt=0)
    gap_delta: float = Field(default=0.5, gt=0, lt=1)
    thresholds: tuple[float, ...] = (1.0,)
    normalization: Literal["global", "per_snapshot"] = "global"
    snapshot_mode: Literal["single", "stacked"] = "single"
    clip_sigma: float | None = Field(default=None, gt=0)
    normalize_display: bool = False

    @field_validator("runs")
    @classmethod
    def _at_least_two_runs(cls, value: tuple[SomConfig, ...]) -> tuple[SomConfig, ...]:
        if len(value) < 2:
            raise ValueError(ErrorMessages.TOO_FEW_RUNS.format(count=len(value)))
        return value

    @field_validator("thresholds")
    @classmethod
    def _positive_thresholds(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("at least one threshold is required")
        if any(tau <= 0 for tau in value):
            raise ValueError("thresholds must be strictly positive")
        return value


class SynthConfig(_BaseSection):
    width: int = Field(default=128, ge=8)
    height: int = Field(default=128, ge=8)
    n_islands: int = Field(default=6, ge=0)
    island_radius: tuple[int, int] = (4, 10)
    n_sheets: int = Field(default=4, ge=0)
    sheet_thickness: tuple[int, int] = (2, 4)
    sheet_length: tuple[int, int] = (16, 48)
    noise_sigma: float = Field(default=0.3, ge=0)
    plateau: float = Field(default=2.0, gt=0)
    # Width in pixels of the linear fade outside each shape; 0 keeps hard edges.
    edge_width: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0, le=SEED_MAX)

    @model_validator(mode="after")
    def _shapes_fit(self) -> SynthConfig:
        for name in ("island_radius", "sheet_thickness", "sheet_length"):
            low, high = getattr(self, name)
            if low < 1 or high < low:
                raise ValueError(f"{name} must be an increasing range of positive integers")
        side = min(self.width, self.height)
        if 2 * self.island_radius[1] + 1 > side:
            raise ValueError("island_radius does not fit inside the raster")
        if self.sheet_length[1] + self.sheet_thickness[1] + 1 > side:
            raise ValueError("sheet_length/sheet_thickness do not fit inside the raster")
        return self


class ObservabilitySettings(_BaseSection):
    """Logging knobs, set from CLI flags only. Never affects outputs."""

    log_level: str = "INFO"
    log_format: Literal["human", "json"] = "human"

    @field_validator("log_level")
    @classmethod
    def _validate_log_level(cls, value: str) -> str:
        normalized = value.strip().upper()
        allowed = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}
        if normalized not in allowed:
            raise ValueError(f"Unsupported log level {value!r} (allowed: {sorted(allowed)})")
        return normalized
