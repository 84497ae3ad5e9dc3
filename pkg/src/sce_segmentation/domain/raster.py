"""Multi-channel feature rasters and their per-channel z-score normalization."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog

from sce_segmentation.domain.error_messages import format_dimension_mismatch
from sce_segmentation.domain.errors import (
    DegenerateChannelError,
    DimensionMismatchError,
    NonFiniteValueError,
)

log = structlog.get_logger(__name__)

NormalizationMode = Literal["global", "per_snapshot"]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FeatureRaster:
    """
    A width x height grid whose pixels carry `channels` real-valued features.

    `data` has shape (channels, height, width): channel-major, row-major within a channel.
    Values are held as float64; rasters read from disk are float32-exact.
    """

    width: int
    height: int
    data: np.ndarray
    channel_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise DimensionMismatchError(
                f"raster must be at least 1x1 (got {self.width}x{self.height})"
            )
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 3 or data.shape[1:] != (self.height, self.width) or data.shape[0] < 1:
            raise DimensionMismatchError(
                format_dimension_mismatch(
                    f"data shape {data.shape}", f"(channels, {self.height}, {self.width})"
                )
            )
        finite = np.isfinite(data)
        if not finite.all():
            index = int(np.flatnonzero(~finite)[0])
            raise NonFiniteValueError(f"raster: non-finite value at flat index {index}")

        names = tuple(self.channel_names) or tuple(f"c{i}" for i in range(data.shape[0]))
        if len(names) != data.shape[0]:
            raise DimensionMismatchError(
                format_dimension_mismatch(
                    f"{len(names)} channel names", f"{data.shape[0]} channels"
                )
            )
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "channel_names", names)

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def pixel_vectors(self) -> np.ndarray:
        """Pixels as an (n_pixels, channels) matrix in row-major pixel order."""
        return np.ascontiguousarray(self.data.reshape(self.channels, -1).T)

    def same_values(self, other: FeatureRaster) -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.channel_names == other.channel_names
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class NormStats:
    """Removed per-channel mean and population standard deviation."""

    mean: tuple[float, ...]
    scale: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.mean) != len(self.scale):
            raise DimensionMismatchError(
                format_dimension_mismatch(f"{len(self.mean)} means", f"{len(self.scale)} scales")
            )
        if any(not s > 0 for s in self.scale):
            raise ValueError("NormStats.scale must be > 0 for every channel")


def normalize(
    raster: FeatureRaster, *, clip_sigma: float | None = None
) -> tuple[FeatureRaster, NormStats]:
    """
    Per-channel z-score with the population standard deviation.

    Constant channels raise DegenerateChannelError. With `clip_sigma`, values are clipped
    symmetrically to +/- clip_sigma after scaling.
    """
    flat = raster.data.reshape(raster.channels, -1)
    for index, name in enumerate(raster.channel_names):
        if flat[index].min() == flat[index].max():
            raise DegenerateChannelError(name)

    mean = flat.mean(axis=1)
    scale = flat.std(axis=1)
    out = (raster.data - mean[:, None, None]) / scale[:, None, None]
    if clip_sigma is not None:
        out = np.clip(out, -clip_sigma, clip_sigma)

    stats = NormStats(
        mean=tuple(float(v) for v in mean),
        scale=tuple(float(v) for v in scale),
    )
    normalized = FeatureRaster(
        width=raster.width,
        height=raster.height,
        data=out,
        channel_names=raster.channel_names,
    )
    return normalized, stats


def denormalize(raster: FeatureRaster, stats: NormStats) -> FeatureRaster:
    if len(stats.mean) != raster.channels:
        raise DimensionMismatchError(
            format_dimension_mismatch(f"{len(stats.mean)} stats", f"{raster.channels} channels")
        )
    mean = np.asarray(stats.mean)[:, None, None]
    scale = np.asarray(stats.scale)[:, None, None]
    return FeatureRaster(
        width=raster.width,
        height=raster.height,
        data=raster.data * scale + mean,
        channel_names=raster.channel_names,
    )


def concat_rows(rasters: Sequence[FeatureRaster]) -> FeatureRaster:
    """Stack snapshots vertically into one tall raster (equal width and channels)."""
    if not rasters:
        raise ValueError("concat_rows requires at least one raster")
    first = rasters[0]
    for other in rasters[1:]:
        if other.width != first.width or other.channels != first.channels:
            raise DimensionMismatchError(
                format_dimension_mismatch(
                    f"{first.width} wide x {first.channels} channels",
                    f"{other.width} wide x {other.channels} channels",
                )
            )
    if len(rasters) == 1:
        return first
    return FeatureRaster(
        width=first.width,
        height=sum(r.height for r in rasters),
        data=np.concatenate([r.data for r in rasters], axis=1),
        channel_names=first.channel_names,
    )


def normalize_snapshots(
    rasters: Sequence[FeatureRaster],
    *,
    mode: NormalizationMode = "global",
    clip_sigma: float | None = None,
) -> tuple[FeatureRaster, list[NormStats]]:
    """
    Normalize one or more snapshots and return them stacked vertically.

    `global` computes statistics over all snapshot pixels together; `per_snapshot`
    normalizes each snapshot on its own.
    """
    if mode == "global" or len(rasters) == 1:
        normalized, stats = normalize(concat_rows(rasters), clip_sigma=clip_sigma)
        return normalized, [stats]

    parts: list[FeatureRaster] = []
    all_stats: list[NormStats] = []
    for raster in rasters:
        normalized, stats = normalize(raster, clip_sigma=clip_sigma)
        parts.append(normalized)
        all_stats.append(stats)
    log.debug("raster.normalized_per_snapshot", snapshots=len(parts))
    return concat_rows(parts), all_stats
