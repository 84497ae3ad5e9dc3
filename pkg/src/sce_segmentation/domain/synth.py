"""Synthetic three-class rasters (background, islands, sheets) with ground-truth labels."""
from __future__ import annotations

import math

import numpy as np
import structlog

from sce_segmentation.config.settings import SynthConfig
from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import PlacementError
from sce_segmentation.domain.raster import FeatureRaster
from sce_segmentation.domain.rng import STREAM_SYNTH, make_rng
from sce_segmentation.domain.som import Labeling

log = structlog.get_logger(__name__)

BACKGROUND = 0
ISLAND = 1
SHEET = 2
CLASS_NAMES = ("background", "island", "sheet")
CHANNEL_NAMES = ("field", "current", "dissipation")
MAX_ATTEMPTS = 1000


def class_plateaus(plateau: float) -> np.ndarray:
    """Noise-free channel values per class, indexed [class, channel]."""
    return np.array(
        [
            [0.0, 0.0, 0.0],
            [plateau, -plateau, 0.0],
            [-plateau, plateau, plateau],
        ]
    )


def _disk(yy: np.ndarray, xx: np.ndarray, cy: int, cx: int, radius: int) -> np.ndarray:
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius


def _segment_distance2(
    yy: np.ndarray, xx: np.ndarray, start: tuple[float, float], end: tuple[float, float]
) -> np.ndarray:
    """Squared distance of each pixel to the segment start-end, coordinates as (x, y)."""
    dx, dy = end[0] - start[0], end[1] - start[1]
    length2 = dx * dx + dy * dy
    px, py = xx - start[0], yy - start[1]
    t = np.clip((px * dx + py * dy) / length2, 0.0, 1.0)
    return (px - t * dx) ** 2 + (py - t * dy) ** 2


def _segment_band(
    yy: np.ndarray,
    xx: np.ndarray,
    start: tuple[float, float],
    end: tuple[float, float],
    half_width: float,
) -> np.ndarray:
    """Pixels within `half_width` of the segment start-end."""
    return _segment_distance2(yy, xx, start, end) <= half_width * half_width


def _fade(inside: np.ndarray, width: float) -> np.ndarray:
    """1 where `inside` >= 0, falling linearly to 0 at `width` pixels outside the shape."""
    return np.clip(inside / width + 1.0, 0.0, 1.0)


def _place_sheet(
    rng: np.random.Generator, config: SynthConfig, index: int
) -> tuple[tuple[float, float], tuple[float, float], float]:
    low_len, high_len = config.sheet_length
    low_thick, high_thick = config.sheet_thickness
    for _ in range(MAX_ATTEMPTS):
        length = float(rng.integers(low_len, high_len + 1))
        half = float(rng.integers(low_thick, high_thick + 1)) / 2.0
        angle = float(rng.uniform(0.0, math.pi))
        cx = float(rng.uniform(0.0, config.width - 1))
        cy = float(rng.uniform(0.0, config.height - 1))
        ox, oy = 0.5 * length * math.cos(angle), 0.5 * length * math.sin(angle)
        start, end = (cx - ox, cy - oy), (cx + ox, cy + oy)
        xs, ys = (start[0], end[0]), (start[1], end[1])
        if (
            min(xs) - half >= 0
            and max(xs) + half <= config.width - 1
            and min(ys) - half >= 0
            and max(ys) + half <= config.height - 1
        ):
            return start, end, half
    raise PlacementError(
        ErrorMessages.PLACEMENT_FAILED.format(
            shape="sheet",
            index=index,
            width=config.width,
            height=config.height,
            attempts=MAX_ATTEMPTS,
        )
    )


def generate(config: SynthConfig) -> tuple[FeatureRaster, Labeling]:
    """
    Draw islands (lattice disks, fully inside the raster) and then sheets (rotated segments
    dilated to their thickness); sheets overwrite islands where they overlap.

    Channel values are the class plateaus plus Gaussian noise, rounded to float32 so the
    raster survives a save/load cycle unchanged. With `edge_width` > 0 each shape's plateau
    also fades linearly over that many pixels into its surroundings; labels stay hard.
    """
    rng = make_rng(config.seed, STREAM_SYNTH)
    yy, xx = np.mgrid[0 : config.height, 0 : config.width]
    labels = np.full((config.height, config.width), BACKGROUND, dtype=np.int32)
    edge = config.edge_width
    island_level = np.zeros(labels.shape)
    sheet_level = np.zeros(labels.shape)

    low_r, high_r = config.island_radius
    for _ in range(config.n_islands):
        radius = int(rng.integers(low_r, high_r + 1))
        cy = int(rng.integers(radius, config.height - radius))
        cx = int(rng.integers(radius, config.width - radius))
        labels[_disk(yy, xx, cy, cx, radius)] = ISLAND
        if edge > 0:
            distance = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
            np.maximum(island_level, _fade(radius - distance, edge), out=island_level)

    for index in range(config.n_sheets):
        start, end, half = _place_sheet(rng, config, index)
        labels[_segment_band(yy, xx, start, end, half)] = SHEET
        if edge > 0:
            distance = np.sqrt(_segment_distance2(yy, xx, start, end))
            np.maximum(sheet_level, _fade(half - distance, edge), out=sheet_level)

    plateaus = class_plateaus(config.plateau)
    if edge > 0:
        data = (
            plateaus[ISLAND][:, None, None] * (island_level * (1.0 - sheet_level))
            + plateaus[SHEET][:, None, None] * sheet_level
        )
    else:
        data = plateaus[labels].transpose(2, 0, 1)
    if config.noise_sigma > 0:
        data = data + rng.normal(0.0, config.noise_sigma, size=data.shape)
    data = data.astype(np.float32).astype(np.float64)

    truth = Labeling(
        width=config.width,
        height=config.height,
        labels=labels,
        n_clusters=len(CLASS_NAMES),
        allow_absent=True,
    )
    log.debug(
        "synth.generated",
        width=config.width,
        height=config.height,
        class_counts=truth.counts(),
    )
    raster = FeatureRaster(
        width=config.width, height=config.height, data=data, channel_names=CHANNEL_NAMES
    )
    return raster, truth
