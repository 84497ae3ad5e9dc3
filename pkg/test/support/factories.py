from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np

from sce_segmentation.config.settings import EnsembleConfig, SomConfig, SynthConfig
from sce_segmentation.domain.mask import ClusterMask, MaskSet, masks_from_labeling
from sce_segmentation.domain.raster import FeatureRaster
from sce_segmentation.domain.som import Labeling


def make_som_config(**overrides: Any) -> SomConfig:
    data: dict[str, Any] = {
        "map_rows": 3,
        "map_cols": 3,
        "alpha0": 0.5,
        "iterations": 200,
        "join_k": 2,
        "seed": 1,
    }
    data.update(overrides)
    return SomConfig(**data)


def make_ensemble_config(
    *,
    runs: int = 3,
    join_ks: Sequence[int] = (2, 3),
    **overrides: Any,
) -> EnsembleConfig:
    run_configs = tuple(
        make_som_config(join_k=join_ks[i % len(join_ks)], alpha0=0.5 + 0.1 * (i % 3))
        for i in range(runs)
    )
    data: dict[str, Any] = {"master_seed": 7, "runs": run_configs}
    data.update(overrides)
    return EnsembleConfig(**data)


def make_synth_config(**overrides: Any) -> SynthConfig:
    data: dict[str, Any] = {
        "width": 32,
        "height": 32,
        "n_islands": 2,
        "island_radius": (3, 4),
        "n_sheets": 1,
        "sheet_thickness": (2, 2),
        "sheet_length": (10, 14),
        "noise_sigma": 0.1,
        "seed": 3,
    }
    data.update(overrides)
    return SynthConfig(**data)


def make_raster(values: Any, **kwargs: Any) -> FeatureRaster:
    data = np.asarray(values, dtype=np.float64)
    return FeatureRaster(width=data.shape[2], height=data.shape[1], data=data, **kwargs)


def two_blob_raster(
    *, n: int = 16, seed: int = 0, separation: float = 10.0
) -> tuple[FeatureRaster, np.ndarray]:
    """Left half of the image drawn around 0, right half around `separation` (unit noise)."""
    rng = np.random.default_rng(seed)
    truth = np.zeros((n, n), dtype=np.int64)
    truth[:, n // 2 :] = 1
    centers = np.array([[0.0, 0.0], [separation, separation]])
    data = centers[truth].transpose(2, 0, 1) + rng.normal(0.0, 1.0, size=(2, n, n))
    return FeatureRaster(width=n, height=n, data=data), truth


def mask_from_bits(bits: Any, run: int = 0, cluster: int = 0) -> ClusterMask:
    array = np.asarray(bits, dtype=bool)
    if array.ndim == 1:
        array = array[None, :]
    return ClusterMask.from_bool(array, origin=(run, cluster))


def mask_set_from_labels(labels: Any, run: int) -> MaskSet:
    array = np.asarray(labels, dtype=np.int32)
    if array.ndim == 1:
        array = array[None, :]
    present = np.unique(array)
    compact = np.searchsorted(present, array)
    labeling = Labeling(
        width=array.shape[1], height=array.shape[0], labels=compact, n_clusters=int(present.size)
    )
    return masks_from_labeling(labeling, run=run)


def random_mask_sets(
    rng: np.random.Generator, *, runs: int, max_clusters: int, shape: tuple[int, int]
) -> list[MaskSet]:
    """Random labelings (1..max_clusters clusters each) as mask sets of runs 0..runs-1."""
    sets: list[MaskSet] = []
    for run in range(runs):
        k = int(rng.integers(1, max_clusters + 1))
        sets.append(mask_set_from_labels(rng.integers(0, k, size=shape), run=run))
    return sets
