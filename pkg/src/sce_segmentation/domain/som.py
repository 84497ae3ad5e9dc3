"""Rectangular Kohonen self-organizing map: training and pixel labeling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog
from sklearn.cluster import AgglomerativeClustering, KMeans
from threadpoolctl import threadpool_limits

from sce_segmentation.config.settings import SomConfig
from sce_segmentation.domain.error_messages import ErrorMessages, format_dimension_mismatch
from sce_segmentation.domain.errors import DimensionMismatchError, EmptyDataError
from sce_segmentation.domain.raster import FeatureRaster
from sce_segmentation.domain.rng import STREAM_INIT, STREAM_JOIN, STREAM_SAMPLE, make_rng

log = structlog.get_logger(__name__)

# Neurons whose neighborhood weight falls below this are left untouched by a step.
NEIGHBORHOOD_CUTOFF = 1e-6
JOIN_MAX_ITER = 50
_BMU_CHUNK = 1 << 12


@dataclass(frozen=True, eq=False)
class SomMap:
    """An m x n lattice of weight vectors; neuron i sits at grid (i // cols, i % cols)."""

    rows: int
    cols: int
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64, copy=True)
        if weights.ndim != 2 or weights.shape[0] != self.rows * self.cols:
            raise DimensionMismatchError(
                format_dimension_mismatch(
                    f"weights {weights.shape}", f"({self.rows * self.cols}, l)"
                )
            )
        if not np.isfinite(weights).all():
            raise ValueError("SOM weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def n_neurons(self) -> int:
        return self.rows * self.cols

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1])

    def same_weights(self, other: SomMap) -> bool:
        return (
            (self.rows, self.cols) == (other.rows, other.cols)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class Labeling:
    """
    Per-pixel cluster ids, compacted so every id in 0..n_clusters-1 occurs.

    Ground-truth labelings keep fixed class ids and set `allow_absent`; their ids only
    need to lie in 0..n_clusters-1.
    """

    width: int
    height: int
    labels: np.ndarray
    n_clusters: int
    requested_clusters: int | None = None
    allow_absent: bool = False

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int32, copy=True).reshape(self.height, self.width)
        present = np.unique(labels)
        if self.allow_absent:
            valid = bool(present.size) and present[0] >= 0 and present[-1] < self.n_clusters
        else:
            valid = np.array_equal(present, np.arange(self.n_clusters))
        if not valid:
            raise ValueError(
                f"labels {present.tolist()} do not fit n_clusters={self.n_clusters}"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def counts(self) -> list[int]:
        return np.bincount(self.labels.ravel(), minlength=self.n_clusters).tolist()

    def rows(self, start: int, stop: int) -> Labeling:
        """Rows [start, stop); ids keep their meaning, so some may be absent from the slice."""
        if not 0 <= start < stop <= self.height:
            raise ValueError(f"rows [{start}, {stop}) outside a labeling of height {self.height}")
        return Labeling(
            width=self.width,
            height=stop - start,
            labels=self.labels[start:stop],
            n_clusters=self.n_clusters,
            requested_clusters=self.requested_clusters,
            allow_absent=True,
        )

    def same_labels(self, other: Labeling) -> bool:
        return self.n_clusters == other.n_clusters and np.array_equal(self.labels, other.labels)


def _as_data(data: np.ndarray | FeatureRaster, what: str) -> np.ndarray:
    if isinstance(data, FeatureRaster):
        matrix = data.pixel_vectors()
    else:
        matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise EmptyDataError(ErrorMessages.EMPTY_DATA.format(what=what))
    return matrix


def _check_length(som_map: SomMap, length: int) -> None:
    if length != som_map.n_features:
        raise DimensionMismatchError(
            format_dimension_mismatch(
                f"vector length {length}", f"map features {som_map.n_features}"
            )
        )


def grid_coordinates(rows: int, cols: int) -> np.ndarray:
    flat = np.arange(rows * cols)
    return np.stack([flat // cols, flat % cols], axis=1).astype(np.float64)


def init_map(config: SomConfig, data: np.ndarray | FeatureRaster) -> SomMap:
    """Draw each weight coordinate uniformly from that coordinate's [min, max] over the data."""
    matrix = _as_data(data, "init_map")
    low = matrix.min(axis=0)
    high = matrix.max(axis=0)
    rng = make_rng(config.seed, STREAM_INIT)
    draws = rng.random((config.n_neurons, matrix.shape[1]))
    weights = np.clip(low + (high - low) * draws, low, high)
    return SomMap(rows=config.map_rows, cols=config.map_cols, weights=weights)


def bmu(som_map: SomMap, x: np.ndarray) -> int:
    """Index of the nearest neuron (Euclidean); ties go to the lowest flat index."""
    vector = np.asarray(x, dtype=np.float64)
    _check_length(som_map, vector.shape[-1] if vector.ndim else 1)
    d2 = ((som_map.weights - vector) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def bmu_many(som_map: SomMap, data: np.ndarray) -> np.ndarray:
    """Vectorized bmu over the rows of `data`, evaluated chunk by chunk."""
    matrix = _as_data(data, "bmu_many")
    _check_length(som_map, matrix.shape[1])
    out = np.empty(matrix.shape[0], dtype=np.int64)
    weights = som_map.weights
    for start in range(0, matrix.shape[0], _BMU_CHUNK):
        chunk = matrix[start : start + _BMU_CHUNK]
        d2 = ((chunk[:, None, :] - weights[None, :, :]) ** 2).sum(axis=2)
        out[start : start + chunk.shape[0]] = np.argmin(d2, axis=1)
    return out


def _linear(start: float, end: float, t: int, steps: int) -> float:
    if steps <= 1:
        return start
    return start + (end - start) * (t / (steps - 1))


def radius_at(t: int, config: SomConfig) -> float:
    return _linear(config.radius0, config.sigma_final, t, config.steps)


def learning_rate_at(t: int, config: SomConfig) -> float:
    return _linear(config.alpha0, config.alpha_final, t, config.steps)


def neighborhood_weight(t: int, c: int, i: int, config: SomConfig) -> float:
    """Gaussian h_ci(t) over the Euclidean grid distance between neurons c and i."""
    if not 0 <= t < config.steps:
        raise ValueError(f"step {t} outside [0, {config.steps})")
    cols = config.map_cols
    g2 = float((c // cols - i // cols) ** 2 + (c % cols - i % cols) ** 2)
    sigma = radius_at(t, config)
    return float(np.exp(-g2 / (2.0 * sigma * sigma)))


def apply_update(weights: np.ndarray, x: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """
    One learning step w_i <- w_i + f_i (x - w_i) with 0 <= f_i <= 1.

    Written as a convex combination and clipped to the per-coordinate hull of {w_i, x}.
    """
    f = np.asarray(factors, dtype=np.float64)[:, None]
    updated = (1.0 - f) * weights + f * x
    return np.clip(updated, np.minimum(weights, x), np.maximum(weights, x))


def train(som_map: SomMap, data: np.ndarray | FeatureRaster, config: SomConfig) -> SomMap:
    """Online training: T steps, each sampling one vector uniformly with replacement."""
    matrix = _as_data(data, "train")
    _check_length(som_map, matrix.shape[1])

    steps = config.steps
    rng = make_rng(config.seed, STREAM_SAMPLE)
    samples = rng.integers(0, matrix.shape[0], size=steps)

    coords = grid_coordinates(som_map.rows, som_map.cols)
    grid_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)

    weights = np.array(som_map.weights, copy=True)
    for t in range(steps):
        x = matrix[samples[t]]
        c = int(np.argmin(((weights - x) ** 2).sum(axis=1)))
        sigma = radius_at(t, config)
        h = np.exp(-grid_d2[c] / (2.0 * sigma * sigma))
        active = h >= NEIGHBORHOOD_CUTOFF
        factors = learning_rate_at(t, config) * h[active]
        weights[active] = apply_update(weights[active], x, factors)

    return SomMap(rows=som_map.rows, cols=som_map.cols, weights=weights)


def quantization_error(som_map: SomMap, data: np.ndarray | FeatureRaster) -> float:
    matrix = _as_data(data, "quantization_error")
    winners = bmu_many(som_map, matrix)
    distances = np.sqrt(((matrix - som_map.weights[winners]) ** 2).sum(axis=1))
    return float(distances.mean())


def join_neurons(weights: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Group neuron weight vectors into k prototype clusters with seeded k-means."""
    if k <= 1:
        return np.zeros(weights.shape[0], dtype=np.int64)
    random_state = int(make_rng(seed, STREAM_JOIN).integers(0, 2**31 - 1))
    model = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=1,
        max_iter=JOIN_MAX_ITER,
        random_state=random_state,
    )
    # Single-threaded so the result does not depend on the host's core count.
    with threadpool_limits(limits=1):
        groups = model.fit_predict(weights)
    return np.asarray(groups, dtype=np.int64)


def link_neurons(weights: np.ndarray, k: int, live: np.ndarray) -> np.ndarray:
    """
    Single-linkage groups of the live neurons (those winning at least one pixel), cut at k.

    A dense region of the data stays one group however many neurons it occupies. Neurons
    that win nothing take the group of their nearest live neuron.
    """
    groups = np.zeros(weights.shape[0], dtype=np.int64)
    live_index = np.flatnonzero(live)
    if k <= 1 or live_index.size < 2:
        return groups
    model = AgglomerativeClustering(n_clusters=min(k, live_index.size), linkage="single")
    with threadpool_limits(limits=1):
        fitted = model.fit_predict(weights[live_index])
    live_groups = np.asarray(fitted, dtype=np.int64)
    groups[live_index] = live_groups
    dead = np.flatnonzero(~live)
    if dead.size:
        d2 = ((weights[dead][:, None, :] - weights[live_index][None, :, :]) ** 2).sum(axis=2)
        groups[dead] = live_groups[np.argmin(d2, axis=1)]
    return groups


def label_pixels(
    som_map: SomMap,
    raster: FeatureRaster,
    config: SomConfig,
    *,
    join_k: int | None = None,
) -> Labeling:
    """
    Label each pixel with the group (k-means or single linkage) of its BMU.

    Empty groups are removed and ids compacted (ascending group id), so n_clusters <= k.
    A k above the number of distinct weight vectors that can be joined is reduced with a
    warning.
    """
    _check_length(som_map, raster.channels)
    requested = config.join_k if join_k is None else join_k
    winners = bmu_many(som_map, raster.pixel_vectors())
    live = np.zeros(som_map.n_neurons, dtype=bool)
    live[winners] = True
    candidates = som_map.weights[live] if config.join_method == "linkage" else som_map.weights
    distinct = int(np.unique(candidates, axis=0).shape[0])
    k = requested
    if k > distinct:
        log.warning("som.join_k_reduced", requested=requested, distinct_weights=distinct)
        k = distinct

    if config.join_method == "linkage":
        groups = link_neurons(som_map.weights, k, live)
    else:
        groups = join_neurons(som_map.weights, k, config.seed)
    raw = groups[winners]
    present = np.unique(raw)
    compact = np.searchsorted(present, raw)
    return Labeling(
        width=raster.width,
        height=raster.height,
        labels=compact.reshape(raster.height, raster.width),
        n_clusters=int(present.size),
        requested_clusters=requested,
    )
