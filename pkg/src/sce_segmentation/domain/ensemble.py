"""Statistically combined ensemble: independent SOM runs, stacking, ranking and consensus."""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
import structlog
from joblib import Parallel, delayed

from sce_segmentation.config.settings import EnsembleConfig, SomConfig
from sce_segmentation.domain.error_messages import ErrorMessages, format_dimension_mismatch
from sce_segmentation.domain.errors import (
    ContractViolationError,
    DimensionMismatchError,
    EmptyMaskError,
    InsufficientRunsError,
    wrap_stage_error,
)
from sce_segmentation.domain.mask import ClusterMask, MaskId, MaskSet, masks_from_labeling
from sce_segmentation.domain.metrics import (
    DEFAULT_EPSILON,
    DEFAULT_RATIO_CAP,
    GsumResult,
    g_sum_matrix,
    score_pair,
)
from sce_segmentation.domain.raster import FeatureRaster
from sce_segmentation.domain.rng import derive_seed
from sce_segmentation.domain.som import (
    Labeling,
    SomMap,
    init_map,
    label_pixels,
    quantization_error,
    train,
)
from sce_segmentation.observability.logger import active_logging, ensure_logging

log = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class RunResult:
    index: int
    config: SomConfig
    som_map: SomMap
    labeling: Labeling
    mask_set: MaskSet
    quantization_error: float


@dataclass(frozen=True, eq=False)
class SceOutput:
    """
    Everything one ensemble produces.

    `ranking` holds indices into `results`; `cutoff_rank` ranked masks are selected.
    `consensus` maps each threshold to the consensus masks of the selected masks, in
    ranking order (empty thresholdings are left out). `groups` are ranking positions split
    at large relative drops of g_sum.
    """

    mask_sets: tuple[MaskSet, ...]
    results: tuple[GsumResult, ...]
    ranking: tuple[int, ...]
    cutoff_rank: int
    consensus: dict[float, tuple[ClusterMask, ...]] = field(default_factory=dict)
    groups: tuple[tuple[int, ...], ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        first = self.mask_sets[0].masks[0]
        return first.shape

    def ranked(self) -> list[GsumResult]:
        return [self.results[i] for i in self.ranking]

    def selected_ids(self) -> list[MaskId]:
        return [self.results[i].base_id for i in self.ranking[: self.cutoff_rank]]


def run_config_for(config: EnsembleConfig, index: int) -> SomConfig:
    """Run `index` of the grid with its seed derived from the master seed."""
    return config.runs[index].model_copy(
        update={"seed": derive_seed(config.master_seed, index)}
    )


def _train_one(
    raster: FeatureRaster,
    run_config: SomConfig,
    index: int,
    logging_options: dict[str, str] | None,
) -> RunResult:
    ensure_logging(logging_options)
    try:
        som_map = init_map(run_config, raster)
        som_map = train(som_map, raster, run_config)
        labeling = label_pixels(som_map, raster, run_config)
        return RunResult(
            index=index,
            config=run_config,
            som_map=som_map,
            labeling=labeling,
            mask_set=masks_from_labeling(labeling, run=index),
            quantization_error=quantization_error(som_map, raster),
        )
    except Exception as exc:
        raise wrap_stage_error(exc, stage="som", run_index=index) from exc


def train_runs(
    raster: FeatureRaster, config: EnsembleConfig, *, workers: int = 1
) -> list[RunResult]:
    """
    Train and label every run of the grid; output order follows the grid.

    Runs execute in separate processes when `workers` != 1; results do not depend on it.
    """
    options = active_logging()
    jobs = (
        delayed(_train_one)(raster, run_config_for(config, index), index, options)
        for index in range(len(config.runs))
    )
    with Parallel(n_jobs=workers, backend="loky") as parallel:
        runs: list[RunResult] = list(parallel(jobs))

    for run in runs:
        log.info(
            "ensemble.run_done",
            run_index=run.index,
            n_clusters=run.labeling.n_clusters,
            requested_clusters=run.labeling.requested_clusters,
            quantization_error=round(run.quantization_error, 6),
        )
    return runs


def snapshot_mask_sets(labelings: Sequence[Labeling], start: int, stop: int) -> list[MaskSet]:
    """
    Mask sets of one snapshot: every run's labeling (run id = position) cut to the rows
    [start, stop) of the stacked raster. Clusters absent from the snapshot are dropped.
    """
    return [
        masks_from_labeling(labeling.rows(start, stop), run=run)
        for run, labeling in enumerate(labelings)
    ]


def run_ensemble(
    raster: FeatureRaster, config: EnsembleConfig, *, workers: int = 1
) -> list[MaskSet]:
    return [run.mask_set for run in train_runs(raster, config, workers=workers)]


def stack(
    mask_sets: Sequence[MaskSet],
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
    workers: int = 1,
) -> list[GsumResult]:
    """
    Rotate every mask set through the base role and stack all other runs onto it.

    Results are ordered by (run, cluster) whatever the order of `mask_sets`.
    """
    if len(mask_sets) < 2:
        raise InsufficientRunsError(ErrorMessages.TOO_FEW_RUNS.format(count=len(mask_sets)))
    runs = [mask_set.run for mask_set in mask_sets]
    if len(set(runs)) != len(runs):
        raise ContractViolationError(f"mask sets must come from distinct runs (got {runs})")

    ordered = sorted(mask_sets, key=lambda mask_set: mask_set.run)
    shape = ordered[0].masks[0].shape
    for mask_set in ordered:
        for mask in mask_set.masks:
            if mask.shape != shape:
                raise DimensionMismatchError(format_dimension_mismatch(shape, mask.shape))

    bits = {mask.origin: mask.to_bool() for mask_set in ordered for mask in mask_set.masks}

    def _others(run: int) -> list[ClusterMask]:
        return [m for mask_set in ordered if mask_set.run != run for m in mask_set.masks]

    jobs = (
        delayed(g_sum_matrix)(
            base,
            _others(mask_set.run),
            epsilon=epsilon,
            ratio_cap=ratio_cap,
            bits_cache=bits,
        )
        for mask_set in ordered
        for base in mask_set.masks
    )
    with Parallel(n_jobs=workers, backend="threading") as parallel:
        results: list[GsumResult] = list(parallel(jobs))

    log.info(
        "ensemble.stacked",
        runs=len(ordered),
        masks=len(results),
        comparisons=sum(result.comparisons for result in results),
    )
    return results


def rank(results: Sequence[GsumResult]) -> list[int]:
    """Indices of `results` by descending g_sum; ties by ascending (run, cluster)."""
    return sorted(
        range(len(results)),
        key=lambda i: (-results[i].g_scalar, results[i].base_id),
    )


def _check_gap_delta(gap_delta: float) -> None:
    if not 0 < gap_delta < 1:
        raise ValueError(f"gap_delta must be in (0, 1) (got {gap_delta})")


def detect_gap(values: Sequence[float], gap_delta: float) -> int:
    """
    Cutoff rank for g_sum values given in ranking order.

    Returns the smallest k with values[k] < (1 - gap_delta) * values[k - 1], or len(values)
    when there is no such drop.
    """
    _check_gap_delta(gap_delta)
    if len(values) < 2:
        raise ContractViolationError(ErrorMessages.TOO_FEW_RANKED.format(count=len(values)))
    keep = 1.0 - gap_delta
    for k in range(1, len(values)):
        if values[k] < keep * values[k - 1]:
            return k
    return len(values)


def group_by_gap(values: Sequence[float], gap_delta: float) -> list[tuple[int, ...]]:
    """Split ranking positions wherever g_sum drops by more than `gap_delta` (relative)."""
    _check_gap_delta(gap_delta)
    if not values:
        return []
    keep = 1.0 - gap_delta
    groups: list[tuple[int, ...]] = []
    current = [0]
    for k in range(1, len(values)):
        if values[k] < keep * values[k - 1]:
            groups.append(tuple(current))
            current = []
        current.append(k)
    groups.append(tuple(current))
    return groups


def threshold_mask(g: GsumResult, tau: float) -> ClusterMask:
    """Consensus mask: pixels whose G_sum value exceeds `tau`."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0 (got {tau})")
    bits = g.g_map > tau
    if not bits.any():
        raise EmptyMaskError(
            tau, f"threshold tau={tau:g} leaves no pixel of {g.base_id} in the mask"
        )
    return ClusterMask.from_bool(bits, origin=g.base_id)


def build_consensus(
    results: Sequence[GsumResult],
    ranking: Sequence[int],
    cutoff_rank: int,
    thresholds: Iterable[float],
) -> tuple[dict[float, tuple[ClusterMask, ...]], int]:
    """Threshold the G_sum maps of the selected masks; empty outcomes are dropped and counted."""
    consensus: dict[float, tuple[ClusterMask, ...]] = {}
    dropped = 0
    for tau in thresholds:
        kept: list[ClusterMask] = []
        for index in ranking[:cutoff_rank]:
            try:
                kept.append(threshold_mask(results[index], tau))
            except EmptyMaskError:
                dropped += 1
                log.info(
                    "mask.empty_cluster_dropped", base=str(results[index].base_id), tau=tau
                )
        consensus[tau] = tuple(kept)
    return consensus, dropped


def build_sce(
    mask_sets: Sequence[MaskSet], config: EnsembleConfig, *, workers: int = 1
) -> SceOutput:
    """Stack, rank, cut at the g_sum gap and threshold into consensus masks."""
    results = stack(
        mask_sets, epsilon=config.epsilon, ratio_cap=config.ratio_cap, workers=workers
    )
    ranking = rank(results)
    values = [results[i].g_scalar for i in ranking]
    cutoff = detect_gap(values, config.gap_delta)
    consensus, _ = build_consensus(results, ranking, cutoff, config.thresholds)
    log.info("ensemble.ranked", masks=len(results), cutoff_rank=cutoff)
    return SceOutput(
        mask_sets=tuple(sorted(mask_sets, key=lambda mask_set: mask_set.run)),
        results=tuple(results),
        ranking=tuple(ranking),
        cutoff_rank=cutoff,
        consensus=consensus,
        groups=tuple(group_by_gap(values, config.gap_delta)),
    )


# ---------------------------------------------------------------------------
# Comparing two ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    kind: str
    tau: float | None
    a_id: MaskId
    b_id: MaskId
    s_i: float
    q_u: float
    dice: float


@dataclass(frozen=True)
class ComparisonSummary:
    kind: str
    tau: float | None
    masks: int
    median_best_match: float
    split_low: float
    split_high: float


def _pairs(
    kind: str,
    tau: float | None,
    left: Sequence[ClusterMask],
    right: Sequence[ClusterMask],
) -> list[ComparisonRow]:
    rows: list[ComparisonRow] = []
    for a in left:
        for b in right:
            score = score_pair(a, b)
            rows.append(
                ComparisonRow(kind, tau, a.origin, b.origin, score.s_i, score.q_u, score.dice)
            )
    return rows


def compare_ensembles(
    a: SceOutput, b: SceOutput, taus: Iterable[float]
) -> list[ComparisonRow]:
    """
    Pairwise s_I between the consensus masks of two ensembles at each tau, followed by
    every SOM-vs-SOM pair across the two underlying run sets as a baseline.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(format_dimension_mismatch(a.shape, b.shape))

    rows: list[ComparisonRow] = []
    for tau in taus:
        if tau not in a.consensus or tau not in b.consensus:
            raise ContractViolationError(f"both ensembles must be thresholded at tau={tau:g}")
        rows.extend(_pairs("sce", tau, a.consensus[tau], b.consensus[tau]))

    a_masks = [mask for mask_set in a.mask_sets for mask in mask_set.masks]
    b_masks = [mask for mask_set in b.mask_sets for mask in mask_set.masks]
    rows.extend(_pairs("som", None, a_masks, b_masks))
    return rows


def best_matches(rows: Iterable[ComparisonRow], kind: str, tau: float | None) -> list[float]:
    """Highest s_I each left-hand mask reaches against any right-hand mask."""
    best: dict[MaskId, float] = {}
    for row in rows:
        if row.kind != kind or row.tau != tau:
            continue
        best[row.a_id] = max(best.get(row.a_id, 0.0), row.s_i)
    return [best[key] for key in sorted(best)]


def largest_gap(values: Sequence[float]) -> tuple[float, float]:
    """The two neighbours in sorted order that are furthest apart (the bimodal split)."""
    ordered = sorted(values)
    if len(ordered) < 2:
        value = ordered[0] if ordered else 0.0
        return value, value
    gaps = np.diff(ordered)
    at = int(np.argmax(gaps))
    return ordered[at], ordered[at + 1]


def summarize(rows: Sequence[ComparisonRow]) -> list[ComparisonSummary]:
    keys = sorted(
        {(row.kind, row.tau) for row in rows},
        key=lambda key: (key[0] != "sce", key[1] if key[1] is not None else 0.0),
    )
    summaries: list[ComparisonSummary] = []
    for kind, tau in keys:
        best = best_matches(rows, kind, tau)
        low, high = largest_gap([row.s_i for row in rows if (row.kind, row.tau) == (kind, tau)])
        summaries.append(
            ComparisonSummary(
                kind=kind,
                tau=tau,
                masks=len(best),
                median_best_match=float(np.median(best)) if best else 0.0,
                split_low=low,
                split_high=high,
            )
        )
    return summaries
