"""End-to-end run: load -> normalize -> SOM runs -> stack -> rank -> gap -> threshold -> write."""
from __future__ import annotations

import json
import time
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import numpy as np
import structlog

from sce_segmentation.adapters.formats.csv_tables import format_groups, format_rankings
from sce_segmentation.adapters.formats.frst import load_raster, save_raster
from sce_segmentation.adapters.formats.msk import save_mask
from sce_segmentation.adapters.formats.pgm import encode_gsum_log, save_labeling
from sce_segmentation.adapters.formats.som_file import save_som
from sce_segmentation.adapters.storage.fs_storage import write_atomic_bytes, write_atomic_text
from sce_segmentation.adapters.storage.layout import RunLayout, config_hash
from sce_segmentation.config.settings import EnsembleConfig
from sce_segmentation.domain.ensemble import (
    RunResult,
    SceOutput,
    build_consensus,
    detect_gap,
    group_by_gap,
    rank,
    snapshot_mask_sets,
    stack,
    train_runs,
)
from sce_segmentation.domain.errors import wrap_stage_error
from sce_segmentation.domain.manifest import (
    RunManifest,
    ViewSummary,
    build_run_manifest,
    verify_inventory,
)
from sce_segmentation.domain.mask import MaskSet
from sce_segmentation.domain.metrics import GsumResult
from sce_segmentation.domain.raster import FeatureRaster, normalize_snapshots
from sce_segmentation.domain.time_utils import StageTimer
from sce_segmentation.observability.metrics import RunMetrics

log = structlog.get_logger(__name__)

T = TypeVar("T")


class _Stages:
    """Times each stage, feeds the metrics histogram and names the stage on failure."""

    def __init__(self, metrics: RunMetrics) -> None:
        self.timer = StageTimer()
        self.metrics = metrics

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        except Exception as exc:
            raise wrap_stage_error(exc, stage=name) from exc
        elapsed = self.timer.record(name, started)
        self.metrics.stage_seconds.labels(stage=name).observe(elapsed)
        log.info("pipeline.stage_done", stage=name, seconds=round(elapsed, 3))

    def run(self, name: str, func: Callable[[], T]) -> T:
        with self.stage(name):
            return func()


def snapshot_rows(rasters: Sequence[FeatureRaster]) -> list[tuple[int, int]]:
    """[start, stop) row range of each snapshot inside the stacked raster."""
    ranges: list[tuple[int, int]] = []
    start = 0
    for raster in rasters:
        ranges.append((start, start + raster.height))
        start += raster.height
    return ranges


@dataclass(frozen=True, eq=False)
class SnapshotView:
    """Stacking, ranking and consensus of one snapshot; `snapshot` is None in single mode."""

    snapshot: int | None
    rows: tuple[int, int]
    layout: RunLayout
    output: SceOutput


@dataclass(frozen=True, eq=False)
class PipelineResult:
    layout: RunLayout
    manifest: RunManifest
    views: tuple[SnapshotView, ...]
    runs: tuple[RunResult, ...]

    @property
    def output(self) -> SceOutput:
        """The single view's output (snapshot 0 in stacked mode)."""
        return self.views[0].output


def _plan_views(
    config: EnsembleConfig, rasters: Sequence[FeatureRaster], layout: RunLayout
) -> list[tuple[int | None, tuple[int, int], RunLayout]]:
    rows = snapshot_rows(rasters)
    if config.snapshot_mode == "single":
        if len(rasters) > 1:
            raise ValueError(
                f"{len(rasters)} input rasters need snapshot_mode = stacked "
                "(single mode takes exactly one)"
            )
        return [(None, rows[0], layout)]
    return [(index, span, layout.view(index)) for index, span in enumerate(rows)]


def _assemble(
    mask_sets: Sequence[MaskSet],
    results: list[GsumResult],
    config: EnsembleConfig,
    stages: _Stages,
) -> tuple[SceOutput, int]:
    with stages.stage("rank"):
        ranking = rank(results)
        values = [results[i].g_scalar for i in ranking]
        cutoff = detect_gap(values, config.gap_delta)
        groups = group_by_gap(values, config.gap_delta)
    with stages.stage("threshold"):
        consensus, dropped = build_consensus(results, ranking, cutoff, config.thresholds)
    output = SceOutput(
        mask_sets=tuple(mask_sets),
        results=tuple(results),
        ranking=tuple(ranking),
        cutoff_rank=cutoff,
        consensus=consensus,
        groups=tuple(groups),
    )
    return output, dropped


class _Writer:
    """Writes under the run root; every tracked path is listed relative to that root."""

    def __init__(self, layout: RunLayout) -> None:
        self.layout = layout
        self.files: list[str] = []

    def track(self, paths: Path | Sequence[Path]) -> None:
        for path in [paths] if isinstance(paths, Path) else paths:
            self.files.append(self.layout.relative(path))

    def text(self, path: Path, text: str) -> None:
        write_atomic_text(path, text, storage_root=self.layout.root)
        self.track(path)

    def blob(self, path: Path, data: bytes) -> None:
        write_atomic_bytes(path, data, storage_root=self.layout.root)
        self.track(path)


def _write_run_artifacts(
    writer: _Writer, config: EnsembleConfig, runs: Sequence[RunResult]
) -> None:
    layout = writer.layout
    payload = json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)
    writer.text(layout.config_json, payload + "\n")
    for run in runs:
        writer.track(save_som(run.som_map, layout.som_file(run.index), storage_root=layout.root))
        writer.track(
            save_labeling(run.labeling, layout.labels_pgm(run.index), storage_root=layout.root)
        )


def _write_view(
    writer: _Writer, config: EnsembleConfig, view: SnapshotView, *, export_pgm: bool
) -> None:
    layout = view.layout
    root = writer.layout.root
    output = view.output
    for mask_set in output.mask_sets:
        for mask in mask_set.masks:
            writer.track(save_mask(mask, layout.som_mask(mask.origin), storage_root=root))

    height, width = output.shape
    for result in output.results:
        g_map = result.display_map() if config.normalize_display else result.g_map
        # FRST holds float32; the G_sum map is rounded here, before the codec sees it.
        raster = FeatureRaster(
            width=width,
            height=height,
            data=g_map.astype(np.float32)[None, :, :],
            channel_names=("g_sum",),
        )
        writer.track(save_raster(raster, layout.gsum_frst(result.base_id), storage_root=root))
        if export_pgm:
            writer.blob(layout.gsum_pgm(result.base_id), encode_gsum_log(result.g_map))

    for tau, masks in output.consensus.items():
        for mask in masks:
            target = layout.consensus_mask(tau, mask.origin)
            writer.track(save_mask(mask, target, storage_root=root, pbm=True))

    writer.text(
        layout.rankings_csv,
        format_rankings(output.results, output.ranking, output.cutoff_rank),
    )
    writer.text(layout.groups_csv, format_groups(output.results, output.ranking, output.groups))


def _view_summary(view: SnapshotView, run_layout: RunLayout) -> ViewSummary:
    output = view.output
    return ViewSummary(
        snapshot=view.snapshot,
        directory="." if view.layout == run_layout else run_layout.relative(view.layout.root),
        row_start=view.rows[0],
        row_stop=view.rows[1],
        masks=len(output.results),
        cutoff_rank=output.cutoff_rank,
        consensus_counts={f"{tau:g}": len(masks) for tau, masks in output.consensus.items()},
    )


def run_pipeline(
    inputs: Sequence[Path],
    config: EnsembleConfig,
    out_dir: Path,
    *,
    workers: int = 1,
    export_pgm: bool = False,
) -> PipelineResult:
    """
    Run the whole ensemble and write the run directory.

    Single mode takes one raster. Stacked mode takes one or more snapshots (equal width and
    channels): the SOMs train on all of their pixels stacked vertically, while stacking,
    ranking and consensus run separately per snapshot under `snapshot-K/`.
    Returns only after every file listed in the manifest has been verified present.
    """
    if not inputs:
        raise ValueError("at least one input raster is required")
    metrics = RunMetrics()
    stages = _Stages(metrics)
    digest = config_hash(config)
    layout = RunLayout.for_run(out_dir, config)

    with structlog.contextvars.bound_contextvars(
        master_seed=config.master_seed, config_hash=digest
    ):
        rasters = stages.run("load", lambda: [load_raster(path) for path in inputs])
        plan = _plan_views(config, rasters, layout)
        raster, _ = stages.run(
            "normalize",
            lambda: normalize_snapshots(
                rasters, mode=config.normalization, clip_sigma=config.clip_sigma
            ),
        )
        log.info(
            "pipeline.input_ready",
            width=raster.width,
            height=raster.height,
            channels=raster.channels,
            snapshots=len(rasters),
            snapshot_mode=config.snapshot_mode,
        )

        runs = stages.run("som", lambda: train_runs(raster, config, workers=workers))
        metrics.som_runs_total.inc(len(runs))

        views: list[SnapshotView] = []
        dropped = 0
        for snapshot, (start, stop), view_layout in plan:
            if snapshot is None:
                mask_sets = [run.mask_set for run in runs]
            else:
                mask_sets = snapshot_mask_sets([run.labeling for run in runs], start, stop)
            results = stages.run(
                "stack",
                lambda sets=mask_sets: stack(
                    sets,
                    epsilon=config.epsilon,
                    ratio_cap=config.ratio_cap,
                    workers=workers,
                ),
            )
            metrics.mask_comparisons_total.inc(sum(result.comparisons for result in results))
            output, view_dropped = _assemble(mask_sets, results, config, stages)
            dropped += view_dropped
            views.append(SnapshotView(snapshot, (start, stop), view_layout, output))
            log.info(
                "pipeline.view_ranked",
                snapshot=snapshot,
                masks=len(results),
                cutoff_rank=output.cutoff_rank,
            )

        kept = sum(len(masks) for view in views for masks in view.output.consensus.values())
        metrics.consensus_masks_total.inc(kept)
        metrics.empty_consensus_total.inc(dropped)

        writer = _Writer(layout)
        with stages.stage("write"):
            _write_run_artifacts(writer, config, runs)
            for view in views:
                _write_view(writer, config, view, export_pgm=export_pgm)
            metrics.write(layout.metrics_prom)
            writer.track(layout.metrics_prom)

            manifest = build_run_manifest(
                root=layout.root,
                files=writer.files,
                config_hash=digest,
                master_seed=config.master_seed,
                dimensions=(raster.width, raster.height, raster.channels),
                snapshots=len(rasters),
                snapshot_mode=config.snapshot_mode,
                runs=len(runs),
                views=[_view_summary(view, layout) for view in views],
                thresholds=config.thresholds,
                timings=stages.timer.rounded(),
            )
            write_atomic_text(
                layout.manifest_json,
                manifest.model_dump_json(indent=2) + "\n",
                storage_root=layout.root,
            )
            verify_inventory(layout.root, manifest)

        log.info(
            "pipeline.done",
            run_dir=str(layout.root),
            masks=manifest.masks,
            cutoff_rank=manifest.cutoff_rank,
            consensus_masks=kept,
        )
    return PipelineResult(layout=layout, manifest=manifest, views=tuple(views), runs=tuple(runs))
