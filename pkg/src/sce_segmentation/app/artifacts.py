"""Reading run directories back into an SceOutput and comparing two of them."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from pydantic import ValidationError

from sce_segmentation.adapters.formats.csv_tables import format_comparison, parse_rankings
from sce_segmentation.adapters.formats.frst import load_raster
from sce_segmentation.adapters.formats.msk import load_mask
from sce_segmentation.adapters.formats.pgm import load_labeling
from sce_segmentation.adapters.formats.som_file import load_som
from sce_segmentation.adapters.storage.fs_storage import read_artifact, write_atomic_text
from sce_segmentation.adapters.storage.layout import RunLayout, parse_mask_stem, tau_segment
from sce_segmentation.config.settings import EnsembleConfig
from sce_segmentation.domain.ensemble import (
    ComparisonRow,
    ComparisonSummary,
    SceOutput,
    compare_ensembles,
    group_by_gap,
    snapshot_mask_sets,
    summarize,
)
from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import ArtifactNotFoundError, RasterFormatError
from sce_segmentation.domain.manifest import RunManifest, ViewSummary
from sce_segmentation.domain.mask import ClusterMask, MaskId
from sce_segmentation.domain.metrics import GsumResult
from sce_segmentation.domain.som import Labeling, SomMap

log = structlog.get_logger(__name__)


@dataclass(frozen=True)
class LoadedRun:
    """One view of a run directory; `som_maps` and `labelings` cover the whole stacked input."""

    root: Path
    manifest: RunManifest
    config: EnsembleConfig
    view: ViewSummary
    som_maps: tuple[SomMap, ...]
    labelings: tuple[Labeling, ...]
    output: SceOutput


@dataclass(frozen=True)
class ComparisonReport:
    out_dir: Path
    rows: list[ComparisonRow]
    summaries: list[ComparisonSummary]
    files: list[Path]


def _require(path: Path, what: str, root: Path) -> Path:
    if not path.exists():
        raise ArtifactNotFoundError(ErrorMessages.MISSING_ARTIFACT.format(path=root, what=what))
    return path


def _masks_in(directory: Path) -> dict[MaskId, Path]:
    return {
        parse_mask_stem(path.stem): path
        for path in sorted(directory.glob("run-*-cluster-*.msk"))
    }


def _select_view(manifest: RunManifest, snapshot: int | None, root: Path) -> ViewSummary:
    if manifest.snapshot_mode == "single":
        if snapshot is not None:
            raise ValueError(f"{root}: single-snapshot run has no snapshot {snapshot}")
        return manifest.views[0]
    if snapshot is None:
        raise ValueError(
            f"{root}: stacked run, choose a snapshot in 0..{len(manifest.views) - 1}"
        )
    for view in manifest.views:
        if view.snapshot == snapshot:
            return view
    raise ArtifactNotFoundError(
        ErrorMessages.MISSING_ARTIFACT.format(path=root, what=f"snapshot-{snapshot}")
    )


def load_run(run_dir: Path, *, snapshot: int | None = None) -> LoadedRun:
    """
    Rebuild the SceOutput stored in a run directory written by the pipeline.

    The SOMs and labelings are read back and the per-run mask sets are recomputed from the
    labelings (cut to the view's rows); G_sum maps, rankings and consensus masks come from
    the view directory. Stacked runs need `snapshot`; single runs refuse one.
    """
    run_layout = RunLayout(root=Path(run_dir))
    root = run_layout.root
    if not root.is_dir():
        raise ArtifactNotFoundError(
            ErrorMessages.FILE_NOT_FOUND.format(kind="run directory", path=root)
        )
    try:
        manifest = RunManifest.model_validate_json(
            read_artifact(
                _require(run_layout.manifest_json, "manifest.json", root), kind="manifest"
            )
        )
        config = EnsembleConfig.model_validate_json(
            read_artifact(_require(run_layout.config_json, "config.json", root), kind="config")
        )
    except ValidationError as exc:
        raise RasterFormatError(
            f"{root}: invalid run metadata ({exc.error_count()} errors)"
        ) from exc

    view = _select_view(manifest, snapshot, root)
    layout = run_layout.view(view.snapshot)

    som_maps = tuple(
        load_som(_require(run_layout.som_file(run), f"som/run-{run:03d}.som", root))
        for run in range(manifest.runs)
    )
    labelings = tuple(
        load_labeling(_require(run_layout.labels_pgm(run), f"labels/run-{run:03d}.pgm", root))
        for run in range(manifest.runs)
    )
    mask_sets = tuple(snapshot_mask_sets(labelings, view.row_start, view.row_stop))

    rankings_path = _require(layout.rankings_csv, "rankings.csv", root)
    rows = parse_rankings(rankings_path.read_text("utf-8"), where=rankings_path)
    rows_by_id = sorted(rows, key=lambda row: (row.run, row.cluster))
    results: list[GsumResult] = []
    for row in rows_by_id:
        mask_id = MaskId(row.run, row.cluster)
        g_path = layout.gsum_frst(mask_id)
        if g_path.is_file():
            g_map = load_raster(g_path).data[0]
        else:
            g_map = np.zeros((view.row_stop - view.row_start, manifest.width))
        results.append(
            GsumResult(
                base_id=mask_id,
                g_map=g_map,
                g_scalar=row.g_sum,
                comparisons=row.comparisons,
            )
        )
    index_of = {result.base_id: i for i, result in enumerate(results)}
    ranking = [index_of[MaskId(row.run, row.cluster)] for row in sorted(rows, key=lambda r: r.rank)]

    position = {mask_id: i for i, mask_id in enumerate(results[i].base_id for i in ranking)}
    consensus: dict[float, tuple[ClusterMask, ...]] = {}
    for tau in manifest.thresholds:
        directory = layout.consensus_root / tau_segment(tau)
        found = _masks_in(directory) if directory.is_dir() else {}
        ordered = sorted(found.items(), key=lambda item: position.get(item[0], len(position)))
        consensus[tau] = tuple(load_mask(path, origin=mask_id) for mask_id, path in ordered)

    values = [results[i].g_scalar for i in ranking]
    output = SceOutput(
        mask_sets=mask_sets,
        results=tuple(results),
        ranking=tuple(ranking),
        cutoff_rank=view.cutoff_rank,
        consensus=consensus,
        groups=tuple(group_by_gap(values, config.gap_delta)),
    )
    log.debug("artifacts.loaded", run_dir=str(root), snapshot=view.snapshot, masks=len(results))
    return LoadedRun(
        root=root,
        manifest=manifest,
        config=config,
        view=view,
        som_maps=som_maps,
        labelings=labelings,
        output=output,
    )


def format_summary(summaries: Sequence[ComparisonSummary]) -> str:
    lines = []
    for summary in summaries:
        tau = "-" if summary.tau is None else f"{summary.tau:g}"
        lines.append(
            f"{summary.kind} tau={tau} masks={summary.masks} "
            f"median_best_match_s_i={summary.median_best_match:.4f} "
            f"largest_gap={summary.split_low:.4f}..{summary.split_high:.4f}"
        )
    return "\n".join(lines) + "\n"


def default_compare_dir(a_dir: Path, b_dir: Path) -> Path:
    return Path(a_dir) / f"compare_{Path(b_dir).resolve().name}"


def compare_runs(
    a_dir: Path,
    b_dir: Path,
    *,
    taus: Sequence[float] | None = None,
    out_dir: Path | None = None,
    snapshot: int | None = None,
) -> ComparisonReport:
    """
    Score the consensus masks of run a against run b (and the raw SOM masks as baseline).

    Without `taus`, every threshold both runs were cut at is compared. Stacked runs are
    compared one snapshot at a time.
    """
    a = load_run(a_dir, snapshot=snapshot)
    b = load_run(b_dir, snapshot=snapshot)
    if taus is None:
        taus = sorted(set(a.manifest.thresholds) & set(b.manifest.thresholds))
    rows = compare_ensembles(a.output, b.output, taus)
    summaries = summarize(rows)

    target = Path(out_dir) if out_dir is not None else default_compare_dir(a_dir, b_dir)
    csv_path = target / "comparison.csv"
    summary_path = target / "summary.txt"
    write_atomic_text(csv_path, format_comparison(rows), storage_root=target)
    write_atomic_text(summary_path, format_summary(summaries), storage_root=target)
    log.info("artifacts.compared", a=str(a.root), b=str(b.root), rows=len(rows))
    return ComparisonReport(
        out_dir=target, rows=rows, summaries=summaries, files=[csv_path, summary_path]
    )
