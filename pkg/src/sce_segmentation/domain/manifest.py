from __future__ import annotations

import hashlib
import sys
from collections import Counter
from collections.abc import Iterable, Sequence
from importlib import metadata
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import ArtifactNotFoundError
from sce_segmentation.domain.time_utils import format_timestamp_utc, now_utc

DIST_NAME = "sce-segmentation"


def compute_sha256(data: bytes) -> str:
    if not isinstance(data, (bytes, bytearray)):
        raise TypeError("data must be bytes")
    return hashlib.sha256(data).hexdigest()


def _safe_get_tool_version(dist_name: str) -> str | None:
    try:
        return metadata.version(dist_name)
    except Exception:
        return None


class ToolInfo(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = DIST_NAME
    version: str = "unknown"
    python: str = ""


class ManifestFile(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    sha256: str
    size: int = Field(ge=0)


class ViewSummary(BaseModel):
    """Rankings and consensus of one snapshot (or of the whole raster in single mode)."""

    model_config = ConfigDict(frozen=True)

    snapshot: int | None = None
    directory: str = "."
    row_start: int = Field(ge=0)
    row_stop: int = Field(gt=0)
    masks: int
    cutoff_rank: int
    consensus_counts: dict[str, int] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """Inventory and provenance of one run directory (`manifest.json`)."""

    model_config = ConfigDict(frozen=True)

    tool: ToolInfo
    config_hash: str
    master_seed: int
    created_at: str
    width: int
    height: int
    channels: int
    snapshots: int = 1
    snapshot_mode: str = "single"
    runs: int
    # Totals over all views.
    masks: int
    cutoff_rank: int
    thresholds: list[float]
    consensus_counts: dict[str, int] = Field(default_factory=dict)
    views: list[ViewSummary] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)
    files: list[ManifestFile] = Field(default_factory=list)


def describe_files(root: Path, relative_paths: Iterable[str]) -> list[ManifestFile]:
    """sha256 and size for each file under `root`, sorted by path."""
    entries: list[ManifestFile] = []
    for rel in sorted(set(relative_paths)):
        data = (root / rel).read_bytes()
        entries.append(ManifestFile(path=rel, sha256=compute_sha256(data), size=len(data)))
    return entries


def build_run_manifest(
    *,
    root: Path,
    files: Iterable[str],
    config_hash: str,
    master_seed: int,
    dimensions: tuple[int, int, int],
    snapshots: int,
    snapshot_mode: str = "single",
    runs: int,
    views: Sequence[ViewSummary],
    thresholds: Iterable[float],
    timings: dict[str, float],
) -> RunManifest:
    width, height, channels = dimensions
    totals: Counter[str] = Counter()
    for view in views:
        totals.update(view.consensus_counts)
    tool = ToolInfo(
        version=_safe_get_tool_version(DIST_NAME) or "unknown",
        python=sys.version.split(" ", 1)[0],
    )
    return RunManifest(
        tool=tool,
        config_hash=config_hash,
        master_seed=master_seed,
        created_at=format_timestamp_utc(now_utc()),
        width=width,
        height=height,
        channels=channels,
        snapshots=snapshots,
        snapshot_mode=snapshot_mode,
        runs=runs,
        masks=sum(view.masks for view in views),
        cutoff_rank=sum(view.cutoff_rank for view in views),
        thresholds=list(thresholds),
        consensus_counts=dict(totals),
        views=list(views),
        timings=dict(timings),
        files=describe_files(root, files),
    )


def verify_inventory(root: Path, manifest: RunManifest) -> None:
    missing = [entry.path for entry in manifest.files if not (root / entry.path).is_file()]
    if missing:
        raise ArtifactNotFoundError(
            ErrorMessages.MISSING_ARTIFACT.format(path=root, what=", ".join(missing))
        )
