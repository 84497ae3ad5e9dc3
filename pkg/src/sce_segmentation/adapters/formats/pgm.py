"""Binary PGM (P5) export of labelings and G_sum maps."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from sce_segmentation.adapters.formats._binary import check_payload, output_path
from sce_segmentation.adapters.storage.fs_storage import read_artifact, write_atomic_bytes
from sce_segmentation.domain.errors import BadMagicError, RasterFormatError
from sce_segmentation.domain.som import Labeling

_COMMENTS = rb"(?:#[^\n]*\s+)*"
_HEADER_RE = re.compile(
    rb"^P5\s+" + _COMMENTS + rb"(\d+)\s+" + _COMMENTS + rb"(\d+)\s+" + _COMMENTS + rb"(\d+)\s"
)
MAX_16BIT = 65535


def counts_path(pgm_path: Path) -> Path:
    return pgm_path.with_name(pgm_path.name.removesuffix(".pgm") + ".counts.txt")


def encode_gray(values: np.ndarray, maxval: int) -> bytes:
    height, width = values.shape
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    return header + np.ascontiguousarray(values).astype(dtype).tobytes()


def decode_gray(data: bytes, *, where: object = "<bytes>") -> tuple[np.ndarray, int]:
    """Pixel values (height, width) and maxval of a P5 image."""
    match = _HEADER_RE.match(data)
    if match is None:
        raise BadMagicError(f"{where}: not a binary PGM (P5) image")
    width, height, maxval = (int(group) for group in match.groups())
    if width < 1 or height < 1 or not 0 < maxval <= MAX_16BIT:
        raise RasterFormatError(f"{where}: invalid PGM header {width}x{height} maxval {maxval}")
    sample = 1 if maxval < 256 else 2
    payload = check_payload(
        data, offset=match.end(), expected=sample * width * height, where=where
    )
    dtype = np.uint8 if sample == 1 else np.dtype(">u2")
    return np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.int64), maxval


def encode_labeling(labeling: Labeling) -> bytes:
    return encode_gray(labeling.labels, max(labeling.n_clusters - 1, 1))


def encode_counts(labeling: Labeling) -> str:
    return "".join(f"{cluster} {count}\n" for cluster, count in enumerate(labeling.counts()))


def save_labeling(
    labeling: Labeling, path: str | Path, *, storage_root: Path | None = None
) -> list[Path]:
    """Cluster ids as gray levels, plus `<stem>.counts.txt` with one `id count` line per id."""
    target = output_path(path)
    root = storage_root if storage_root is not None else target.parent
    write_atomic_bytes(target, encode_labeling(labeling), storage_root=root)
    sidecar = counts_path(target)
    write_atomic_bytes(sidecar, encode_counts(labeling).encode("utf-8"), storage_root=root)
    return [target, sidecar]


def load_labeling(path: str | Path) -> Labeling:
    source = Path(path)
    values, _ = decode_gray(read_artifact(source, kind="labeling"), where=source)
    sidecar = counts_path(source)
    if sidecar.is_file():
        counts = [int(line.split()[1]) for line in sidecar.read_text("utf-8").splitlines() if line]
        n_clusters = len(counts)
        allow_absent = 0 in counts
    else:
        n_clusters = int(values.max()) + 1
        allow_absent = True
    height, width = values.shape
    return Labeling(
        width=width,
        height=height,
        labels=values,
        n_clusters=n_clusters,
        allow_absent=allow_absent,
    )


def encode_gsum_log(g_map: np.ndarray) -> bytes:
    """16-bit rendering of log10(1 + G_sum), scaled so the map maximum is full white."""
    scaled = np.log10(1.0 + np.asarray(g_map, dtype=np.float64))
    peak = float(scaled.max())
    if peak > 0:
        scaled = np.rint(scaled / peak * MAX_16BIT)
    else:
        scaled = np.zeros_like(scaled)
    return encode_gray(scaled, MAX_16BIT)
