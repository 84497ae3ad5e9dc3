"""
Cluster mask files.

MSK1: `MSK1`, u32 width, u32 height, then ceil(w*h/8) bytes, row-major, MSB first.
PBM (P4) export for image viewers; 1 = set pixel, every row padded to a whole byte.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from sce_segmentation.adapters.formats._binary import (
    check_payload,
    output_path,
    require_positive,
    unpack_header,
)
from sce_segmentation.adapters.storage.fs_storage import read_artifact, write_atomic_bytes
from sce_segmentation.domain.errors import RasterFormatError
from sce_segmentation.domain.mask import ClusterMask, MaskId

MAGIC = b"MSK1"
HEADER = struct.Struct("<4sII")


def encode_mask(mask: ClusterMask) -> bytes:
    return HEADER.pack(MAGIC, mask.width, mask.height) + mask.packed_bytes()


def decode_mask(data: bytes, *, origin: MaskId, where: object = "<bytes>") -> ClusterMask:
    width, height = unpack_header(data, header=HEADER, magic=MAGIC, kind="MSK1", where=where)
    require_positive(where, width=width, height=height)
    payload = check_payload(
        data, offset=HEADER.size, expected=-(-width * height // 8), where=where
    )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=width * height)
    try:
        return ClusterMask.from_bool(bits.reshape(height, width), origin=origin)
    except ValueError as exc:
        raise RasterFormatError(f"{where}: {exc}") from exc


def encode_pbm(mask: ClusterMask) -> bytes:
    rows = np.packbits(mask.to_bool(), axis=1, bitorder="big")
    return f"P4\n{mask.width} {mask.height}\n".encode("ascii") + rows.tobytes()


def load_mask(path: str | Path, *, origin: MaskId) -> ClusterMask:
    source = Path(path)
    return decode_mask(read_artifact(source, kind="mask"), origin=origin, where=source)


def save_mask(
    mask: ClusterMask, path: str | Path, *, storage_root: Path | None = None, pbm: bool = False
) -> list[Path]:
    """Write `<path>` as MSK1 and, with `pbm`, a `.pbm` twin next to it."""
    target = output_path(path)
    root = storage_root if storage_root is not None else target.parent
    write_atomic_bytes(target, encode_mask(mask), storage_root=root)
    written = [target]
    if pbm:
        twin = target.with_suffix(".pbm")
        write_atomic_bytes(twin, encode_pbm(mask), storage_root=root)
        written.append(twin)
    return written
