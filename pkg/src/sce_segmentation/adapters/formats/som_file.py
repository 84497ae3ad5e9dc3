"""SOM1 map files: `SOM1`, u32 rows, cols, features, then float32 LE weights (row-major)."""
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
from sce_segmentation.domain.som import SomMap

MAGIC = b"SOM1"
HEADER = struct.Struct("<4sIII")


def encode_som(som_map: SomMap) -> bytes:
    header = HEADER.pack(MAGIC, som_map.rows, som_map.cols, som_map.n_features)
    return header + som_map.weights.astype("<f4").tobytes()


def decode_som(data: bytes, *, where: object = "<bytes>") -> SomMap:
    rows, cols, features = unpack_header(
        data, header=HEADER, magic=MAGIC, kind="SOM1", where=where
    )
    require_positive(where, rows=rows, cols=cols, features=features)
    payload = check_payload(
        data, offset=HEADER.size, expected=4 * rows * cols * features, where=where
    )
    weights = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return SomMap(rows=rows, cols=cols, weights=weights.reshape(rows * cols, features))


def load_som(path: str | Path) -> SomMap:
    source = Path(path)
    return decode_som(read_artifact(source, kind="SOM"), where=source)


def save_som(som_map: SomMap, path: str | Path, *, storage_root: Path | None = None) -> Path:
    target = output_path(path)
    root = storage_root if storage_root is not None else target.parent
    write_atomic_bytes(target, encode_som(som_map), storage_root=root)
    return target
