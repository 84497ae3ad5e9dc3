"""FRST raster files: `FRST`, u32 version, width, height, channels, then float32 LE values."""
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
from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import (
    NonFiniteValueError,
    RasterFormatError,
    UnsupportedVersionError,
)
from sce_segmentation.domain.raster import FeatureRaster

MAGIC = b"FRST"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
NAMES_SUFFIX = ".names"


def names_path(path: Path) -> Path:
    return path.with_name(path.name + NAMES_SUFFIX)


def _default_names(channels: int) -> tuple[str, ...]:
    return tuple(f"c{i}" for i in range(channels))


def encode_raster(raster: FeatureRaster, *, where: object = "<raster>") -> bytes:
    """
    Header plus float32 payload.

    Values float32 cannot hold exactly are rejected rather than rounded: overflow raises
    NonFiniteValueError, any other precision loss RasterFormatError. Round with
    `astype(np.float32)` before building the raster to write lossy data on purpose.
    """
    source = raster.data
    with np.errstate(over="ignore"):
        values = source.astype("<f4")
    overflow = ~np.isfinite(values)
    if overflow.any():
        index = int(np.flatnonzero(overflow)[0])
        raise NonFiniteValueError(
            ErrorMessages.FLOAT32_OVERFLOW.format(
                path=where, index=index, value=float(source.flat[index])
            )
        )
    inexact = values.astype(np.float64) != source
    if inexact.any():
        index = int(np.flatnonzero(inexact)[0])
        raise RasterFormatError(
            ErrorMessages.FLOAT32_INEXACT.format(
                path=where, index=index, value=float(source.flat[index])
            )
        )
    header = HEADER.pack(MAGIC, VERSION, raster.width, raster.height, raster.channels)
    return header + values.tobytes()


def encode_names(raster: FeatureRaster) -> str | None:
    """Sidecar text, or None when the names are the defaults (c0, c1, ...)."""
    if raster.channel_names == _default_names(raster.channels):
        return None
    return "".join(f"{name}\n" for name in raster.channel_names)


def decode_raster(
    data: bytes, *, where: object = "<bytes>", channel_names: tuple[str, ...] = ()
) -> FeatureRaster:
    version, width, height, channels = unpack_header(
        data, header=HEADER, magic=MAGIC, kind="FRST", where=where
    )
    if version != VERSION:
        raise UnsupportedVersionError(
            ErrorMessages.BAD_VERSION.format(path=where, version=version, expected=VERSION)
        )
    require_positive(where, width=width, height=height, channels=channels)
    payload = check_payload(
        data, offset=HEADER.size, expected=4 * width * height * channels, where=where
    )
    values = np.frombuffer(payload, dtype="<f4")
    finite = np.isfinite(values)
    if not finite.all():
        index = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValueError(ErrorMessages.NON_FINITE.format(path=where, index=index))
    return FeatureRaster(
        width=width,
        height=height,
        data=values.astype(np.float64).reshape(channels, height, width),
        channel_names=channel_names,
    )


def load_raster(path: str | Path) -> FeatureRaster:
    """Read a FRST file; channel names come from `<path>.names` when present."""
    source = Path(path)
    data = read_artifact(source, kind="raster")
    sidecar = names_path(source)
    names: tuple[str, ...] = ()
    if sidecar.is_file():
        lines = sidecar.read_text("utf-8").splitlines()
        names = tuple(line.strip() for line in lines if line.strip())
    return decode_raster(data, where=source, channel_names=names)


def save_raster(
    raster: FeatureRaster, path: str | Path, *, storage_root: Path | None = None
) -> list[Path]:
    """Write the raster (and its names sidecar if needed); returns the written paths."""
    target = output_path(path)
    root = storage_root if storage_root is not None else target.parent
    write_atomic_bytes(target, encode_raster(raster, where=target), storage_root=root)
    written = [target]
    names = encode_names(raster)
    if names is not None:
        write_atomic_bytes(names_path(target), names.encode("utf-8"), storage_root=root)
        written.append(names_path(target))
    else:
        names_path(target).unlink(missing_ok=True)
    return written
