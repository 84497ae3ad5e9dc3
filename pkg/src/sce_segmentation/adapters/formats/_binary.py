"""Shared header handling for the little-endian magic-prefixed binary formats."""
from __future__ import annotations

import struct
from pathlib import Path

from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import BadMagicError, RasterFormatError, TruncatedPayloadError


def output_path(path: str | Path) -> Path:
    if str(path) == "":
        raise ValueError(ErrorMessages.EMPTY_PATH)
    return Path(path)


def unpack_header(
    data: bytes, *, header: struct.Struct, magic: bytes, kind: str, where: object
) -> tuple[int, ...]:
    """Check size and magic; returns the header fields after the magic."""
    if len(data) < header.size:
        raise TruncatedPayloadError(
            ErrorMessages.SHORT_HEADER.format(path=where, kind=kind, size=len(data))
        )
    found, *fields = header.unpack_from(data)
    if found != magic:
        raise BadMagicError(
            ErrorMessages.BAD_MAGIC.format(path=where, found=found, expected=magic)
        )
    return tuple(fields)


def check_payload(data: bytes, *, offset: int, expected: int, where: object) -> bytes:
    payload = data[offset:]
    if len(payload) != expected:
        raise TruncatedPayloadError(
            ErrorMessages.TRUNCATED.format(path=where, actual=len(payload), expected=expected)
        )
    return payload


def require_positive(where: object, **dims: int) -> None:
    for name, value in dims.items():
        if value < 1:
            raise RasterFormatError(f"{where}: {name} must be >= 1 (got {value})")
