"""Bit-packed cluster masks and their union / intersection / sum algebra."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import structlog

from sce_segmentation.domain.error_messages import format_dimension_mismatch
from sce_segmentation.domain.errors import DimensionMismatchError
from sce_segmentation.domain.som import Labeling

log = structlog.get_logger(__name__)

WORD_BITS = 64


class MaskId(NamedTuple):
    run: int
    cluster: int

    def __str__(self) -> str:
        return f"run {self.run} cluster {self.cluster}"


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Row-major, MSB-first packing into 64-pixel words (zero padded)."""
    packed = np.packbits(np.asarray(bits, dtype=bool).ravel(), bitorder="big")
    pad = (-packed.size) % (WORD_BITS // 8)
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    return packed.view(np.uint64)


@dataclass(frozen=True, eq=False)
class ClusterMask:
    """Pixels of one cluster in one run; never empty."""

    width: int
    height: int
    words: np.ndarray
    origin: MaskId
    popcount: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        expected = -(-self.width * self.height // WORD_BITS)
        words = np.array(self.words, dtype=np.uint64, copy=True).ravel()
        if words.size != expected:
            raise DimensionMismatchError(
                format_dimension_mismatch(f"{words.size} words", f"{expected} words")
            )
        popcount = int(np.bitwise_count(words).sum())
        if popcount == 0:
            raise ValueError(f"mask {self.origin} is empty")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "origin", MaskId(*self.origin))
        object.__setattr__(self, "popcount", popcount)

    @classmethod
    def from_bool(cls, bits: np.ndarray, origin: tuple[int, int]) -> ClusterMask:
        array = np.asarray(bits, dtype=bool)
        if array.ndim != 2:
            raise DimensionMismatchError(f"mask bits must be 2-D (got shape {array.shape})")
        height, width = array.shape
        return cls(width=width, height=height, words=pack_bits(array), origin=MaskId(*origin))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def to_bool(self) -> np.ndarray:
        flat = np.unpackbits(self.words.view(np.uint8), count=self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    def packed_bytes(self) -> bytes:
        """ceil(w*h/8) bytes, row-major, MSB first."""
        return self.words.view(np.uint8)[: -(-self.width * self.height // 8)].tobytes()

    def same_bits(self, other: ClusterMask) -> bool:
        return self.shape == other.shape and np.array_equal(self.words, other.words)


@dataclass(frozen=True)
class MaskSet:
    run: int
    masks: tuple[ClusterMask, ...]

    def __len__(self) -> int:
        return len(self.masks)

    def is_partition(self) -> bool:
        if not self.masks:
            return False
        total = np.zeros_like(self.masks[0].words)
        covered = 0
        for mask in self.masks:
            if np.any(total & mask.words):
                return False
            total |= mask.words
            covered += mask.popcount
        first = self.masks[0]
        return covered == first.width * first.height


@dataclass(frozen=True)
class OverlapCounts:
    i_sum: int
    u_sum: int
    r_sum: int

    def __post_init__(self) -> None:
        if not (0 <= self.i_sum <= self.u_sum and self.r_sum == self.u_sum + self.i_sum):
            raise ValueError(f"inconsistent overlap counts {self}")


def _check_same_shape(a: ClusterMask, b: ClusterMask) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(format_dimension_mismatch(a.shape, b.shape))


def masks_from_labeling(labeling: Labeling, *, run: int = 0) -> MaskSet:
    """One mask per cluster id; mask k is true exactly where the label equals k."""
    counts = labeling.counts()
    masks: list[ClusterMask] = []
    for k in range(labeling.n_clusters):
        if counts[k] == 0:
            log.info("mask.empty_cluster_dropped", run=run, cluster=k)
            continue
        masks.append(ClusterMask.from_bool(labeling.labels == k, origin=(run, k)))
    return MaskSet(run=run, masks=tuple(masks))


def mask_union(a: ClusterMask, b: ClusterMask) -> np.ndarray:
    _check_same_shape(a, b)
    return a.to_bool() | b.to_bool()


def mask_intersection(a: ClusterMask, b: ClusterMask) -> np.ndarray:
    _check_same_shape(a, b)
    return a.to_bool() & b.to_bool()


def mask_sum(a: ClusterMask, b: ClusterMask) -> np.ndarray:
    _check_same_shape(a, b)
    return a.to_bool().astype(np.uint8) + b.to_bool().astype(np.uint8)


def overlap_counts(a: ClusterMask, b: ClusterMask) -> OverlapCounts:
    """|I|, |U| and sum(R) from word-parallel popcounts, without materializing matrices."""
    _check_same_shape(a, b)
    i_sum = int(np.bitwise_count(a.words & b.words).sum())
    u_sum = int(np.bitwise_count(a.words | b.words).sum())
    return OverlapCounts(i_sum=i_sum, u_sum=u_sum, r_sum=a.popcount + b.popcount)
