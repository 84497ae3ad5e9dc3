"""Similarity and goodness-of-fit quantities between cluster masks.

s_I   = |I| / |U|                 (signal strength, equal to IoU)
q_U   = (|U| - |I|) / sum(R)      (union quality, 0 for identical masks)
dice  = 2 |I| / sum(R)            (= 1 - q_U)
ratio = min(s_I / max(q_U, eps), ratio_cap)

G for a mask pair is `ratio` on the union of the two masks and 0 elsewhere; G_sum adds G
over every mask of the other runs, g_sum adds the ratios.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import ContractViolationError
from sce_segmentation.domain.mask import ClusterMask, MaskId, OverlapCounts, overlap_counts

DEFAULT_EPSILON = 1e-6
DEFAULT_RATIO_CAP = 1e6


@dataclass(frozen=True)
class PairScore:
    s_i: float
    q_u: float
    dice: float
    ratio: float


@dataclass(frozen=True, eq=False)
class GsumResult:
    base_id: MaskId
    g_map: np.ndarray
    g_scalar: float
    comparisons: int

    def display_map(self) -> np.ndarray:
        """g_map scaled by its maximum into [0, 1] (all zeros stay zeros)."""
        peak = float(self.g_map.max())
        return self.g_map / peak if peak > 0 else np.zeros_like(self.g_map)


def _require_union(counts: OverlapCounts) -> None:
    if counts.u_sum == 0 or counts.r_sum == 0:
        raise ContractViolationError(ErrorMessages.EMPTY_UNION)


def signal_strength(counts: OverlapCounts) -> float:
    _require_union(counts)
    return counts.i_sum / counts.u_sum


def union_quality(counts: OverlapCounts) -> float:
    _require_union(counts)
    return (counts.u_sum - counts.i_sum) / counts.r_sum


def dice(counts: OverlapCounts) -> float:
    _require_union(counts)
    return 2 * counts.i_sum / counts.r_sum


def pair_ratio(
    counts: OverlapCounts,
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> float:
    q_eff = max(union_quality(counts), epsilon)
    return min(signal_strength(counts) / q_eff, ratio_cap)


def score_counts(
    counts: OverlapCounts,
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> PairScore:
    return PairScore(
        s_i=signal_strength(counts),
        q_u=union_quality(counts),
        dice=dice(counts),
        ratio=pair_ratio(counts, epsilon=epsilon, ratio_cap=ratio_cap),
    )


def score_pair(
    a: ClusterMask,
    b: ClusterMask,
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> PairScore:
    return score_counts(overlap_counts(a, b), epsilon=epsilon, ratio_cap=ratio_cap)


def _require_other_run(base: ClusterMask, other: ClusterMask) -> None:
    if base.origin.run == other.origin.run:
        raise ContractViolationError(
            ErrorMessages.SAME_RUN.format(left=base.origin, right=other.origin)
        )


def g_matrix(
    a: ClusterMask,
    b: ClusterMask,
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> np.ndarray:
    _require_other_run(a, b)
    ratio = pair_ratio(overlap_counts(a, b), epsilon=epsilon, ratio_cap=ratio_cap)
    g = np.zeros(a.shape, dtype=np.float64)
    if ratio > 0:
        g[a.to_bool() | b.to_bool()] = ratio
    return g


def _ordered(base: ClusterMask, others: Iterable[ClusterMask]) -> list[ClusterMask]:
    ordered = sorted(others, key=lambda mask: mask.origin)
    if not ordered:
        raise ContractViolationError(ErrorMessages.NO_COMPARISONS.format(base=base.origin))
    for other in ordered:
        _require_other_run(base, other)
    return ordered


def _ordered_ratios(
    base: ClusterMask, ordered: list[ClusterMask], *, epsilon: float, ratio_cap: float
) -> list[float]:
    return [
        pair_ratio(overlap_counts(base, other), epsilon=epsilon, ratio_cap=ratio_cap)
        for other in ordered
    ]


def _fold(ratios: list[float]) -> float:
    total = 0.0
    for ratio in ratios:
        total += ratio
    return total


def g_sum_matrix(
    base: ClusterMask,
    others: Iterable[ClusterMask],
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
    bits_cache: Mapping[MaskId, np.ndarray] | None = None,
) -> GsumResult:
    """
    G_sum and g_sum of `base` against masks of every other run.

    Reduction order is ascending (run, cluster) regardless of the order of `others`.
    `bits_cache` may supply already unpacked boolean images keyed by mask id.
    """
    ordered = _ordered(base, others)
    ratios = _ordered_ratios(base, ordered, epsilon=epsilon, ratio_cap=ratio_cap)

    def _bits(mask: ClusterMask) -> np.ndarray:
        if bits_cache is not None and mask.origin in bits_cache:
            return bits_cache[mask.origin]
        return mask.to_bool()

    base_bits = _bits(base)
    g_map = np.zeros(base.shape, dtype=np.float64)
    for other, ratio in zip(ordered, ratios, strict=True):
        if ratio > 0:
            g_map[base_bits | _bits(other)] += ratio

    return GsumResult(
        base_id=base.origin,
        g_map=g_map,
        g_scalar=_fold(ratios),
        comparisons=len(ordered),
    )


def g_sum_scalar(
    base: ClusterMask,
    others: Iterable[ClusterMask],
    *,
    epsilon: float = DEFAULT_EPSILON,
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> float:
    ordered = _ordered(base, others)
    return _fold(_ordered_ratios(base, ordered, epsilon=epsilon, ratio_cap=ratio_cap))
