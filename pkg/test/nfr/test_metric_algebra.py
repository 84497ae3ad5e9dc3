"""Similarity algebra over random mask pairs and at the boundaries."""
from __future__ import annotations

import numpy as np

from sce_segmentation.domain.mask import ClusterMask, overlap_counts
from sce_segmentation.domain.metrics import score_counts, score_pair
from test.support.factories import mask_from_bits


def _random_pair(rng: np.random.Generator) -> tuple[ClusterMask, ClusterMask]:
    height = int(rng.integers(1, 257))
    width = int(rng.integers(8, 257))
    density = rng.uniform(0.01, 0.99, size=2)
    a = rng.random((height, width)) < density[0]
    b = rng.random((height, width)) < density[1]
    a.flat[int(rng.integers(a.size))] = True
    b.flat[int(rng.integers(b.size))] = True
    return ClusterMask.from_bool(a, (0, 0)), ClusterMask.from_bool(b, (1, 0))


def test_identities_hold_for_random_pairs() -> None:
    rng = np.random.default_rng(20240101)
    for _ in range(10_000):
        a, b = _random_pair(rng)
        counts = overlap_counts(a, b)
        assert counts.r_sum == counts.u_sum + counts.i_sum
        score = score_counts(counts)
        assert abs(score.dice - (1.0 - score.q_u)) <= 1e-12
        assert abs(score.q_u - (1.0 - score.s_i) / (1.0 + score.s_i)) <= 1e-12


def test_identical_masks() -> None:
    a = mask_from_bits([[1, 1, 0], [0, 1, 0]], run=0)
    b = mask_from_bits([[1, 1, 0], [0, 1, 0]], run=1)
    score = score_pair(a, b)
    assert (score.s_i, score.q_u, score.dice) == (1.0, 0.0, 1.0)


def test_disjoint_masks() -> None:
    a = mask_from_bits([[1, 1, 0], [0, 0, 0]], run=0)
    b = mask_from_bits([[0, 0, 1], [1, 1, 1]], run=1)
    score = score_pair(a, b)
    assert (score.s_i, score.q_u, score.dice) == (0.0, 1.0, 0.0)
