from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from sce_segmentation.config.settings import SynthConfig
from sce_segmentation.domain import synth
from sce_segmentation.domain.errors import DegenerateChannelError, PlacementError
from sce_segmentation.domain.raster import normalize
from sce_segmentation.domain.synth import (
    BACKGROUND,
    CHANNEL_NAMES,
    ISLAND,
    SHEET,
    class_plateaus,
    generate,
)
from test.support.factories import make_synth_config


def test_disk_of_radius_five_covers_81_pixels() -> None:
    yy, xx = np.mgrid[0:21, 0:21]
    assert int(synth._disk(yy, xx, 10, 10, 5).sum()) == 81


def test_generate_is_deterministic_per_seed() -> None:
    config = make_synth_config()
    raster, truth = generate(config)
    again, truth_again = generate(config)
    assert raster.same_values(again)
    assert truth.same_labels(truth_again)
    other, _ = generate(make_synth_config(seed=4))
    assert not other.same_values(raster)


def test_generate_labels_and_channels() -> None:
    raster, truth = generate(make_synth_config(noise_sigma=0.0, plateau=2.0))
    assert raster.channel_names == CHANNEL_NAMES
    assert truth.n_clusters == 3
    counts = truth.counts()
    assert counts[BACKGROUND] > 0 and counts[ISLAND] > 0 and counts[SHEET] > 0
    expected = class_plateaus(2.0)[truth.labels].transpose(2, 0, 1)
    assert np.array_equal(raster.data, expected)


def test_generated_values_are_float32_exact() -> None:
    raster, _ = generate(make_synth_config())
    assert np.array_equal(raster.data.astype(np.float32).astype(np.float64), raster.data)


def test_islands_without_sheets() -> None:
    raster, truth = generate(make_synth_config(n_sheets=0, n_islands=5))
    assert (truth.labels == ISLAND).any()
    assert not (truth.labels == SHEET).any()
    assert (raster.width, raster.height) == (32, 32)


def test_sheet_placement_failure_is_reported(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(synth, "MAX_ATTEMPTS", 0)
    with pytest.raises(PlacementError, match="sheet 0"):
        generate(make_synth_config())


def test_synth_config_rejects_shapes_that_cannot_fit() -> None:
    with pytest.raises(ValidationError):
        make_synth_config(island_radius=(3, 16))
    with pytest.raises(ValidationError):
        make_synth_config(sheet_length=(10, 40))
    with pytest.raises(ValidationError):
        make_synth_config(island_radius=(4, 3))


def test_nearest_centroid_recovers_classes_at_default_noise() -> None:
    for noise in (0.1, 0.3):
        raster, truth = generate(SynthConfig(noise_sigma=noise, seed=5))
        pixels = raster.pixel_vectors()
        labels = truth.labels.ravel()
        present = np.unique(labels)
        centroids = np.array([pixels[labels == k].mean(axis=0) for k in present])
        d2 = ((pixels[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        predicted = present[np.argmin(d2, axis=1)]
        assert np.mean(predicted == labels) >= 0.99


def test_no_shapes_and_no_noise_give_a_constant_raster() -> None:
    raster, truth = generate(make_synth_config(n_islands=0, n_sheets=0, noise_sigma=0.0))
    assert np.all(raster.data == 0.0)
    assert truth.counts() == [32 * 32, 0, 0]
    with pytest.raises(DegenerateChannelError):
        normalize(raster)


def test_edge_width_fades_plateaus_outside_the_shapes() -> None:
    config = make_synth_config(n_sheets=0, n_islands=1, noise_sigma=0.0, edge_width=3.0)
    raster, truth = generate(config)
    hard, hard_truth = generate(config.model_copy(update={"edge_width": 0.0}))
    assert truth.same_labels(hard_truth)

    field = raster.data[0]
    island = truth.labels == ISLAND
    assert np.all(field[island] == 2.0)
    outside = field[~island]
    assert np.all((outside >= 0.0) & (outside < 2.0))

    # Background pixels next to the island sit at least 2/3 of the way up the fade.
    ring = np.zeros_like(island)
    ring[1:, :] |= island[:-1, :]
    ring[:-1, :] |= island[1:, :]
    ring[:, 1:] |= island[:, :-1]
    ring[:, :-1] |= island[:, 1:]
    ring &= ~island
    assert ring.any()
    assert np.all(field[ring] >= 2.0 * (2.0 / 3.0) - 1e-6)

    island_pixels = np.argwhere(island)
    for y, x in np.argwhere(~island):
        nearest = np.sqrt(((island_pixels - (y, x)) ** 2).sum(axis=1)).min()
        if nearest > config.edge_width + 2:
            assert field[y, x] == 0.0
    assert np.all(hard.data[0][~island] == 0.0)


def test_edge_width_keeps_sheet_pixels_at_their_plateau() -> None:
    raster, truth = generate(make_synth_config(noise_sigma=0.0, edge_width=2.0))
    sheet = truth.labels == SHEET
    expected = class_plateaus(2.0)[SHEET]
    for channel in range(3):
        assert np.all(raster.data[channel][sheet] == expected[channel])
