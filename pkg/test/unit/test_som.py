from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from sce_segmentation.domain.errors import DimensionMismatchError, EmptyDataError
from sce_segmentation.domain.raster import FeatureRaster
from sce_segmentation.domain.som import (
    Labeling,
    SomMap,
    apply_update,
    bmu,
    bmu_many,
    init_map,
    label_pixels,
    learning_rate_at,
    link_neurons,
    neighborhood_weight,
    quantization_error,
    radius_at,
    train,
)
from test.support.factories import make_som_config, two_blob_raster


def test_config_defaults_follow_map_size() -> None:
    config = make_som_config(map_rows=4, map_cols=6, iterations=None)
    assert config.steps == 500 * 24
    assert config.radius0 == 3.0
    small = make_som_config(map_rows=1, map_cols=2, join_k=2, sigma_final=1.0)
    assert small.radius0 == 1.0


def test_config_rejects_bad_schedules() -> None:
    with pytest.raises(ValidationError):
        make_som_config(alpha0=0.1, alpha_final=0.2)
    with pytest.raises(ValidationError):
        make_som_config(sigma0=0.5)
    with pytest.raises(ValidationError):
        make_som_config(join_k=10)
    with pytest.raises(ValidationError):
        make_som_config(alpha0=1.0)


def test_init_map_draws_inside_data_bounds_and_is_seeded() -> None:
    data = np.array([[0.0, 10.0], [1.0, 20.0], [0.5, 15.0]])
    config = make_som_config()
    som_map = init_map(config, data)
    assert som_map.weights.shape == (9, 2)
    assert np.all(som_map.weights[:, 0] >= 0.0) and np.all(som_map.weights[:, 0] <= 1.0)
    assert np.all(som_map.weights[:, 1] >= 10.0) and np.all(som_map.weights[:, 1] <= 20.0)
    assert init_map(config, data).same_weights(som_map)
    assert not init_map(make_som_config(seed=2), data).same_weights(som_map)


def test_init_map_rejects_empty_data() -> None:
    with pytest.raises(EmptyDataError):
        init_map(make_som_config(), np.empty((0, 2)))


def test_bmu_breaks_ties_by_lowest_index() -> None:
    som_map = SomMap(rows=1, cols=3, weights=np.array([[1.0], [-1.0], [1.0]]))
    assert bmu(som_map, np.array([0.0])) == 0
    assert bmu(som_map, np.array([0.9])) == 0
    assert bmu(som_map, np.array([-0.2])) == 1
    assert bmu_many(som_map, np.array([[0.0], [-0.2], [5.0]])).tolist() == [0, 1, 0]


def test_bmu_rejects_wrong_vector_length() -> None:
    som_map = SomMap(rows=1, cols=2, weights=np.zeros((2, 3)))
    with pytest.raises(DimensionMismatchError):
        bmu(som_map, np.zeros(2))


def test_schedules_decay_linearly_between_endpoints() -> None:
    config = make_som_config(
        map_rows=4, map_cols=4, join_k=2, iterations=11, sigma0=3.0, alpha0=0.5, alpha_final=0.1
    )
    assert radius_at(0, config) == 3.0
    assert radius_at(10, config) == pytest.approx(1.0)
    assert radius_at(5, config) == pytest.approx(2.0)
    assert learning_rate_at(0, config) == 0.5
    assert learning_rate_at(10, config) == pytest.approx(0.1)


def test_neighborhood_weight_is_one_at_center_and_decays() -> None:
    config = make_som_config(map_rows=3, map_cols=3, sigma0=1.0, iterations=10)
    assert neighborhood_weight(0, 4, 4, config) == 1.0
    assert neighborhood_weight(0, 4, 5, config) == pytest.approx(np.exp(-0.5))
    assert neighborhood_weight(0, 0, 8, config) == pytest.approx(np.exp(-4.0))
    with pytest.raises(ValueError):
        neighborhood_weight(10, 0, 0, config)


@given(
    w=st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
    x=st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
    f=st.floats(0.0, 1.0),
)
def test_apply_update_stays_within_segment(w: list[float], x: list[float], f: float) -> None:
    weights = np.array([w])
    vector = np.array(x)
    updated = apply_update(weights, vector, np.array([f]))
    assert np.all(updated >= np.minimum(weights, vector))
    assert np.all(updated <= np.maximum(weights, vector))


def test_training_keeps_weights_inside_data_hull_and_is_deterministic() -> None:
    raster, _ = two_blob_raster(n=8)
    config = make_som_config(iterations=300)
    data = raster.pixel_vectors()
    trained = train(init_map(config, raster), raster, config)
    assert np.all(trained.weights >= data.min(axis=0) - 1e-12)
    assert np.all(trained.weights <= data.max(axis=0) + 1e-12)
    again = train(init_map(config, raster), raster, config)
    assert trained.same_weights(again)
    assert quantization_error(trained, raster) < quantization_error(
        init_map(config, raster), raster
    )


def test_label_pixels_separates_two_blobs() -> None:
    raster, truth = two_blob_raster(n=12, separation=12.0)
    config = make_som_config(iterations=600, join_k=2)
    som_map = train(init_map(config, raster), raster, config)
    labeling = label_pixels(som_map, raster, config)
    assert labeling.n_clusters == 2
    assert labeling.requested_clusters == 2
    labels = labeling.labels
    agreement = max(np.mean(labels == truth), np.mean(labels == 1 - truth))
    assert agreement > 0.95


def test_label_pixels_reduces_k_above_distinct_weights() -> None:
    raster, _ = two_blob_raster(n=4)
    som_map = SomMap(rows=2, cols=2, weights=np.array([[0.0, 0.0]] * 3 + [[10.0, 10.0]]))
    config = make_som_config(map_rows=2, map_cols=2, join_k=4)
    labeling = label_pixels(som_map, raster, config)
    assert labeling.requested_clusters == 4
    assert labeling.n_clusters <= 2


def test_labeling_requires_compact_ids_unless_absent_allowed() -> None:
    with pytest.raises(ValueError):
        Labeling(width=2, height=1, labels=np.array([0, 2]), n_clusters=3)
    labeling = Labeling(width=2, height=1, labels=np.array([0, 2]), n_clusters=3, allow_absent=True)
    assert labeling.counts() == [1, 0, 1]
    with pytest.raises(ValueError):
        Labeling(width=2, height=1, labels=np.array([0, 3]), n_clusters=3, allow_absent=True)


def test_quantization_error_examples() -> None:
    som_map = SomMap(rows=1, cols=2, weights=np.array([[0.0, 0.0], [2.0, 1.0]]))
    assert quantization_error(som_map, np.array([[0.0, 0.0], [2.0, 1.0]])) == 0.0
    single = SomMap(rows=1, cols=1, weights=np.array([[0.0, 0.0]]))
    assert quantization_error(single, np.array([[1.0, 0.0]])) == 1.0
    assert quantization_error(single, np.array([[3.0, 4.0]])) == 5.0
    with pytest.raises(EmptyDataError):
        quantization_error(single, np.empty((0, 2)))


def _line_map() -> tuple[SomMap, FeatureRaster]:
    # 13 closely spaced neurons, one neuron no pixel reaches, two far apart neurons.
    values = np.concatenate([np.arange(13) * 0.1, [5.0, 10.0, 10.5]])
    som_map = SomMap(rows=4, cols=4, weights=values[:, None])
    pixels = np.delete(values, 13)
    raster = FeatureRaster(width=pixels.size, height=1, data=pixels[None, None, :])
    return som_map, raster


def test_linkage_join_keeps_a_dense_run_of_neurons_whole() -> None:
    som_map, raster = _line_map()
    config = make_som_config(map_rows=4, map_cols=4, join_k=3, join_method="linkage")
    labels = label_pixels(som_map, raster, config).labels.ravel()
    assert len(set(labels[:13].tolist())) == 1
    assert len({labels[0], labels[13], labels[14]}) == 3


def test_linkage_join_gives_unused_neurons_the_nearest_live_group() -> None:
    som_map, _ = _line_map()
    live = np.ones(16, dtype=bool)
    live[13] = False
    groups = link_neurons(som_map.weights, 3, live)
    assert groups[13] == groups[12]
    assert link_neurons(som_map.weights, 1, live).tolist() == [0] * 16


def test_linkage_join_reduces_k_to_distinct_live_neurons() -> None:
    som_map = SomMap(rows=2, cols=2, weights=np.array([[0.0], [1.0], [2.0], [3.0]]))
    raster = FeatureRaster(width=3, height=1, data=np.array([[[0.0, 0.1, 3.0]]]))
    config = make_som_config(map_rows=2, map_cols=2, join_k=3, join_method="linkage")
    labeling = label_pixels(som_map, raster, config)
    assert labeling.requested_clusters == 3
    assert labeling.n_clusters == 2
    first, second, third = labeling.labels.ravel().tolist()
    assert first == second != third
