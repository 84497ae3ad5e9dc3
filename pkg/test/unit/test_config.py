from __future__ import annotations

from pathlib import Path

import pytest
from pydantic import ValidationError

from sce_segmentation.config.load import (
    build_run_grid,
    ensemble_config_from_entries,
    load_ensemble_config,
    parse_flat_config,
)
from sce_segmentation.config.settings import ObservabilitySettings
from sce_segmentation.config.validate import ConfigValidationError
from test.support.factories import make_ensemble_config


def test_default_grid_has_fifteen_runs_of_a_15x10_map() -> None:
    config = ensemble_config_from_entries({})
    assert len(config.runs) == 15
    assert {(r.map_rows, r.map_cols) for r in config.runs} == {(15, 10)}
    assert [r.alpha0 for r in config.runs[:6]] == [0.6] * 5 + [0.7]
    assert [r.iterations for r in config.runs[:5]] == [10000, 20000, 30000, 40000, 50000]
    assert [r.join_k for r in config.runs[:5]] == [3, 4, 5, 6, 3]
    assert config.thresholds == (1.0,)


def test_flat_config_file(tmp_path: Path) -> None:
    path = tmp_path / "ensemble.conf"
    path.write_text(
        "# small grid\n"
        "master_seed = 42\n"
        "map_size = 4x3, 5x5\n"
        "alpha0 = 0.5\n"
        "iterations = 1_000, auto\n"
        "join_k = 2, 3\n"
        "thresholds = 1, 2.5\n"
        "gap_delta = 0.4  # relative drop\n"
        "normalize_display = yes\n",
        encoding="utf-8",
    )
    config = load_ensemble_config(path)
    assert config.master_seed == 42
    assert len(config.runs) == 4
    assert (config.runs[0].map_rows, config.runs[0].map_cols) == (4, 3)
    assert config.runs[0].iterations == 1000
    assert config.runs[1].iterations is None
    assert config.runs[1].steps == 500 * 12
    assert [r.join_k for r in config.runs] == [2, 3, 2, 3]
    assert config.thresholds == (1.0, 2.5)
    assert config.gap_delta == 0.4
    assert config.normalize_display is True
    assert load_ensemble_config(path, master_seed=3).master_seed == 3


def test_yaml_config_file(tmp_path: Path) -> None:
    path = tmp_path / "ensemble.yaml"
    path.write_text(
        "map_size: 3x3\nalpha0: [0.5, 0.6]\niterations: 200\njoin_k: 2\nn_runs: 5\n",
        encoding="utf-8",
    )
    config = load_ensemble_config(path)
    assert len(config.runs) == 5
    assert [r.alpha0 for r in config.runs] == [0.5, 0.6, 0.5, 0.6, 0.5]


def test_flat_config_reports_every_problem_with_line_numbers() -> None:
    with pytest.raises(ConfigValidationError) as excinfo:
        parse_flat_config("alpha0 = 0.5\nbogus = 1\nno equals sign\nalpha0 = 0.6\njoin_k =\n")
    paths = [issue.path for issue in excinfo.value.issues]
    assert paths == ["line 2", "line 3", "line 4", "line 5"]
    assert "duplicate key 'alpha0' (first set on line 1)" in str(excinfo.value)


def test_invalid_values_become_config_errors(tmp_path: Path) -> None:
    path = tmp_path / "bad.conf"
    path.write_text("map_size = 15by10\nalpha0 = 1.5\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="map size must look like"):
        load_ensemble_config(path)

    path.write_text("alpha0 = 1.5\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="runs."):
        load_ensemble_config(path)

    path.write_text("n_runs = 1\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match=">= 2 runs"):
        load_ensemble_config(path)

    path.write_text("thresholds = 1, 1\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="duplicate threshold"):
        load_ensemble_config(path)

    path.write_text("ratio_cap = 0.5\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="ratio_cap must be >= 1"):
        load_ensemble_config(path)


def test_model_errors_name_the_line_that_set_the_value(tmp_path: Path) -> None:
    path = tmp_path / "bad.conf"
    path.write_text(
        "master_seed = 1\n"
        "alpha0 = 0.6, 1.5\n"
        "map_size = 4x3\n"
        "join_k = 2\n"
        "gap_delta = 0.4\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigValidationError) as excinfo:
        load_ensemble_config(path)
    assert [issue.path for issue in excinfo.value.issues] == ["runs.alpha0 (line 2)"]

    path.write_text(
        "master_seed = 1\nalpha0 = 0.6\nmap_size = 4x3\njoin_k = 2\ngap_delta = 2\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigValidationError) as excinfo:
        load_ensemble_config(path)
    assert [issue.path for issue in excinfo.value.issues] == ["gap_delta (line 5)"]
    assert "line 5" in str(excinfo.value)

    path.write_text("map_size = 0x3\nthresholds = 2, 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError) as excinfo:
        load_ensemble_config(path)
    assert excinfo.value.issues[0].path.startswith("runs.map_rows (line 1)")

    path.write_text("thresholds = 2, 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError) as excinfo:
        load_ensemble_config(path)
    assert [issue.path for issue in excinfo.value.issues] == ["thresholds (line 1)"]


def test_yaml_errors_keep_the_key_name(tmp_path: Path) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text("gap_delta: 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError) as excinfo:
        load_ensemble_config(path)
    assert [issue.path for issue in excinfo.value.issues] == ["gap_delta"]


def test_join_method_and_snapshot_mode_keys(tmp_path: Path) -> None:
    path = tmp_path / "ensemble.conf"
    path.write_text(
        "map_size = 4x3\nalpha0 = 0.5\njoin_k = 2, 3\n"
        "join_method = Linkage\nsnapshot_mode = stacked\n",
        encoding="utf-8",
    )
    config = load_ensemble_config(path)
    assert {run.join_method for run in config.runs} == {"linkage"}
    assert config.snapshot_mode == "stacked"

    path.write_text("join_method = ward\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match=r"runs.join_method \(line 1\)"):
        load_ensemble_config(path)
    assert ensemble_config_from_entries({}).snapshot_mode == "single"


def test_missing_and_malformed_files(tmp_path: Path) -> None:
    with pytest.raises(ConfigValidationError, match="Config file not found"):
        load_ensemble_config(tmp_path / "missing.conf")
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError, match="mapping"):
        load_ensemble_config(path)


def test_build_run_grid_nesting_and_cycling() -> None:
    runs = build_run_grid(
        map_sizes=[(2, 2)], alphas=[0.1, 0.2], iterations=[10, 20], join_ks=[2], n_runs=6
    )
    assert [(r["alpha0"], r["iterations"]) for r in runs] == [
        (0.1, 10),
        (0.1, 20),
        (0.2, 10),
        (0.2, 20),
        (0.1, 10),
        (0.1, 20),
    ]


def test_ensemble_config_rejects_single_run_and_bad_thresholds() -> None:
    with pytest.raises(ValidationError):
        make_ensemble_config(runs=1)
    with pytest.raises(ValidationError):
        make_ensemble_config(thresholds=(0.0,))
    with pytest.raises(ValidationError):
        make_ensemble_config(gap_delta=1.0)


def test_observability_settings_come_from_arguments_only(
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    monkeypatch.setenv("SCE_LOG_LEVEL", "debug")
    monkeypatch.setenv("SCE_LOG_FORMAT", "json")
    settings = ObservabilitySettings()
    assert settings.log_level == "INFO"
    assert settings.log_format == "human"

    settings = ObservabilitySettings(log_level=" debug ", log_format="json")
    assert settings.log_level == "DEBUG"
    assert settings.log_format == "json"

    with pytest.raises(ValidationError):
        ObservabilitySettings(log_level="LOUD")
    with pytest.raises(ValidationError):
        ObservabilitySettings(log_format="xml")
