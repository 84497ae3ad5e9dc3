from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from sce_segmentation.config.settings import EnsembleConfig, SomConfig
from sce_segmentation.config.validate import (
    ConfigValidationError,
    ConfigValidationIssue,
    issues_from_pydantic_error,
    located_path,
    validate_ensemble_config,
)
from sce_segmentation.domain.error_messages import ErrorMessages

# Defaults reproduce the reference grid: 15x10 map, three learning rates, five lengths.
_DEFAULTS: dict[str, Any] = {
    "master_seed": 0,
    "map_size": ["15x10"],
    "alpha0": [0.6, 0.7, 0.8],
    "iterations": [10000, 20000, 30000, 40000, 50000],
    "join_k": [3, 4, 5, 6],
}

_LIST_KEYS = frozenset({"map_size", "alpha0", "iterations", "join_k", "thresholds"})
_SOM_SHARED_KEYS = frozenset({"alpha_final", "sigma0", "sigma_final", "join_method"})
_ENSEMBLE_KEYS = frozenset(
    {
        "epsilon",
        "ratio_cap",
        "gap_delta",
        "thresholds",
        "normalization",
        "snapshot_mode",
        "clip_sigma",
        "normalize_display",
    }
)
_KNOWN_KEYS = (
    _LIST_KEYS | _SOM_SHARED_KEYS | _ENSEMBLE_KEYS | {"master_seed", "n_runs"}
)

_KEY_RE = re.compile(r"^[a-z_][a-z0-9_]*$")
_MAP_SIZE_RE = re.compile(r"^\s*(\d+)\s*[xX×]\s*(\d+)\s*$")
# Model fields whose value comes from a differently named config key.
_FIELD_KEYS = {"map_rows": "map_size", "map_cols": "map_size", "runs": "n_runs"}


@dataclass(frozen=True)
class _Entry:
    value: Any
    where: str


def parse_flat_config(text: str) -> dict[str, _Entry]:
    """
    Parse flat `key = value` lines. `#` starts a comment; list values are comma-separated.

    Every problem is reported with its 1-based line number.
    """
    entries: dict[str, _Entry] = {}
    issues: list[ConfigValidationIssue] = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        if "=" not in line:
            issues.append(ConfigValidationIssue(where, f"expected 'key = value', got {line!r}"))
            continue
        key, _, value = (part.strip() for part in line.partition("="))
        key = key.lower()
        if not _KEY_RE.fullmatch(key):
            issues.append(ConfigValidationIssue(where, f"invalid key {key!r}"))
            continue
        if key not in _KNOWN_KEYS:
            issues.append(ConfigValidationIssue(where, f"unknown key {key!r}"))
            continue
        if key in entries:
            issues.append(
                ConfigValidationIssue(
                    where, f"duplicate key {key!r} (first set on {entries[key].where})"
                )
            )
            continue
        if not value:
            issues.append(ConfigValidationIssue(where, f"empty value for {key!r}"))
            continue
        if key in _LIST_KEYS:
            items = [item.strip() for item in value.split(",")]
            if any(not item for item in items):
                issues.append(ConfigValidationIssue(where, f"empty list item in {key!r}"))
                continue
            entries[key] = _Entry(items, where)
        else:
            entries[key] = _Entry(value, where)

    if issues:
        raise ConfigValidationError(issues)
    return entries


def _entries_from_yaml(path: Path, text: str) -> dict[str, _Entry]:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigValidationError(
            [ConfigValidationIssue(str(path), f"invalid YAML: {exc}")]
        ) from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigValidationError(
            [ConfigValidationIssue(str(path), "YAML root must be a mapping/object")]
        )

    issues: list[ConfigValidationIssue] = []
    entries: dict[str, _Entry] = {}
    for key, value in raw.items():
        name = str(key).lower()
        if name not in _KNOWN_KEYS:
            issues.append(ConfigValidationIssue(name, f"unknown key {name!r}"))
            continue
        if name in _LIST_KEYS and not isinstance(value, list):
            value = [value]
        entries[name] = _Entry(value, name)
    if issues:
        raise ConfigValidationError(issues)
    return entries


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigValidationError(
            [
                ConfigValidationIssue(
                    "config",
                    ErrorMessages.FILE_NOT_FOUND.format(kind="Config", path=path),
                )
            ]
        ) from exc
    except OSError as exc:
        raise ConfigValidationError(
            [ConfigValidationIssue(str(path), f"Unable to read config file: {exc}")]
        ) from exc


def _scalar(entries: dict[str, _Entry], key: str, convert: Any, issues: list) -> Any:
    entry = entries.get(key)
    if entry is None:
        return _DEFAULTS.get(key)
    try:
        return convert(entry.value)
    except (TypeError, ValueError) as exc:
        issues.append(ConfigValidationIssue(entry.where, f"{key}: {exc}"))
        return None


def _items(entries: dict[str, _Entry], key: str, convert: Any, issues: list) -> list[Any]:
    entry = entries.get(key)
    raw = entry.value if entry is not None else _DEFAULTS.get(key, [])
    where = entry.where if entry is not None else key
    out: list[Any] = []
    for item in raw:
        try:
            out.append(convert(item))
        except (TypeError, ValueError) as exc:
            issues.append(ConfigValidationIssue(where, f"{key}: {exc}"))
    return out


def _parse_map_size(value: Any) -> tuple[int, int]:
    match = _MAP_SIZE_RE.fullmatch(str(value))
    if match is None:
        raise ValueError(f"map size must look like '15x10', got {value!r}")
    return int(match.group(1)), int(match.group(2))


def _parse_iterations(value: Any) -> int | None:
    if str(value).strip().lower() == "auto":
        return None
    return _parse_int(value)


def _parse_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    text = str(value).strip().replace("_", "")
    return int(text)


def _parse_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    return float(str(value).strip())


def _parse_word(value: Any) -> str:
    return str(value).strip().lower()


def _parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    normalized = str(value).strip().lower()
    if normalized in {"1", "true", "yes", "on"}:
        return True
    if normalized in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def build_run_grid(
    *,
    map_sizes: list[tuple[int, int]],
    alphas: list[float],
    iterations: list[int | None],
    join_ks: list[int],
    n_runs: int | None = None,
    shared: dict[str, Any] | None = None,
) -> list[dict[str, Any]]:
    """
    Expand map_size x alpha0 x iterations (in that nesting order) into run parameter dicts.

    With n_runs the grid is cycled or truncated to exactly n_runs entries; join_k cycles
    over the final run index.
    """
    grid = list(itertools.product(map_sizes, alphas, iterations))
    if not grid or not join_ks:
        return []
    count = len(grid) if n_runs is None else n_runs
    runs: list[dict[str, Any]] = []
    for index in range(count):
        (rows, cols), alpha, steps = grid[index % len(grid)]
        params: dict[str, Any] = {
            "map_rows": rows,
            "map_cols": cols,
            "alpha0": alpha,
            "iterations": steps,
            "join_k": join_ks[index % len(join_ks)],
        }
        params.update(shared or {})
        runs.append(params)
    return runs


def ensemble_config_from_entries(
    entries: dict[str, _Entry], *, master_seed: int | None = None
) -> EnsembleConfig:
    def locate(field: str) -> str | None:
        entry = entries.get(_FIELD_KEYS.get(field, field))
        return None if entry is None else entry.where

    issues: list[ConfigValidationIssue] = []

    map_sizes = _items(entries, "map_size", _parse_map_size, issues)
    alphas = _items(entries, "alpha0", _parse_float, issues)
    iterations = _items(entries, "iterations", _parse_iterations, issues)
    join_ks = _items(entries, "join_k", _parse_int, issues)
    n_runs = _scalar(entries, "n_runs", _parse_int, issues)

    shared: dict[str, Any] = {}
    for key in sorted(_SOM_SHARED_KEYS):
        if key in entries:
            convert = _parse_word if key == "join_method" else _parse_float
            shared[key] = _scalar(entries, key, convert, issues)

    ensemble: dict[str, Any] = {
        "master_seed": _scalar(entries, "master_seed", _parse_int, issues),
    }
    if master_seed is not None:
        ensemble["master_seed"] = master_seed
    for key, convert in (
        ("epsilon", _parse_float),
        ("ratio_cap", _parse_float),
        ("gap_delta", _parse_float),
        ("clip_sigma", _parse_float),
        ("normalize_display", _parse_bool),
        ("normalization", _parse_word),
        ("snapshot_mode", _parse_word),
    ):
        if key in entries:
            ensemble[key] = _scalar(entries, key, convert, issues)
    if "thresholds" in entries:
        ensemble["thresholds"] = tuple(_items(entries, "thresholds", _parse_float, issues))

    if n_runs is not None and n_runs < 1:
        issues.append(
            ConfigValidationIssue(entries["n_runs"].where, "n_runs must be >= 1")
        )
    if issues:
        raise ConfigValidationError(issues)

    runs = build_run_grid(
        map_sizes=map_sizes,
        alphas=alphas,
        iterations=iterations,
        join_ks=join_ks,
        n_runs=n_runs,
        shared=shared,
    )
    if len(runs) < 2:
        raise ConfigValidationError(
            [
                ConfigValidationIssue(
                    located_path("runs", "runs", locate),
                    ErrorMessages.TOO_FEW_RUNS.format(count=len(runs)),
                )
            ]
        )

    try:
        som_configs = tuple(SomConfig(**params) for params in runs)
    except ValidationError as exc:
        raise ConfigValidationError(
            issues_from_pydantic_error(exc, prefix="runs.", locate=locate)
        ) from exc

    try:
        config = EnsembleConfig(runs=som_configs, **ensemble)
    except ValidationError as exc:
        raise ConfigValidationError(issues_from_pydantic_error(exc, locate=locate)) from exc

    validate_ensemble_config(config, locate=locate)
    return config


def load_ensemble_config(
    path: str | Path, *, master_seed: int | None = None
) -> EnsembleConfig:
    """Load an ensemble config from flat `key = value` text or, for .yaml/.yml, from YAML."""
    config_path = Path(path)
    text = _read_text(config_path)
    if config_path.suffix.lower() in {".yaml", ".yml"}:
        entries = _entries_from_yaml(config_path, text)
    else:
        entries = parse_flat_config(text)
    return ensemble_config_from_entries(entries, master_seed=master_seed)
