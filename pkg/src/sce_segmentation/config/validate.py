from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass

from pydantic import ValidationError

from sce_segmentation.config.settings import EnsembleConfig

# Maps a model field name to where its value was set (e.g. "line 4"), or None.
Locator = Callable[[str], str | None]


@dataclass(frozen=True)
class ConfigValidationIssue:
    path: str
    message: str


class ConfigValidationError(ValueError):
    def __init__(self, issues: Iterable[ConfigValidationIssue]):
        self.issues = list(issues)
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        lines = ["Configuration is invalid:"]
        for issue in self.issues:
            lines.append(f"- {issue.path}: {issue.message}")
        return "\n".join(lines)


def located_path(path: str, field: str, locate: Locator | None) -> str:
    where = locate(field) if locate is not None else None
    if where is None or where == field:
        return path
    return f"{path} ({where})"


def issues_from_pydantic_error(
    error: ValidationError, *, prefix: str = "", locate: Locator | None = None
) -> list[ConfigValidationIssue]:
    issues: list[ConfigValidationIssue] = []
    for item in error.errors(include_url=False):
        parts = item.get("loc", ())
        loc = ".".join(str(part) for part in parts) or "<root>"
        msg = item.get("msg", "Invalid value")
        path = f"{prefix}{loc}"
        if parts:
            path = located_path(path, str(parts[0]), locate)
        issues.append(ConfigValidationIssue(path=path, message=msg))
    return issues


def validate_ensemble_config(config: EnsembleConfig, *, locate: Locator | None = None) -> None:
    issues: list[ConfigValidationIssue] = []

    _validate_thresholds(config, issues)
    _validate_clamping(config, issues)

    if issues:
        raise ConfigValidationError(
            ConfigValidationIssue(located_path(issue.path, issue.path, locate), issue.message)
            for issue in issues
        )


def _validate_thresholds(config: EnsembleConfig, issues: list[ConfigValidationIssue]) -> None:
    if len(set(config.thresholds)) != len(config.thresholds):
        issues.append(
            ConfigValidationIssue(
                path="thresholds",
                message=f"duplicate threshold values in {list(config.thresholds)}",
            )
        )


def _validate_clamping(config: EnsembleConfig, issues: list[ConfigValidationIssue]) -> None:
    # A cap below 1 would rank a perfect match under an ordinary one.
    if config.ratio_cap < 1.0:
        issues.append(
            ConfigValidationIssue(
                path="ratio_cap",
                message=f"ratio_cap must be >= 1 (got {config.ratio_cap:g})",
            )
        )
    if config.epsilon >= 1.0:
        issues.append(
            ConfigValidationIssue(
                path="epsilon",
                message=f"epsilon must be < 1 (got {config.epsilon:g})",
            )
        )
