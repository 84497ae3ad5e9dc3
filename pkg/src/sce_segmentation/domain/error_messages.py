"""Error message constants for consistent error reporting.

Keeps wording identical across codecs, domain operations and the CLI.
"""
from __future__ import annotations


class ErrorMessages:
    """Centralized error message templates."""

    # Files / codecs
    FILE_NOT_FOUND = "{kind} file not found: {path}"
    BAD_MAGIC = "{path}: bad magic {found!r} (expected {expected!r})"
    BAD_VERSION = "{path}: unsupported format version {version} (expected {expected})"
    TRUNCATED = "{path}: payload has {actual} bytes, header declares {expected}"
    SHORT_HEADER = "{path}: file too short for a {kind} header ({size} bytes)"
    NON_FINITE = "{path}: non-finite value at flat index {index}"
    FLOAT32_OVERFLOW = "{path}: value {value!r} at flat index {index} overflows float32"
    FLOAT32_INEXACT = (
        "{path}: value {value!r} at flat index {index} is not exactly representable as float32"
    )
    EMPTY_PATH = "output path must not be empty"

    # Domain
    DIMENSION_MISMATCH = "dimension mismatch: {left} vs {right}"
    EMPTY_DATA = "{what} requires at least one data vector"
    SAME_RUN = "masks {left} and {right} come from the same run"
    NO_COMPARISONS = "base mask {base} has no masks from other runs to compare against"
    TOO_FEW_RUNS = "stacking requires >= 2 runs (got {count})"
    TOO_FEW_RANKED = "gap detection requires >= 2 ranked entries (got {count})"
    EMPTY_UNION = "union of the compared masks is empty"
    PLACEMENT_FAILED = (
        "could not place {shape} {index} inside {width}x{height} after {attempts} attempts"
    )

    # Pipeline
    MISSING_ARTIFACT = "run directory {path} is missing {what}"


def format_dimension_mismatch(left: object, right: object) -> str:
    return ErrorMessages.DIMENSION_MISMATCH.format(left=left, right=right)
