from __future__ import annotations

import re
from pathlib import Path

_SEGMENT_RE = re.compile(r"^[A-Za-z0-9._-]+$")


def validate_segment(seg: str, *, max_length: int = 128) -> str:
    """Accept a single file or directory name made of [A-Za-z0-9._-] only."""
    if not isinstance(seg, str):
        raise TypeError("segments must be strings")
    if seg in {"", ".", ".."}:
        raise ValueError(f"invalid path segment {seg!r}")
    if len(seg) > max_length:
        raise ValueError(f"path segment too long (max_length={max_length})")
    if _SEGMENT_RE.fullmatch(seg) is None:
        raise ValueError(f"path segment {seg!r} contains disallowed characters")
    return seg


def ensure_within_root(root: Path, target: Path) -> None:
    root_resolved = Path(root).resolve(strict=False)
    target_resolved = Path(target).resolve(strict=False)
    if not target_resolved.is_relative_to(root_resolved):
        raise ValueError(f"target path {target} escapes root {root}")
