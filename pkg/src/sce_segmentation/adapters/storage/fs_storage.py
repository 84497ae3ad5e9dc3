from __future__ import annotations

import os
import tempfile
from pathlib import Path

from sce_segmentation.domain.error_messages import ErrorMessages
from sce_segmentation.domain.errors import ArtifactNotFoundError
from sce_segmentation.domain.path_policy import ensure_within_root

_FILE_MODE = 0o644


def ensure_dir(path: Path) -> None:
    Path(path).mkdir(parents=True, exist_ok=True)


def _fsync_dir_best_effort(dir_path: Path) -> None:
    """fsync a directory after a replace; platforms that refuse are ignored."""
    try:
        fd = os.open(str(dir_path), os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)


def _reject_symlinks_under_root(root: Path, target_dir: Path) -> None:
    root_resolved = Path(root).resolve(strict=False)
    dir_resolved = Path(target_dir).resolve(strict=False)
    ensure_within_root(root_resolved, dir_resolved)

    current = root_resolved
    for part in dir_resolved.relative_to(root_resolved).parts:
        current = current / part
        if current.is_symlink():
            raise ValueError(f"{current} is a symlink inside the output root")


def write_atomic_bytes(
    target_path: Path, data: bytes, *, storage_root: Path, fsync: bool = False
) -> None:
    """
    Write `data` to a temp file next to the target and rename it into place.

    The target must lie under `storage_root`; missing parent directories are created.
    """
    target = Path(target_path)
    parent = target.parent
    ensure_within_root(storage_root, target)
    _reject_symlinks_under_root(storage_root, parent)
    ensure_dir(parent)

    tmp_path: Path | None = None
    fd: int | None = None
    try:
        fd, tmp_name = tempfile.mkstemp(dir=str(parent), prefix=".tmp-")
        tmp_path = Path(tmp_name)
        with os.fdopen(fd, "wb") as f:
            fd = None
            f.write(data)
            f.flush()
            os.fchmod(f.fileno(), _FILE_MODE)
            if fsync:
                os.fsync(f.fileno())
        os.replace(tmp_path, target)
        tmp_path = None
        if fsync:
            _fsync_dir_best_effort(parent)
    finally:
        _safe_close(fd)
        _safe_unlink(tmp_path)


def write_atomic_text(
    target_path: Path, text: str, *, storage_root: Path, fsync: bool = False
) -> None:
    write_atomic_bytes(target_path, text.encode("utf-8"), storage_root=storage_root, fsync=fsync)


def read_artifact(path: Path, *, kind: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise ArtifactNotFoundError(
            ErrorMessages.FILE_NOT_FOUND.format(kind=kind, path=path)
        ) from exc


def _safe_close(fd: int | None) -> None:
    if fd is None:
        return
    try:
        os.close(fd)
    except OSError:
        pass


def _safe_unlink(path: Path | None) -> None:
    if path is None:
        return
    try:
        path.unlink()
    except OSError:
        pass
