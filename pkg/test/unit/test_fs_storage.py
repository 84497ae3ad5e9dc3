from __future__ import annotations

import os
import stat
from pathlib import Path

import pytest

from sce_segmentation.adapters.storage.fs_storage import (
    read_artifact,
    write_atomic_bytes,
    write_atomic_text,
)
from sce_segmentation.domain.errors import ArtifactNotFoundError


def test_write_atomic_creates_parents_and_leaves_no_temp_files(tmp_path: Path) -> None:
    target = tmp_path / "a" / "b" / "out.bin"
    write_atomic_bytes(target, b"\x00\x01", storage_root=tmp_path, fsync=True)
    assert target.read_bytes() == b"\x00\x01"
    assert stat.S_IMODE(target.stat().st_mode) == 0o644
    assert [p.name for p in target.parent.iterdir()] == ["out.bin"]

    write_atomic_text(target, "replaced\n", storage_root=tmp_path)
    assert target.read_text("utf-8") == "replaced\n"


def test_write_atomic_rejects_paths_outside_root(tmp_path: Path) -> None:
    with pytest.raises(ValueError):
        write_atomic_bytes(tmp_path.parent / "escape.bin", b"x", storage_root=tmp_path)


def test_write_atomic_rejects_symlinks_leaving_root(tmp_path: Path) -> None:
    root = tmp_path / "root"
    root.mkdir()
    elsewhere = tmp_path / "outside"
    elsewhere.mkdir()
    os.symlink(elsewhere, root / "link")
    with pytest.raises(ValueError):
        write_atomic_bytes(root / "link" / "f.bin", b"x", storage_root=root)


def test_read_artifact_names_the_kind(tmp_path: Path) -> None:
    with pytest.raises(ArtifactNotFoundError, match="raster file not found"):
        read_artifact(tmp_path / "missing.frst", kind="raster")
