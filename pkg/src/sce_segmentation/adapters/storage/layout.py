"""Run-directory naming: every artifact path of a pipeline run is derived here."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from sce_segmentation.config.settings import EnsembleConfig
from sce_segmentation.domain.mask import MaskId
from sce_segmentation.domain.path_policy import ensure_within_root, validate_segment

HASH_LENGTH = 12


def canonical_config_json(config: EnsembleConfig, *, include_seed: bool = True) -> str:
    exclude = None if include_seed else {"master_seed"}
    payload = config.model_dump(mode="json", exclude=exclude)
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(config: EnsembleConfig) -> str:
    """First 12 hex chars of SHA-256 over the canonical config, master seed excluded."""
    digest = hashlib.sha256(canonical_config_json(config, include_seed=False).encode("utf-8"))
    return digest.hexdigest()[:HASH_LENGTH]


def run_dir_name(master_seed: int, digest: str) -> str:
    return validate_segment(f"seed-{master_seed}-{digest}")


def tau_segment(tau: float) -> str:
    return validate_segment(f"tau-{tau:g}")


def snapshot_segment(snapshot: int) -> str:
    return validate_segment(f"snapshot-{snapshot}")


def _mask_stem(mask_id: MaskId) -> str:
    return f"run-{mask_id.run:03d}-cluster-{mask_id.cluster:02d}"


@dataclass(frozen=True)
class RunLayout:
    root: Path

    @classmethod
    def for_run(cls, out_dir: Path, config: EnsembleConfig) -> RunLayout:
        root = Path(out_dir) / run_dir_name(config.master_seed, config_hash(config))
        return cls(root=root)

    def _inside(self, *parts: str) -> Path:
        target = self.root.joinpath(*parts)
        ensure_within_root(self.root, target)
        return target

    def view(self, snapshot: int | None) -> RunLayout:
        """Layout of one snapshot's rankings and masks; the run root itself for None."""
        if snapshot is None:
            return self
        return RunLayout(root=self._inside(snapshot_segment(snapshot)))

    def relative(self, path: Path) -> str:
        return path.relative_to(self.root).as_posix()

    @property
    def rankings_csv(self) -> Path:
        return self._inside("rankings.csv")

    @property
    def groups_csv(self) -> Path:
        return self._inside("groups.csv")

    @property
    def manifest_json(self) -> Path:
        return self._inside("manifest.json")

    @property
    def metrics_prom(self) -> Path:
        return self._inside("metrics.prom")

    @property
    def config_json(self) -> Path:
        return self._inside("config.json")

    def som_file(self, run: int) -> Path:
        return self._inside("som", f"run-{run:03d}.som")

    def labels_pgm(self, run: int) -> Path:
        return self._inside("labels", f"run-{run:03d}.pgm")

    def labels_counts(self, run: int) -> Path:
        return self._inside("labels", f"run-{run:03d}.counts.txt")

    @property
    def som_masks_dir(self) -> Path:
        return self._inside("masks", "som")

    def som_mask(self, mask_id: MaskId) -> Path:
        return self._inside("masks", "som", f"{_mask_stem(mask_id)}.msk")

    def gsum_frst(self, mask_id: MaskId) -> Path:
        return self._inside("gsum", f"{_mask_stem(mask_id)}.frst")

    def gsum_pgm(self, mask_id: MaskId) -> Path:
        return self._inside("gsum", f"{_mask_stem(mask_id)}.pgm")

    @property
    def consensus_root(self) -> Path:
        return self._inside("masks", "consensus")

    def consensus_mask(self, tau: float, mask_id: MaskId, *, suffix: str = ".msk") -> Path:
        return self._inside(
            "masks", "consensus", tau_segment(tau), f"{_mask_stem(mask_id)}{suffix}"
        )


def parse_mask_stem(stem: str) -> MaskId:
    """Inverse of the `run-XXX-cluster-YY` naming."""
    parts = stem.split("-")
    if len(parts) != 4 or parts[0] != "run" or parts[2] != "cluster":
        raise ValueError(f"not a mask file name: {stem!r}")
    return MaskId(int(parts[1]), int(parts[3]))
