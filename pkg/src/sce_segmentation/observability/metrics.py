from __future__ import annotations

from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile


class RunMetrics:
    """Per-pipeline counters kept in a private registry and dumped as a textfile."""

    def __init__(self) -> None:
        self.registry = CollectorRegistry()
        self.som_runs_total = Counter(
            "sce_som_runs_total",
            "Number of SOM runs trained and labeled.",
            registry=self.registry,
        )
        self.mask_comparisons_total = Counter(
            "sce_mask_comparisons_total",
            "Number of ordered base-vs-other mask comparisons during stacking.",
            registry=self.registry,
        )
        self.consensus_masks_total = Counter(
            "sce_consensus_masks_total",
            "Number of consensus masks produced by thresholding G_sum maps.",
            registry=self.registry,
        )
        self.empty_consensus_total = Counter(
            "sce_empty_consensus_total",
            "Number of (base mask, threshold) pairs whose consensus mask was empty.",
            registry=self.registry,
        )
        self.stage_seconds = Histogram(
            "sce_stage_seconds",
            "Seconds spent per pipeline stage.",
            labelnames=("stage",),
            registry=self.registry,
        )

    def write(self, path: Path) -> None:
        write_to_textfile(str(path), self.registry)
