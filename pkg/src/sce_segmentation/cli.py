"""CLI commands for sce-segmentation.

- synth: write a synthetic raster and its ground-truth labeling
- run: full ensemble pipeline into a run directory
- compare: score two run directories against each other
- validate-config / dump-config: check or print a resolved ensemble config
"""
from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

import structlog
from pydantic import ValidationError

from sce_segmentation import __version__
from sce_segmentation.adapters.formats.frst import save_raster
from sce_segmentation.adapters.formats.pgm import save_labeling
from sce_segmentation.adapters.storage.layout import config_hash
from sce_segmentation.app.artifacts import compare_runs
from sce_segmentation.app.pipeline import run_pipeline
from sce_segmentation.config.load import ensemble_config_from_entries, load_ensemble_config
from sce_segmentation.config.settings import EnsembleConfig, ObservabilitySettings, SynthConfig
from sce_segmentation.config.validate import ConfigValidationError, issues_from_pydantic_error
from sce_segmentation.domain.errors import SceError
from sce_segmentation.domain.synth import generate
from sce_segmentation.observability.logger import configure_logging

log = structlog.get_logger(__name__)

SYNTH_RASTER = "synth.frst"
SYNTH_TRUTH = "truth.pgm"


def _fail(message: str) -> int:
    print(f"✗ {message}", file=sys.stderr)
    return 1


def _load_config(args: argparse.Namespace) -> EnsembleConfig:
    if args.config is None:
        return ensemble_config_from_entries({}, master_seed=args.seed)
    return load_ensemble_config(args.config, master_seed=args.seed)


def cmd_synth(args: argparse.Namespace) -> int:
    """Generate a synthetic raster (`synth.frst`) and ground truth (`truth.pgm`)."""
    try:
        config = SynthConfig(
            width=args.width,
            height=args.height,
            n_islands=args.islands,
            n_sheets=args.sheets,
            noise_sigma=args.noise,
            edge_width=args.edge_width,
            seed=args.seed,
        )
    except ValidationError as e:
        return _fail(str(ConfigValidationError(issues_from_pydantic_error(e))))
    try:
        raster, truth = generate(config)
        out = Path(args.out)
        written = save_raster(raster, out / SYNTH_RASTER, storage_root=out)
        written += save_labeling(truth, out / SYNTH_TRUTH, storage_root=out)
    except (SceError, OSError, ValueError) as e:
        return _fail(f"synth failed: {e}")

    print(f"✓ Synthetic raster {config.width}x{config.height} written")
    for path in written:
        print(f"  - {path}")
    print(f"  - class counts (background, island, sheet): {truth.counts()}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    """Run the ensemble pipeline and write a run directory."""
    try:
        config = _load_config(args)
    except ConfigValidationError as e:
        return _fail(str(e))
    try:
        result = run_pipeline(
            [Path(p) for p in args.input],
            config,
            Path(args.out),
            workers=args.threads,
            export_pgm=args.export_pgm,
        )
    except (SceError, OSError, ValueError) as e:
        return _fail(str(e))

    print(f"✓ Run directory: {result.layout.root}")
    print(f"  - runs: {len(result.runs)}")
    for view in result.views:
        output = view.output
        prefix = "  - " if view.snapshot is None else f"  - snapshot {view.snapshot}: "
        print(f"{prefix}masks ranked: {len(output.results)} (selected: {output.cutoff_rank})")
        for tau, masks in output.consensus.items():
            print(f"{prefix}consensus masks at tau={tau:g}: {len(masks)}")
    print(f"  - files: {len(result.manifest.files)} (manifest verified)")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    """Compare the consensus masks of two run directories."""
    try:
        report = compare_runs(
            Path(args.a),
            Path(args.b),
            taus=args.tau,
            out_dir=Path(args.out) if args.out else None,
            snapshot=args.snapshot,
        )
    except (SceError, OSError, ValueError) as e:
        return _fail(str(e))

    print(f"✓ Comparison written to {report.out_dir}")
    for summary in report.summaries:
        tau = "-" if summary.tau is None else f"{summary.tau:g}"
        print(
            f"  - {summary.kind} tau={tau}: median best-match s_I "
            f"{summary.median_best_match:.4f} over {summary.masks} masks"
        )
    return 0


def cmd_validate_config(args: argparse.Namespace) -> int:
    """Validate an ensemble config and print the resolved grid size."""
    try:
        config = _load_config(args)
    except ConfigValidationError as e:
        return _fail(str(e))
    print("✓ Configuration is valid")
    print(f"  - runs: {len(config.runs)}")
    print(f"  - master seed: {config.master_seed}")
    print(f"  - thresholds: {', '.join(f'{tau:g}' for tau in config.thresholds)}")
    print(f"  - config hash: {config_hash(config)}")
    return 0


def cmd_dump_config(args: argparse.Namespace) -> int:
    """Dump the resolved ensemble config (every run of the grid) as JSON."""
    try:
        config = _load_config(args)
    except ConfigValidationError as e:
        return _fail(str(e))
    data = config.model_dump(mode="json")
    data["config_hash"] = config_hash(config)
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=None,
        help="Ensemble config: flat 'key = value' text, or YAML for .yaml/.yml "
        "(default: built-in 15x10 grid)",
    )
    parser.add_argument("--seed", type=int, default=None, help="Override master_seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sce-segmentation",
        description="Statistically combined ensembles of SOM segmentations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Log level (default: INFO)")
    parser.add_argument(
        "--log-format", choices=("human", "json"), default=None, help="Log format (default: human)"
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    synth_parser = subparsers.add_parser("synth", help="Generate a synthetic test raster")
    synth_parser.add_argument("--width", type=int, default=128)
    synth_parser.add_argument("--height", type=int, default=128)
    synth_parser.add_argument("--islands", type=int, default=6)
    synth_parser.add_argument("--sheets", type=int, default=4)
    synth_parser.add_argument("--noise", type=float, default=0.3)
    synth_parser.add_argument(
        "--edge-width",
        type=float,
        default=0.0,
        help="Pixels over which each shape fades into its surroundings (default: hard edges)",
    )
    synth_parser.add_argument("--seed", type=int, default=0)
    synth_parser.add_argument("--out", required=True, help="Output directory")
    synth_parser.set_defaults(func=cmd_synth)

    run_parser = subparsers.add_parser("run", help="Run the full ensemble pipeline")
    run_parser.add_argument(
        "--input",
        action="append",
        required=True,
        help="FRST raster; repeat to stack snapshots (needs snapshot_mode: stacked)",
    )
    _add_config_args(run_parser)
    run_parser.add_argument("--out", required=True, help="Parent directory for run directories")
    run_parser.add_argument(
        "--threads",
        type=int,
        default=-1,
        help="Worker count (default: all cores); outputs do not depend on it",
    )
    run_parser.add_argument(
        "--export-pgm",
        action="store_true",
        help="Also render G_sum maps as 16-bit log-scaled PGM",
    )
    run_parser.set_defaults(func=cmd_run)

    compare_parser = subparsers.add_parser("compare", help="Compare two run directories")
    compare_parser.add_argument("--a", required=True, help="First run directory")
    compare_parser.add_argument("--b", required=True, help="Second run directory")
    compare_parser.add_argument(
        "--tau",
        type=float,
        action="append",
        default=None,
        help="Threshold to compare (repeatable; default: all shared thresholds)",
    )
    compare_parser.add_argument(
        "--out", default=None, help="Output directory (default: <a>/compare_<b name>)"
    )
    compare_parser.add_argument(
        "--snapshot",
        type=int,
        default=None,
        help="Snapshot index to compare (required for stacked runs)",
    )
    compare_parser.set_defaults(func=cmd_compare)

    validate_parser = subparsers.add_parser(
        "validate-config", help="Validate an ensemble config and exit"
    )
    _add_config_args(validate_parser)
    validate_parser.set_defaults(func=cmd_validate_config)

    dump_parser = subparsers.add_parser(
        "dump-config", help="Dump the resolved ensemble config as JSON"
    )
    _add_config_args(dump_parser)
    dump_parser.set_defaults(func=cmd_dump_config)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    overrides = {
        key: value
        for key, value in (("log_level", args.log_level), ("log_format", args.log_format))
        if value is not None
    }
    try:
        settings = ObservabilitySettings(**overrides)
    except ValidationError as e:
        return _fail(str(ConfigValidationError(issues_from_pydantic_error(e))))
    configure_logging(log_level=settings.log_level, log_format=settings.log_format)
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
