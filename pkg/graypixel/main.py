import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from graypixel.config.settings import settings
from graypixel.errors import ConfigError, ManifestError
from graypixel.models import (
    METHOD_NAMES,
    BaselineParams,
    ClusterKind,
    Command,
    DistanceKind,
    MsgpParams,
    ReportFormat,
    RunConfig,
    SweepGrid,
)
from graypixel.runner.commands import COMMANDS, has_failures

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

_PARAM_FLAGS = (
    "n_percent",
    "bandwidth",
    "distance",
    "cluster",
    "k",
    "seed",
    "log_size",
    "log_sigma",
    "epsilon",
    "contrast_floor",
    "smooth_window",
)
_BASELINE_FLAGS = ("sog_p", "edge_p", "edge_sigma")


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _rgb(text: str):
    values = [float(v) for v in text.split(",")]
    if len(values) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated values")
    return tuple(values)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="CSV or JSON dataset manifest")
    common.add_argument("--method", choices=METHOD_NAMES, default="msgp")
    common.add_argument("--n-percent", type=float, help="Share of valid pixels kept as gray candidates")
    common.add_argument("--bandwidth", type=float, help="Mean-shift bandwidth h")
    common.add_argument("--distance", choices=[d.value for d in DistanceKind])
    common.add_argument("--cluster", choices=[c.value for c in ClusterKind])
    common.add_argument("--k", type=int, help="K-means cluster count")
    common.add_argument("--seed", type=int, help="K-means seed, or first scene seed for synth")
    common.add_argument("--log-size", type=int)
    common.add_argument("--log-sigma", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--contrast-floor", type=float)
    common.add_argument("--smooth-window", type=int)
    common.add_argument("--sog-p", type=float, help="Shades-of-Gray order ('inf' for White Patch)")
    common.add_argument("--edge-p", type=float)
    common.add_argument("--edge-sigma", type=float)
    common.add_argument("--out", help="Output directory (reports go to stdout when omitted)")
    common.add_argument("--format", choices=[f.value for f in ReportFormat])
    common.add_argument("--jobs", type=int, help="Worker count")
    common.add_argument("--timings", action="store_true", help="Add per-image runtime_ms to reports")

    parser = argparse.ArgumentParser(prog="graypixel", description="Gray-pixel color constancy toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("estimate", "evaluate", "correct"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("inputs", nargs="*", help="Image files (in addition to --manifest)")
        if name == "correct":
            p.add_argument("--illuminant", type=_rgb, help="Explicit illuminant r,g,b")
            p.add_argument("--use-ground-truth", action="store_true")
        else:
            p.add_argument("--save-gray-map", action="store_true", help="Write a PNG marking the chosen pixels")
        if name == "evaluate":
            p.add_argument("--group-by-camera", action="store_true")

    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--grid-bandwidth", type=_float_list, default=[])
    p.add_argument("--grid-n-percent", type=_float_list, default=[])
    p.add_argument("--grid-distance", type=lambda t: [DistanceKind(v) for v in t.split(",")], default=[])
    p.add_argument("--grid-k", type=_int_list, default=[])

    p = sub.add_parser("synth", parents=[common])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--preset", choices=["default", "legacy"], default="default")
    p.add_argument("--gray-fraction", type=float, default=0.5)
    p.add_argument("--illuminant", type=_rgb, help="Fixed illuminant r,g,b for every scene")
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Validate every override before any image is touched."""
    overrides = {flag: getattr(args, flag) for flag in _PARAM_FLAGS if getattr(args, flag) is not None}
    baseline = {flag: getattr(args, flag) for flag in _BASELINE_FLAGS if getattr(args, flag) is not None}
    fields = {
        "command": Command(args.command),
        "manifest": args.manifest,
        "inputs": getattr(args, "inputs", []),
        "method": args.method,
        "params": MsgpParams(**overrides),
        "baseline": BaselineParams(**baseline),
        "out": args.out,
        "timings": args.timings,
        "illuminant": getattr(args, "illuminant", None),
        "use_ground_truth": getattr(args, "use_ground_truth", False),
        "save_gray_map": getattr(args, "save_gray_map", False),
        "group_by_camera": getattr(args, "group_by_camera", False),
    }
    if args.format is not None:
        fields["format"] = ReportFormat(args.format)
    if args.jobs is not None:
        fields["jobs"] = args.jobs
    if args.command == "sweep":
        fields["grid"] = SweepGrid(
            bandwidths=args.grid_bandwidth,
            n_percents=args.grid_n_percent,
            distances=args.grid_distance,
            ks=args.grid_k,
        )
    if args.command == "synth":
        fields.update(count=args.count, preset=args.preset, gray_fraction=args.gray_fraction)
        if args.seed is not None:
            fields["seed"] = args.seed
    config = RunConfig(**fields)
    if config.command in (Command.ESTIMATE, Command.EVALUATE, Command.SWEEP, Command.CORRECT):
        if config.manifest is None and not config.inputs:
            raise ConfigError("give --manifest or at least one input image")
    return config


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.log_level)
    args = build_parser().parse_args(argv)
    try:
        config = build_config(args)
        result = COMMANDS[config.command.value](config)
    except (ValidationError, ConfigError, ManifestError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    if has_failures(result):
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
