"""
Command-line front end.

    python -m dof_services.src.cli formula -M 14 -N 10 -K 2
    python -m dof_services.src.cli design -M 14 -N 10 -K 2 --seed 1 --out design.json
    python -m dof_services.src.cli slope design.json --snr 40,50,60
"""
import argparse
import sys
from typing import List, Optional, Sequence

import sentry_sdk
from dotenv import load_dotenv
from pydantic import ValidationError

from . import __version__
from .commands import (
    cmd_batch,
    cmd_design,
    cmd_formula,
    cmd_min_relays,
    cmd_relays,
    cmd_slope,
    cmd_sweep,
)
from .config import Settings, get_settings
from .exceptions import EXIT_USAGE, RelayDofError
from .utils.logger import log_error, setup_logger


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def seed_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return value


def _parse_list(text: str, convert) -> list:
    try:
        return [convert(part) for part in text.split(",") if part.strip()]
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}")


def float_list(text: str) -> List[float]:
    return _parse_list(text, float)


def int_list(text: str) -> List[int]:
    return _parse_list(text, positive_int)


def _add_system(parser: argparse.ArgumentParser, relays: bool = True) -> None:
    parser.add_argument("-M", dest="M", type=positive_int, required=True, help="antennas per user")
    parser.add_argument("-N", dest="N", type=positive_int, required=True, help="antennas per relay")
    if relays:
        parser.add_argument("-K", dest="K", type=positive_int, required=True, help="number of relays")


def _add_timestamp(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--no-timestamp", dest="timestamp", action="store_false",
        help="omit the manifest creation time for byte-identical reruns",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relay-dof",
        description="DoF calculators and transceiver designs for the symmetric multi-relay MIMO Y channel.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    formula = commands.add_parser("formula", help="closed-form DoF values for one configuration")
    _add_system(formula)
    formula.add_argument("--json", dest="as_json", action="store_true", help="print a JSON record")

    sweep = commands.add_parser("sweep", help="DoF curves over a grid of M/N ratios")
    sweep.add_argument("-K", dest="K", type=positive_int, default=2)
    sweep.add_argument("-N", dest="N", type=positive_int, default=1)
    sweep.add_argument("--ratio-min", type=float, default=0.0)
    sweep.add_argument("--ratio-max", type=float, default=3.0)
    sweep.add_argument("--points", type=int, default=301)
    sweep.add_argument("--normalized", action="store_true", help="d_sum/(KN) against M/(KN)")
    sweep.add_argument("--k-list", type=int_list, default=None, help="relay counts for --normalized")
    sweep.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    _add_timestamp(sweep)

    design = commands.add_parser("design", help="sample a channel, build and verify a design")
    _add_system(design)
    design.add_argument("--seed", type=seed_int, default=0)
    design.add_argument("--out", required=True, help="design JSON path")
    design.add_argument("--extend", action="store_true", help="allow symbol-extension plans")
    design.add_argument("--dump-channel", default=None, help="also write the sampled channel JSON")
    _add_timestamp(design)

    slope = commands.add_parser("slope", help="high-SNR sum-rate slope of a stored design")
    slope.add_argument("design_json")
    slope.add_argument("--snr", type=float_list, default=[40.0, 50.0, 60.0], help="SNR points in dB")
    slope.add_argument("--out", default=None, help="rate trace CSV path")
    slope.add_argument("--report", dest="report_json", default=None,
                       help="verification report JSON path, slope block included")
    _add_timestamp(slope)

    relays = commands.add_parser("min-relays", help="fewest relays reaching a target total DoF")
    _add_system(relays, relays=False)
    relays.add_argument("--target", type=float, required=True)

    batch = commands.add_parser("batch", help="design and verify over consecutive seeds")
    _add_system(batch)
    batch.add_argument("--seed", type=seed_int, default=0)
    batch.add_argument("--seeds", type=positive_int, default=100)
    batch.add_argument("--extend", action="store_true")
    batch.add_argument("--out", default=None, help="per-seed CSV path")
    _add_timestamp(batch)

    curve = commands.add_parser("relays", help="DoF against the number of relays")
    _add_system(curve, relays=False)
    curve.add_argument("--k-max", type=positive_int, default=30)
    curve.add_argument("--out", default=None)
    _add_timestamp(curve)

    return parser


def dispatch(args: argparse.Namespace, settings: Settings) -> int:
    if args.command == "formula":
        return cmd_formula(args.M, args.N, args.K, as_json=args.as_json)
    if args.command == "sweep":
        return cmd_sweep(
            args.K, args.N, args.ratio_min, args.ratio_max, args.points, out=args.out,
            normalized=args.normalized, k_list=args.k_list, timestamp=args.timestamp, settings=settings,
        )
    if args.command == "design":
        return cmd_design(
            args.M, args.N, args.K, args.seed, args.out, extend=args.extend,
            dump_channel=args.dump_channel, timestamp=args.timestamp, settings=settings,
        )
    if args.command == "slope":
        return cmd_slope(
            args.design_json, args.snr, out=args.out, report_json=args.report_json,
            timestamp=args.timestamp, settings=settings,
        )
    if args.command == "min-relays":
        return cmd_min_relays(args.M, args.N, args.target)
    if args.command == "batch":
        return cmd_batch(
            args.M, args.N, args.K, args.seed, args.seeds, out=args.out, extend=args.extend,
            timestamp=args.timestamp, settings=settings,
        )
    return cmd_relays(args.M, args.N, args.k_max, out=args.out, timestamp=args.timestamp)


def _init_sentry(settings: Settings) -> None:
    if settings.sentry_dsn:
        sentry_sdk.init(
            dsn=settings.sentry_dsn,
            environment=settings.environment,
            release=f"relay-dof@{__version__}",
            traces_sample_rate=0.0,
        )


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"error: invalid RELAY_DOF_* settings: {e}", file=sys.stderr)
        return EXIT_USAGE

    _init_sentry(settings)
    logger = setup_logger("relay_dof")
    logger.debug("Running command", extra={'command': args.command})
    try:
        return dispatch(args, settings)
    except RelayDofError as error:
        log_error(error, {'command': args.command, 'stage': error.stage, 'exit_code': error.exit_code})
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
