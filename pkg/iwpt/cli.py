"""
## iwpt.cli

The command-line interface: ``image``, ``tradeoff``, ``rfsweep`` and ``solve``.
"""

import argparse
import asyncio
import logging
from typing import List, Optional, Sequence

from iwpt import __version__
from iwpt.config import load_scene, preset_scene
from iwpt.digital import SolverConfig
from iwpt.enums import Architecture, Preset
from iwpt.errors import IwptError
from iwpt.harness import (
    ExperimentConfig,
    run_image_comparison,
    run_rf_chain_sweep,
    run_solve,
    run_tradeoff_sweep,
)

__all__ = ["build_parser", "main"]

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma separated list of numbers")


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma separated list of integers")


def _architecture_list(text: str) -> List[Architecture]:
    try:
        return [Architecture(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError:
        choices = ",".join(item.value for item in Architecture)
        raise argparse.ArgumentTypeError(f"architectures must be among {choices}")


def _common(parser: argparse.ArgumentParser, er_grid: str) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--scene", help="scene TOML file")
    source.add_argument(
        "--preset",
        choices=[preset.value for preset in Preset],
        default=Preset.DESK.value,
        help="built-in scene (default: desk)",
    )
    parser.add_argument(
        "--er-grid",
        type=_float_list,
        default=_float_list(er_grid),
        help=f"E_r thresholds as fractions of E_max (default: {er_grid})",
    )
    parser.add_argument("--trials", type=int, default=200, help="Monte Carlo trials")
    parser.add_argument("--seed", type=int, default=0, help="base seed")
    parser.add_argument(
        "--arch",
        type=_architecture_list,
        default=list(Architecture),
        help="comma separated subset of digital,hybrid,random,imaging,wpt",
    )
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--workers", type=int, default=4, help="concurrent sweep points")
    parser.add_argument(
        "--keep-going",
        action="store_true",
        help="exit with status 0 even when points fail",
    )
    parser.add_argument("--dump-channels", metavar="DIR", help="write the channel matrices")
    parser.add_argument(
        "--penalty-scale",
        type=float,
        default=SolverConfig().penalty_scale,
        help="rank-one penalty as a multiple of the mean kernel eigenvalue",
    )
    parser.add_argument(
        "--max-iterations", type=int, default=SolverConfig().max_iterations, help="SCA cap"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")


def build_parser() -> argparse.ArgumentParser:
    """
    Builds the argument parser.

    :return: The parser.
    :rtype: argparse.ArgumentParser
    """
    parser = argparse.ArgumentParser(
        prog="iwpt", description="Integrated imaging and wireless power transfer experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    image = commands.add_parser("image", help="compare reconstructions of five illuminations")
    _common(image, "0.15")

    tradeoff = commands.add_parser("tradeoff", help="sweep the power threshold")
    _common(tradeoff, "0,0.25,0.5,0.75,1")

    rfsweep = commands.add_parser("rfsweep", help="vary the number of RF chains")
    _common(rfsweep, "0,0.15")
    rfsweep.add_argument(
        "--chains", type=_int_list, default=[2, 4, 6], help="antenna rows to try"
    )

    solve = commands.add_parser("solve", help="design one beam and write it to files")
    _common(solve, "0.15")
    solve.add_argument(
        "--design",
        type=Architecture,
        default=Architecture.DIGITAL,
        help="digital, hybrid, random, imaging or wpt (default: digital)",
    )
    return parser


def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    if args.scene:
        scene, source = load_scene(args.scene), args.scene
    else:
        scene, source = preset_scene(args.preset), args.preset
    return ExperimentConfig(
        scene=scene,
        er_grid=args.er_grid,
        trials=args.trials,
        seed=args.seed,
        architectures=args.arch,
        output=args.out,
        solver=SolverConfig(
            penalty_scale=args.penalty_scale, max_iterations=args.max_iterations
        ),
        workers=args.workers,
        dump_channels=args.dump_channels,
        scene_source=source,
    )


async def _run(args: argparse.Namespace) -> int:
    config = _experiment(args)
    failures = 0

    match args.command:
        case "image":
            cases = await run_image_comparison(config)
            for case in cases:
                logger.info("%s: RMSE=%r cond=%r", case.name, case.rmse, case.condition_number)
        case "tradeoff":
            points = await run_tradeoff_sweep(config)
            failures = sum(point.failed for point in points)
        case "rfsweep":
            rows = await run_rf_chain_sweep(config, args.chains, args.er_grid)
            failures = sum(row.failed for row in rows)
        case "solve":
            await run_solve(config, args.design)

    if failures:
        logger.error("%d point(s) failed", failures)
        if not args.keep_going:
            return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs the command line.

    :param argv: The arguments, ``sys.argv[1:]`` by default.
    :type argv: Optional[Sequence[str]]
    :return: The exit status.
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        return asyncio.run(_run(args))
    except (IwptError, ValueError) as error:
        logger.error("%s", error)
        return 2
