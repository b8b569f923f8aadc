import argparse
import sys
from typing import List, Optional

from loguru import logger

from config.scenario import load_scenario
from config.settings import settings
from utils.errors import DnlseError, IntegrationError, PolarSingularityError
from utils.logger import setup_logger
from cli import cmd_analytic, cmd_error_scan, cmd_optimize, cmd_reduce, cmd_simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(DnlseError):
    """Bad command line"""


class CliParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; usage errors here map to 1"""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (KEY=value lines)")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--tol", type=float, help="relative integrator tolerance")

    parser = CliParser(prog="dnlse", description="Controlled quantum search with the discrete nonlinear Schrödinger equation")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    commands.add_parser("analytic", parents=[common], help="closed-form complete-graph protocol")
    commands.add_parser("simulate", parents=[common], help="integrate the reduced system")
    commands.add_parser("error-scan", parents=[common], help="terminal error under control offsets over n")
    optimize = commands.add_parser("optimize", parents=[common], help="direct optimization on a shell-regular graph")
    optimize.add_argument("--seed", type=int, help="optimizer seed")
    optimize.add_argument("--budget", type=int, help="objective evaluations")
    commands.add_parser("reduce", parents=[common], help="print equivalence classes and shells")
    return parser


def run(args: argparse.Namespace) -> None:
    config = load_scenario(args.config)

    if args.command == "analytic":
        cmd_analytic(config, args.out)
    elif args.command == "simulate":
        cmd_simulate(config, args.out, args.tol)
    elif args.command == "error-scan":
        cmd_error_scan(config, args.out, args.tol)
    elif args.command == "optimize":
        if args.budget is not None and args.budget < 1:
            raise UsageError(f"--budget must be positive, got {args.budget}")
        cmd_optimize(config, args.out, seed=args.seed, budget=args.budget, tol=args.tol)
    elif args.command == "reduce":
        cmd_reduce(config)


def main(argv: Optional[List[str]] = None) -> int:
    setup_logger(settings.log_file, settings.log_level)

    try:
        args = build_parser().parse_args(argv)
        logger.info(f"🚀 dnlse {args.command} with {args.config}")
        run(args)
    except (IntegrationError, PolarSingularityError) as e:
        logger.error(f"❌ Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (DnlseError, ValueError) as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
