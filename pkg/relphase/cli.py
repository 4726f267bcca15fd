"""
Batch command-line front end.

    relphase phase-average --alpha 1.0 --prior flat --cutoff 32
    relphase way-demo --d 31 --priors flat,delta:0,delta:5
    relphase relphase-fidelity --alpha 1 --beta 8
    relphase sweep --alpha 1 --beta 2:16:x2 --jobs 4
    relphase selftest --seed 7 --out selftest.csv

Exit codes: 0 success, 2 invalid configuration or input, 3 numeric tolerance breach.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Type

from relphase.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    InvalidStateError,
    ToleranceBreachError,
)
from relphase.experiments import EXPERIMENTS, Experiment
from relphase.report_writer import WRITERS, ReportWriter
from relphase.run_config import RunConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

logger = logging.getLogger("relphase")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Write the report here instead of stdout")
    common.add_argument("--format", choices=sorted(WRITERS), help="Report format (default csv)")
    common.add_argument("--jobs", type=int, help="Concurrent sweep points (default 1)")
    common.add_argument("--seed", type=int, help="Seed for randomized checks (default 0)")
    common.add_argument("--config", type=Path, help="YAML file of settings; flags override it")
    common.add_argument(
        "--verbose", action="store_true", default=None, help="Log at DEBUG level to stderr"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="relphase",
        description="Phase averaging, lattice reference frames and relative-phase states.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    phase = subparsers.add_parser(
        "phase-average", parents=[common], help="Phase-average a coherent state"
    )
    phase.add_argument("--alpha", help="Coherent amplitude: 1.0, 1.0@0.7 or 1+2j")
    phase.add_argument("--cutoff", type=int, help="Photon cutoff (default from |alpha|^2)")
    phase.add_argument("--prior", help="flat, delta:<phi0>, vonmises:<mu>,<kappa> or grid:<path>")
    phase.add_argument(
        "--resolution", type=int, help="Quadrature points for smooth priors (default max(256, 2*dim))"
    )
    phase.add_argument("--compare-priors", help="Comma-separated priors to compare")

    way = subparsers.add_parser(
        "way-demo", parents=[common], help="Two particles on Z_d under an unknown displacement"
    )
    way.add_argument("--d", type=int, help="Odd lattice size (default 31)")
    way.add_argument("--priors", help="Comma-separated displacement priors")

    for name, help_text, beta_help in (
        ("relphase-fidelity", "Relative-phase state for one (alpha, beta)", "Reference amplitude"),
        ("sweep", "Relative-phase state over a range of beta", "Range start:stop:xF or +S"),
    ):
        relphase = subparsers.add_parser(name, parents=[common], help=help_text)
        relphase.add_argument("--alpha", help="System amplitude: 1.0, 1.0@0.7 or 1+2j")
        relphase.add_argument("--beta", help=beta_help)
        relphase.add_argument("--cutoff", type=int, help="Per-mode photon cutoff")
        relphase.add_argument("--rel-cutoff", type=int, help="Relative Fock space cutoff")

    selftest = subparsers.add_parser(
        "selftest", parents=[common], help="Run the acceptance checks"
    )
    selftest.add_argument("--d", type=int, help="Lattice size for lattice checks (default 31)")
    return parser


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def main(
    argv: Optional[List[str]] = None,
    *,
    experiments: Dict[str, Type[Experiment]] = None,
    writers: Dict[str, Type[ReportWriter]] = None,
) -> int:
    experiments = experiments or EXPERIMENTS
    writers = writers or WRITERS
    try:
        arguments = vars(build_parser().parse_args(argv))
    except SystemExit as ex:
        return int(ex.code or EXIT_OK)

    config_file = arguments.pop("config", None)
    configure_logging(bool(arguments.get("verbose")))
    try:
        config = RunConfig.from_sources(arguments, config_file)
        configure_logging(config.verbose)
        logger.debug(f"Resolved configuration {config}")
        report = experiments[config.subcommand](logger).run(config)
        writer = writers[config.format](logger)
        writer.write(report, Path(config.out) if config.out else None)
    except (ConfigurationError, InvalidStateError, DimensionMismatchError) as ex:
        logger.error(str(ex))
        return EXIT_CONFIG
    except ToleranceBreachError as ex:
        logger.error(str(ex))
        return EXIT_TOLERANCE

    if report.breaches:
        logger.error(f"Tolerance breaches: {', '.join(report.breaches)}")
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
