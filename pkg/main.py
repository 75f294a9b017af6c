"""
Command-line entry point for the skin thermoregulation simulator.

    python main.py run     --config config/default.env --output out/
    python main.py picard  --config config/default.env --output out/
    python main.py verify  --output out/verify
    python main.py mms     --output out/mms --case static_stokes
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import structlog

from app import __version__
from app.config import RunConfig, check_run_config, parse_config
from app.driver.runner import run
from app.errors import ConfigError, SimulationError
from app.io.reports import CheckRecord, RunReport, write_report
from app.verify.mms import run_mms_studies
from app.verify.suite import run_verification_suite

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

structlog.configure(
    processors=[
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.KeyValueRenderer(key_order=["event"]),
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)


def parse_tolerances(items: Optional[List[str]]) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key.endswith("_tol"):
            raise ConfigError(f"Tolerance override must look like NAME_tol=VALUE, got '{item}'",
                              details={"override": item})
        overrides[key] = value.strip()
    return overrides


def load_config(args) -> RunConfig:
    """Config file (or defaults) with the command-line overrides applied."""
    overrides: Dict[str, object] = dict(parse_tolerances(args.tol))
    if args.resolution:
        overrides["resolution"] = args.resolution
    if args.deterministic is not None:
        overrides["deterministic"] = args.deterministic
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.command == "picard":
        overrides["mode"] = "picard"
    if args.config:
        return parse_config(args.config, overrides)
    if args.command in ("run", "picard"):
        raise ConfigError(f"The {args.command} command needs --config")
    config = RunConfig(**overrides)
    check_run_config(config)
    return config


def print_checks(checks: List[CheckRecord]) -> None:
    """One tab-separated line per check: name, PASS/FAIL, message."""
    for check in checks:
        print(f"{check.name}\t{'PASS' if check.passed else 'FAIL'}\t{check.message}")


def command_run(args, config: RunConfig) -> int:
    report = run(config, args.output, command=args.command,
                 resume_from=Path(args.resume) if args.resume else None)
    print_checks(report.checks)
    return 0 if report.passed else 2


def command_verify(args, config: RunConfig) -> int:
    checks = run_verification_suite(config.to_params(), seed=config.seed,
                                    workers=config.effective_workers)
    report = RunReport(command="verify", config=config.model_dump(), checks=checks)
    write_report(report, Path(args.output) / "report.json")
    print_checks(checks)
    return 0 if report.passed else 2


def command_mms(args, config: RunConfig) -> int:
    studies = run_mms_studies(args.case, workers=config.effective_workers,
                              quadrature_degree=config.quadrature_degree)
    report = RunReport(command="mms", config=config.model_dump(),
                       convergence=[study.record() for study in studies])
    write_report(report, Path(args.output) / "report.json")
    print_checks([CheckRecord(name=study.study, passed=study.passed, measured=study.orders,
                              message=f"orders {study.orders}") for study in studies])
    return 0 if report.passed else 2


COMMANDS = {"run": command_run, "picard": command_run, "verify": command_verify,
            "mms": command_mms}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skinflow",
                                     description="Coupled vessel/tissue thermoregulation simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "staggered or configured-mode simulation"),
                            ("picard", "global Picard iteration of the solution operator"),
                            ("verify", "invariant sweeps and finite-difference oracles"),
                            ("mms", "manufactured-solution convergence studies")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="KEY=VALUE config file")
        cmd.add_argument("--output", default=f"out/{name}", help="output directory")
        cmd.add_argument("--resolution", help="n_axial,n_angular,n_radial,n_outer")
        cmd.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
        cmd.add_argument("--workers", type=int)
        cmd.add_argument("--tol", action="append", metavar="KEY=VALUE",
                         help="solver tolerance override, e.g. stokes_tol=1e-11")
        if name == "run":
            cmd.add_argument("--resume", help="checkpoint file to restart from")
        if name == "mms":
            cmd.add_argument("--case", action="append", help="canned case name (repeatable)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except SimulationError as exc:
        logger.error(f"{exc.error_code}: {exc.message}")
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"Unexpected error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
