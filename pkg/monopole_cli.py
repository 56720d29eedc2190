# monopole_cli.py
"""
MONOPOLE OSCILLATOR VERIFICATION PLATFORM
Command-line entry point: spectrum tables, verification suites and report merging
"""

from __future__ import annotations

import argparse
import logging
import sys

from modules.config import TOLERANCES, build_config
from modules.errors import CalibrationError, ConvergenceError, MonopoleError, UsageError
from modules.reporting import merge_reports
from modules.suites import SuiteRunner

logger = logging.getLogger("monopole")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3

VERIFY_SUITES = ("algebra", "recurrence", "unirreps", "oracle")

# =============================================================================
# ARGUMENT PARSING
# =============================================================================


def _run_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--model", choices=("flat", "taubnut"), help="oscillator model (default: flat)")
    parent.add_argument("--preset", help="named preset from data/predefined_models.json")
    parent.add_argument("--config", help="JSON config file layered over the preset")
    parent.add_argument("--out", help="write the report here instead of stdout")
    parent.add_argument("--format", choices=("json", "csv"), default="json")
    parent.add_argument("--p", type=int, dest="p_max", help="largest representation index p")
    parent.add_argument("--grid-nodes", type=int, help="sample nodes per recurrence grid")
    parent.add_argument("--jobs", type=int, help="worker threads for per-sector work")
    for name in TOLERANCES:
        parent.add_argument(f"--tol-{name.replace('_', '-')}", type=float, dest=f"tol_{name}", metavar="TOL")
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monopole_cli",
        description="Spectra, symmetry algebras and unitary representations of monopole oscillators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    options = _run_options()

    sub.add_parser("spectrum", parents=[options], help="energy table over the configured box")

    verify = sub.add_parser("verify", parents=[options], help="run a verification suite")
    verify.add_argument("suite", choices=VERIFY_SUITES)

    report = sub.add_parser("report", help="report utilities")
    report_sub = report.add_subparsers(dest="report_command", required=True)
    merge = report_sub.add_parser("merge", help="pass/fail matrix over saved reports")
    merge.add_argument("paths", nargs="+")
    merge.add_argument("--out")
    merge.add_argument("--format", choices=("json", "csv"), default="json")
    merge.add_argument("-v", "--verbose", action="store_true")
    merge.add_argument("-q", "--quiet", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    layer: dict = {}
    if args.model is not None:
        layer["model"] = args.model
    if args.p_max is not None:
        layer.setdefault("box", {})["p_max"] = args.p_max
    if args.grid_nodes is not None:
        layer.setdefault("grid", {})["nodes"] = args.grid_nodes
    if args.jobs is not None:
        layer["jobs"] = args.jobs
    tolerances = {name: getattr(args, f"tol_{name}") for name in TOLERANCES
                  if getattr(args, f"tol_{name}") is not None}
    if tolerances:
        layer["tolerances"] = tolerances
    return layer


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("report written to %s", out)


# =============================================================================
# COMMANDS
# =============================================================================


def cmd_spectrum(args: argparse.Namespace):
    cfg = build_config(preset=args.preset, config_path=args.config, overrides=_overrides(args))
    return SuiteRunner().run("spectrum", cfg)


def cmd_verify(args: argparse.Namespace):
    cfg = build_config(preset=args.preset, config_path=args.config, overrides=_overrides(args))
    return SuiteRunner().run(args.suite, cfg)


def cmd_report_merge(args: argparse.Namespace):
    return merge_reports(args.paths)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "report": cmd_report_merge,
}

# =============================================================================
# MAIN
# =============================================================================


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _configure_logging(args)

    try:
        report = COMMANDS[args.command](args)
        _emit(report.render(args.format), args.out)
    except UsageError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except ConvergenceError as exc:
        logger.error("oracle did not converge: %s", exc)
        return EXIT_CONVERGENCE
    except CalibrationError as exc:
        logger.error("L3 calibration failed: %s", exc)
        return EXIT_FAILED
    except MonopoleError as exc:
        logger.error("%s", exc)
        return EXIT_FAILED
    except OSError as exc:
        logger.error("cannot write report: %s", exc)
        return EXIT_USAGE

    for waiver in report.summary.get("waivers", []):
        logger.warning("%s: waived %s (residual %s): %s", report.command, waiver["check"],
                       waiver["residual"], waiver["reason"])
    if not report.passed:
        failing = [c["check"] for c in report.summary.get("checks", [])
                   if not c["pass"] and c.get("gated", True)]
        logger.warning("%s failed: %s", report.command, ", ".join(failing) or "see summary")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
