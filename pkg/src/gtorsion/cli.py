"""Command-line entry point: ``gtorsion run | list | explain``."""

import argparse
import logging
import sys
import time

from . import __version__, report, scenarios
from .checks import DESCRIPTIONS
from .errors import ConfigError, GTorsionError, NumericalError

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3



def _tol_override(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected CHECK=VALUE, got {text!r}")
    key, val = text.split("=", 1)
    try:
        return key.strip(), float(val)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance {val!r} is not a number") from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="progress messages on stderr")
    parser = argparse.ArgumentParser(prog="gtorsion", description=__doc__, parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.set_defaults(verbose=False)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="evaluate scenarios and write a JSON report")
    run.add_argument("--scenario", action="append", dest="scenarios", metavar="ID",
                     help="scenario id (repeatable; default: all)")
    run.add_argument("--points", type=int, help="sample points per scenario (default: per scenario)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--backend", choices=("analytic", "fd", "fd-richardson"))
    run.add_argument("--fd-step", type=float, help="finite-difference step, in (0, 1e-2]")
    run.add_argument("--tol", type=_tol_override, action="append", default=[], metavar="CHECK=VALUE",
                     help="override a tolerance group (identity, minimality, curvature, s_oracle) or a single check")
    run.add_argument("--suites", default=",".join(report.checks.SUITES),
                     help="comma-separated subset of identity,curvature,minimality")
    run.add_argument("--probes", type=int, default=100, help="random probes per point for identity checks")
    run.add_argument("--config", help="JSON file with per-scenario overrides")
    run.add_argument("--out", help="report path (default: stdout)")

    sub.add_parser("list", parents=[common], help="list built-in scenarios")

    explain = sub.add_parser("explain", parents=[common], help="describe what a check measures")
    explain.add_argument("check", nargs="?", help="check name (omit to list all)")
    return parser


def _cmd_run(args):
    config = report.RunConfig(
        scenarios=args.scenarios or scenarios.scenario_ids(),
        points=args.points,
        seed=args.seed,
        backend=args.backend,
        fd_step=args.fd_step,
        tol_overrides=dict(args.tol),
        out=args.out,
        suites=tuple(s.strip() for s in args.suites.split(",") if s.strip()),
        probes=args.probes,
        per_scenario=report.load_config_file(args.config) if args.config else {},
    )
    started = time.perf_counter()
    result = report.run(config)
    text = report.dumps(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for entry in result["scenarios"]:
        print(f"{entry['id']:14s} {'PASS' if entry['pass'] else 'FAIL'}  ({len(entry['points'])} points)",
              file=sys.stderr)
    for sid, name in report.failures(result):
        print(f"  failed: {sid} / {name}", file=sys.stderr)
    logging.getLogger("gtorsion").info("total %.2fs", time.perf_counter() - started)
    return EXIT_OK if result["pass"] else EXIT_CHECK_FAILED


def _cmd_list(_args):
    for sc in scenarios.catalogue():
        flags = ",".join(sorted(sc.expectations))
        print(f"{sc.id:14s} dim={sc.chart.dim} m={sc.m} backend={sc.backend:8s} "
              f"points={sc.default_points:<4d} expect={flags}")
        print(f"{'':14s} {sc.description}")
    return EXIT_OK


def _cmd_explain(args):
    if args.check is None:
        for name in sorted(DESCRIPTIONS):
            print(name)
        return EXIT_OK
    if args.check not in DESCRIPTIONS:
        print(f"unknown check {args.check!r}; run 'gtorsion explain' for the list", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.check}: {DESCRIPTIONS[args.check]}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    handlers = {"run": _cmd_run, "list": _cmd_list, "explain": _cmd_explain}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        where = "" if exc.point is None else f" at {exc.point}"
        print(f"numerical error{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except GTorsionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
