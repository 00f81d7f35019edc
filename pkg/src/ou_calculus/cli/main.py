"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 model precondition error, 4 numerical failure.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ..errors import ConfigError, ModelError, NumericalError, SectorError
from ..oumodel import load_model
from .config import load_config
from .report import FORMATS, ExperimentReport, render
from .suites import run

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_MODEL, EXIT_NUMERICAL = 0, 1, 2, 3, 4

log = logging.getLogger("ou_calculus")


def _parser():
    ap = argparse.ArgumentParser(prog="ou-calculus", description="Certify OU sector, Bellman and multiplier estimates.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the suite named in a config file")
    r.add_argument("config")
    r.add_argument("--output", help="report path (overrides the config)")
    r.add_argument("--format", choices=FORMATS, default="json")
    r.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    a = sub.add_parser("angles", help="print the sector angles of a model")
    a.add_argument("model")
    a.add_argument("--r", type=float, nargs="+", default=[1.25, 1.5, 2.0, 3.0, 4.0, 8.0])
    p = sub.add_parser("report", help="re-render a json report")
    p.add_argument("report")
    p.add_argument("--format", choices=FORMATS, default="text")
    return ap


def _emit(text, output=None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("threads must be positive", field="threads")
        cfg.threads = args.threads
    report = run(cfg)
    _emit(render(report, args.format), args.output or cfg.output)
    for c in report.checks:
        log.info("%s %s %.3e", c.verdict, c.name, c.value)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_angles(args):
    model = load_model(args.model)
    if any(r <= 1 for r in args.r):
        raise ConfigError("every r must exceed 1", field="r")
    doc = {
        "label": model.label,
        "theta2star": model.theta2star.starred,
        "table": model.angles.table(args.r),
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_PASS


def _cmd_report(args):
    try:
        doc = json.loads(Path(args.report).read_text())
        report = ExperimentReport.from_dict(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read report {args.report}: {exc}", field="report") from exc
    _emit(render(report, args.format))
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None):
    logging.basicConfig(level=os.environ.get("OU_CALCULUS_LOG", "WARNING").upper(), format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "angles": _cmd_angles, "report": _cmd_report}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error ({exc.field}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"model error ({exc.invariant}): {exc}", file=sys.stderr)
        return EXIT_MODEL
    except SectorError as exc:
        print(f"config error (angle): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
