"""Command-line front end.

    sensbench run --method akmcs --dim 5 --eval-time 1s --seed 7 --out cell.json
    sensbench grid --config grid.json --out results/
    sensbench report fastest-map --in results/ --out fastest.csv

Exit status is 0 on success, 1 on a usage error and 2 when execution fails.
Diagnostics go to stderr; results only to the files named by ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from .bass import MCMC_PROFILES
from .errors import SensBenchError
from .harness import (
    EVAL_TIMES, GridConfig, Method, RunConfig, Scenario, atomic_write_json, load_grid, result_to_dict, run_grid,
    run_method,
)
from .report import FORMATS, KINDS, ReportRequest, render

logger = logging.getLogger("sensbench")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

_UNITS = {"us": 1e-6, "µs": 1e-6, "ms": 1e-3, "s": 1.0, "sec": 1.0, "min": 60.0, "h": 3600.0, "day": 86400.0,
          "days": 86400.0}
_DUR = re.compile(r"^\s*((?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµ]*)\s*$")


def parse_duration(text: str) -> float:
    """Seconds from ``1us``, ``0.1ms``, ``10s``, ``1min``, ``6h``, ``1day`` or a bare number of seconds."""
    if text in EVAL_TIMES:
        return EVAL_TIMES[text]
    m = _DUR.match(text)
    if not m or m.group(2) not in ("", *_UNITS):
        raise argparse.ArgumentTypeError(f"invalid duration {text!r}")
    value = float(m.group(1)) * _UNITS.get(m.group(2), 1.0)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"duration must be positive, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sensbench", description="Sensitivity-analysis method benchmark.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one method on one scenario")
    r.add_argument("--method", required=True, choices=[m.value for m in Method])
    r.add_argument("--dim", required=True, type=_positive_int)
    r.add_argument("--eval-time", required=True, type=parse_duration, metavar="DUR")
    r.add_argument("--seed", required=True, type=_seed)
    r.add_argument("--out", required=True, type=Path)
    r.add_argument("--mcmc-profile", default="desk", choices=sorted(MCMC_PROFILES))
    r.add_argument("--trace", action="store_true", help="record per-round total-order estimates")

    g = sub.add_parser("grid", help="run a grid sweep from a JSON config")
    g.add_argument("--config", required=True, type=Path)
    g.add_argument("--out", required=True, type=Path)

    rep = sub.add_parser("report", help="render CSV or SVG from cell files")
    rep.add_argument("kind", choices=KINDS)
    rep.add_argument("--in", dest="input_dir", required=True, type=Path)
    rep.add_argument("--out", required=True, type=Path)
    rep.add_argument("--format", default="csv", choices=FORMATS)
    rep.add_argument("--baseline", choices=[m.value for m in Method])
    rep.add_argument("--challenger", choices=[m.value for m in Method] + ["fastest", "second"])
    rep.add_argument("--dim", type=_positive_int)
    rep.add_argument("--param", type=_positive_int)
    return p


def _cmd_run(args) -> int:
    if args.dim < 2:
        raise ValueError("--dim must be at least 2")
    scenario = Scenario(args.dim, args.eval_time, args.seed)
    result = run_method(args.method, scenario, RunConfig(mcmc_profile=args.mcmc_profile, trace=args.trace))
    atomic_write_json(args.out, result_to_dict(result, args.mcmc_profile))
    if result.status == "failed":
        logger.error("run failed: %s", result.error)
        return EXIT_FAILED
    logger.info("%s %s: %s, %d model evaluations", args.method, scenario.label, result.status,
                result.ledger.n_model_evals)
    return EXIT_OK


def _cmd_grid(args) -> int:
    config = GridConfig.load(args.config)

    def progress(method, d, seed, computed):
        logger.info("%s d=%d seed=%d: %s", method.value, d, seed, computed.status)

    grid = run_grid(config, args.out, progress=progress)
    failed = [r for cell in grid.cells.values() for r in cell.values() if r.status == "failed"]
    for r in failed:
        logger.error("%s %s failed: %s", r.method.value, r.scenario.label, r.error)
    logger.info("%d cells in %s", len(grid), args.out)
    return EXIT_FAILED if failed else EXIT_OK


def _cmd_report(args) -> int:
    try:
        req = ReportRequest(args.kind, args.format, args.baseline, args.challenger, args.dim, args.param)
    except ValueError as exc:
        print(f"sensbench report: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.input_dir.is_dir():
        raise FileNotFoundError(f"input directory {args.input_dir} does not exist")
    text = render(load_grid(args.input_dir), req)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "grid": _cmd_grid, "report": _cmd_report}[args.command]
    try:
        return handler(args)
    except (SensBenchError, OSError, ValueError, KeyError) as exc:
        print(f"sensbench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
