"""Command line entry point (``oaesym``).

Exit status: 0 when every asserted check passes, 1 when any fails, 2 on
usage or input errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .checks import (
    FLOW_PAIRS, default_seeds, read_seed_file, run_backlund, run_commute, run_darboux, run_hierarchy,
    run_suite, run_symmetries, run_verify,
)
from .kernel import rational
from .report import FAIL, Record, Report
from .solutions import BUNDLED, RejectedSolution, SolutionFormatError, load_solution, reduce_bundle
from .spectral import DEFAULT_ORDER


class UsageError(Exception):
    pass


def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--report", metavar="PATH", default=d(None), help="write the JSON report here instead of stdout")
    parser.add_argument("--seed", type=int, default=d(0), help="seed for random seed sets and sample points")
    parser.add_argument("--timings", action="store_true", default=d(False),
                        help="include wall-clock seconds in records (breaks byte-identical reports)")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="no per-record lines on stderr")


def _order(p):
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, metavar="N", help="truncation order (default 4)")


def _pairs(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in items if t not in FLOW_PAIRS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown pair family {bad[0]!r}; choose from {','.join(FLOW_PAIRS)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oaesym", description="Exact verification of associativity-equation hierarchies.")
    parser.add_argument("--version", action="version", version=f"oaesym {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _globals(p, suppress=True)
        return p

    p = cmd("verify", "residual of the bundle's equations")
    p.add_argument("bundle")
    p = cmd("hierarchy", "towers and spectral series")
    _order(p)
    p.add_argument("--seeds", metavar="FILE", help="JSON seed sets instead of random ones")
    p.add_argument("bundle")
    p = cmd("symmetries", "nonlocal and coefficient symmetries")
    _order(p)
    p.add_argument("--seeds", metavar="FILE")
    p.add_argument("bundle")
    p = cmd("commute", "commutation of extended flows")
    _order(p)
    p.add_argument("--pairs", type=_pairs, default=list(FLOW_PAIRS), help="comma list from tau,sigma,w,wdvv")
    p.add_argument("--seeds", metavar="FILE")
    p.add_argument("bundle")
    p = cmd("darboux", "Darboux-type transformation at sample points")
    _order(p)
    p.add_argument("--points", type=int, default=10, metavar="M")
    p.add_argument("--lam0", metavar="Q", help="also report residuals with lam set to this rational")
    p.add_argument("--seeds", metavar="FILE")
    p.add_argument("bundle")
    p = cmd("backlund", "intermediate integrals and Backlund-type maps")
    p.add_argument("bundle")
    p = cmd("reduce", "print the gradient-reduced oriented bundle")
    p.add_argument("--output", metavar="FILE", help="write the bundle here instead of stdout")
    p.add_argument("bundle")
    p = cmd("suite", "every check on every bundled solution")
    _order(p)
    p.add_argument("--points", type=int, default=10, metavar="M")
    cmd("list", "bundled solution ids")
    return parser


def _load(name: str, *, trust: bool = True):
    try:
        return load_solution(name, trust=trust)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except SolutionFormatError as exc:
        raise UsageError(f"parse error: {exc}") from None


def _seeds(args, bundle):
    if getattr(args, "seeds", None):
        try:
            return read_seed_file(args.seeds)
        except (OSError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot read seed file: {exc}") from None
    return default_seeds(bundle, args.order, args.seed)


def execute(args) -> tuple[Report, str | None]:
    """Run a parsed command; returns the report and optional extra stdout text."""
    options = {k: v for k, v in sorted(vars(args).items())
               if k not in ("command", "report", "seed", "timings", "quiet", "bundle", "output")}
    report = Report(args.command, args.seed, options, timings=args.timings)
    extra = None
    if args.command == "suite":
        records, inputs = run_suite(args.seed, args.order, args.points)
        report.extend(records)
        report.inputs.update(inputs)
        return report, None
    if args.command == "list":
        return report, "\n".join(BUNDLED) + "\n"
    if getattr(args, "order", 1) < 1:
        raise UsageError("--order must be at least 1")
    if args.command == "verify":
        bundle = _load(args.bundle, trust=False)
        report.inputs[bundle.id] = bundle.digest
        report.extend(run_verify(bundle))
        return report, None
    try:
        bundle = _load(args.bundle)
    except RejectedSolution as exc:
        report.add(Record(f"verify.{exc.kind}/{exc.bundle_id}", FAIL, "input rejected before running", str(exc)))
        return report, None
    report.inputs[bundle.id] = bundle.digest
    if args.command == "hierarchy":
        report.extend(run_hierarchy(bundle, args.order, _seeds(args, bundle)))
    elif args.command == "symmetries":
        report.extend(run_symmetries(bundle, args.order, _seeds(args, bundle)))
    elif args.command == "commute":
        seeds = _seeds(args, bundle)
        report.extend(run_commute(bundle, args.order, seeds, args.pairs))
    elif args.command == "darboux":
        lam0 = None
        if args.lam0 is not None:
            try:
                lam0 = rational(args.lam0)
            except (ValueError, TypeError, ZeroDivisionError):
                raise UsageError(f"--lam0 must be a rational, got {args.lam0!r}") from None
        report.extend(run_darboux(bundle, args.order, _seeds(args, bundle), args.points, args.seed, lam0))
    elif args.command == "backlund":
        report.extend(run_backlund(bundle))
    elif args.command == "reduce":
        try:
            extra = reduce_bundle(bundle)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.output:
            Path(args.output).write_text(extra)
            extra = None
    return report, extra


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, extra = execute(args)
    except UsageError as exc:
        print(f"oaesym: error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        for r in sorted(report.records, key=lambda r: r.check):
            print(f"{r.verdict.upper():4}  {r.check}  {r.detail}", file=sys.stderr)
        if report.records:
            print(f"{report.status.upper()}: {len(report.records)} records in {time.perf_counter() - start:.1f}s",
                  file=sys.stderr)
    if extra is not None:
        sys.stdout.write(extra)
    if args.command != "list":
        text = report.to_json()
        if args.report:
            Path(args.report).write_text(text)
        elif extra is None:
            sys.stdout.write(text)
    return 1 if report.status == FAIL else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
