"""Command line entry point: `cutoffsmith verify | fuzz | bench`."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import pipeline
from .pipeline import EXIT_USAGE, Config, StageError
from .semantics import DEFAULT_STATE_CAP, DomainError, parse_bounds


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which collides with condition-failed
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cutoffsmith", description="Cutoff synthesis and verification for parameterized protocols.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", help="synthesize a cutoff and discharge its conditions")
    v.add_argument("file")
    v.add_argument("--override", metavar="FILE")
    v.add_argument("--emit-smt", metavar="DIR", help="write the SMT-LIB scripts to DIR")
    v.add_argument("--emit-analysis", action="store_true", help="print the relevant clauses and invocations")
    v.add_argument("--emit-synthesis", action="store_true", help="print the simulation relation and lockstep")
    v.add_argument("--solver-path", metavar="EXE", help="SMT solver (default: $CUTOFFSMITH_SOLVER, then z3 on PATH)")
    v.add_argument("--timeout", type=float, default=10.0, metavar="S", help="per-condition solver timeout")
    v.add_argument("--keep-going", action="store_true", help="do not stop at the first failed condition")
    v.add_argument("--bounds", nargs="+", default=[], metavar="SORT=N", help="model-check domain sizes")
    v.add_argument("--skip-model-check", action="store_true")
    v.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP, help=argparse.SUPPRESS)

    f = sub.add_parser("fuzz", help="replay random traces through the synthesized lockstep")
    f.add_argument("file")
    f.add_argument("--override", metavar="FILE")
    f.add_argument("--nodes", type=int, default=4)
    f.add_argument("--trials", type=int, default=1000)
    f.add_argument("--seed", type=int, default=7)
    f.add_argument("--length", type=int, default=30)
    f.add_argument("--bounds", nargs="+", default=[], metavar="SORT=N")

    b = sub.add_parser("bench", help="run every protocol of a corpus directory")
    b.add_argument("dir", nargs="?", default=pipeline.CORPUS_DIR)
    b.add_argument("--json", metavar="OUT", help="also write the table as JSON")
    b.add_argument("--solver-path", metavar="EXE")
    b.add_argument("--timeout", type=float, default=10.0, metavar="S")
    b.add_argument("--skip-model-check", action="store_true")
    return p


def _bounds(items: List[str]):
    try:
        return parse_bounds(items)
    except ValueError as e:
        raise UsageError(str(e))


def cmd_verify(args) -> int:
    cfg = Config(solver=args.solver_path, timeout=args.timeout, keep_going=args.keep_going,
                 bounds=_bounds(args.bounds), skip_model_check=args.skip_model_check,
                 state_cap=args.state_cap, emit_smt=args.emit_smt)
    rep = pipeline.verify(args.file, args.override, cfg)
    if args.emit_analysis:
        print(rep.synthesis.analysis.dump())
    if args.emit_synthesis:
        print(rep.synthesis.dump(), end="")
    print(rep.text())
    return rep.exit_code


def cmd_fuzz(args) -> int:
    if args.nodes < 1 or args.trials < 0 or args.length < 0:
        raise UsageError("--nodes must be positive, --trials and --length non-negative")
    rep = pipeline.fuzz_conformance(args.file, args.override, args.nodes, args.trials, args.seed, args.length,
                                    _bounds(args.bounds))
    print(f"fuzz: {rep.trials} trials, {len(rep.failures)} failures, "
          f"{rep.violations_seen} traces reached a safety violation")
    for f in rep.failures:
        print(f"trial {f.trial}, step {f.step}: {f.reason}")
        print(f.dump)
    return 0 if rep.ok else 2


def cmd_bench(args) -> int:
    cfg = Config(solver=args.solver_path, timeout=args.timeout, skip_model_check=args.skip_model_check)
    rows = pipeline.bench(args.dir, cfg)
    print(pipeline.bench_table(rows), end="")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(pipeline.bench_json(rows))
    if not rows:
        print(f"no .rml protocols in {args.dir}", file=sys.stderr)
    return pipeline.bench_exit_code(rows)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"verify": cmd_verify, "fuzz": cmd_fuzz, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except StageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE if e.stage in ("parse", "override") else pipeline.EXIT_CODES[pipeline.UNKNOWN]
    except (UsageError, DomainError) as e:
        print(f"cutoffsmith: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
