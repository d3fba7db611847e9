"""Command-line front end: solve, print the canonical program, or cross-check with the oracle."""

from __future__ import annotations

import argparse
import sys

from .grounder import GroundingError
from .heuristics import HeuristicError
from .oracle import OracleCapError, enumerate_answer_sets, naive_ground
from .parser import RESERVED_SUFFIX, ParseError, parse_program, pretty_print
from .solver import SAT, SolveConfig, solve
from .transform import TransformError, canonicalize

__all__ = ["build_parser", "run", "main", "oracle_check", "EXIT_SAT", "EXIT_UNSAT"]

EXIT_SAT, EXIT_UNSAT = 10, 20


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heurasp", description="Lazy-grounding ASP solver with heuristic directives.")
    ap.add_argument("inputs", nargs="+", help="program files, concatenated in order")
    ap.add_argument("-n", dest="models", type=int, default=1, help="number of answer sets (0 = all)")
    ap.add_argument("--filter", action="append", default=[], metavar="PRED",
                    help="only print atoms of this predicate (repeatable)")
    ap.add_argument("--no-heuristics", action="store_true", help="ignore #heuristic directives")
    ap.add_argument("--seed", type=int, default=None, help="shuffle fallback choices with this seed")
    ap.add_argument("--stats", action="store_true", help="print search statistics")
    ap.add_argument("--trace", action="store_true", help="print decisions and assignments")
    ap.add_argument("--timeout", type=float, default=None, help=argparse.SUPPRESS)
    ap.add_argument("--mode", choices=("solve", "ground", "check"), default="solve")
    return ap


def _project(answer) -> frozenset:
    return frozenset(a for a in answer if not a.predicate.endswith(RESERVED_SUFFIX))


def oracle_check(program, heuristics=True):
    """Enumerate with the solver and the oracle; returns (solver_sets, oracle_sets)."""
    res = solve(program, SolveConfig(max_models=0, heuristics=heuristics))
    ours = {frozenset(s) for s in res.answer_sets}
    theirs = {_project(s) for s in enumerate_answer_sets(naive_ground(program))}
    return ours, theirs


def _format(atoms, filters) -> str:
    shown = [a for a in atoms if not filters or a.predicate in filters]
    return " ".join(sorted(map(str, shown)))


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    texts = []
    for path in args.inputs:
        try:
            with open(path, encoding="utf-8") as fh:
                texts.append(fh.read())
        except OSError as exc:
            print(f"heurasp: cannot read {path}: {exc.strerror}", file=sys.stderr)
            return 1
    try:
        program = canonicalize(parse_program("\n".join(texts)))
    except ParseError as exc:
        print(f"heurasp: parse error: {exc}", file=sys.stderr)
        return 1
    except TransformError as exc:
        print(f"heurasp: {exc}", file=sys.stderr)
        return 1

    if args.mode == "ground":
        print(pretty_print(program), file=out)
        return 0
    if args.mode == "check":
        try:
            ours, theirs = oracle_check(program, not args.no_heuristics)
        except OracleCapError as exc:
            print(f"heurasp: {exc}", file=sys.stderr)
            return 1
        print(f"solver: {len(ours)} answer sets", file=out)
        print(f"oracle: {len(theirs)} answer sets", file=out)
        if ours != theirs:
            for s in sorted(_format(s, ()) for s in ours - theirs):
                print(f"only solver: {s}", file=out)
            for s in sorted(_format(s, ()) for s in theirs - ours):
                print(f"only oracle: {s}", file=out)
            print("MISMATCH", file=out)
            return 1
        print("MATCH", file=out)
        return 0

    cfg = SolveConfig(max_models=args.models, heuristics=not args.no_heuristics, seed=args.seed,
                      trace=args.trace, trace_stream=out, timeout=args.timeout)
    try:
        res = solve(program, cfg)
    except (HeuristicError, GroundingError) as exc:
        print(f"heurasp: error: {exc}", file=sys.stderr)
        return 1
    for i, answer in enumerate(res.answer_sets, 1):
        print(f"Answer {i}: {_format(answer, set(args.filter))}".rstrip(), file=out)
    if res.status == SAT:
        print("SATISFIABLE", file=out)
    elif res.status != "UNSAT":
        print("UNKNOWN", file=out)
    else:
        print("UNSATISFIABLE", file=out)
    if args.stats:
        for key in ("guesses", "conflicts", "ground_rules", "ground_directives",
                    "heuristic_decisions", "fallback_decisions"):
            print(f"{key}: {res.stats[key]}", file=out)
    if res.status == SAT:
        return EXIT_SAT
    if res.status == "UNSAT":
        return EXIT_UNSAT
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
