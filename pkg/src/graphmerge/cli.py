"""Command-line front end.

    graphmerge plan PROBLEM [flags]
    graphmerge validate PROBLEM PLAN
    graphmerge dot PROBLEM [--out DIR] [--levels A..B]

Exit codes: 0 success, 1 input error, 2 planning or validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .coordination import validate_global
from .dot import graph_to_dot
from .engine import Engine, EngineConfig, PlanningFailure
from .parser import ParseError, parse_plan, parse_problem, render_plan

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _load_problem(path: str):
    try:
        return parse_problem(_read(path))
    except ParseError as exc:
        raise InputError(f"{path}:{exc}") from None


def _levels(text: str) -> tuple:
    lo, sep, hi = text.partition("..")
    if not sep or not lo.isdigit() or not hi.isdigit() or int(lo) > int(hi):
        raise argparse.ArgumentTypeError("expected A..B with A <= B")
    return int(lo), int(hi)


def _config(args) -> EngineConfig:
    try:
        return EngineConfig(
            max_levels=args.max_levels,
            max_rounds=args.max_rounds,
            mode=args.mode,
            trace_dir=args.trace,
            seed=args.seed,
            csp_trace=args.csp_trace,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_plan(args) -> int:
    problem = _load_problem(args.problem)
    try:
        plan = Engine(problem, _config(args)).run()
    except PlanningFailure as exc:
        print(f"failure: {exc.reason} (level {exc.level})" + (f": {exc.detail}" if exc.detail else ""),
              file=sys.stderr)
        return EXIT_FAIL
    sys.stdout.write(render_plan(plan))
    return EXIT_OK


def cmd_validate(args) -> int:
    problem = _load_problem(args.problem)
    raw = _read(args.plan)
    try:
        plan = parse_plan(raw.decode("utf-8"), problem)
    except UnicodeDecodeError:
        raise InputError(f"{args.plan}: not UTF-8") from None
    except ParseError as exc:
        raise InputError(f"{args.plan}:{exc}") from None
    verdict = validate_global(plan, problem)
    if verdict.valid:
        print(f"valid (makespan {plan.makespan})")
        return EXIT_OK
    print(f"invalid: {verdict.reason}", file=sys.stderr)
    return EXIT_FAIL


def cmd_dot(args) -> int:
    problem = _load_problem(args.problem)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def dump(engine, iteration):
        for name in engine.names:
            g = engine.agents[name].graph
            path = os.path.join(out_dir, f"{name}-{iteration:02d}.dot")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(graph_to_dot(g, problem.goal, args.levels, f"{name} iteration {iteration}"))
            written.append(path)

    engine = Engine(problem, _config(args), on_iteration=dump)
    try:
        engine.run()
    except PlanningFailure as exc:
        print(f"note: planning stopped with {exc.reason}", file=sys.stderr)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphmerge", description="Distributed planning by merging planning graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def engine_flags(p):
        p.add_argument("--max-levels", type=int, default=50)
        p.add_argument("--max-rounds", type=int, default=None)
        p.add_argument("--mode", choices=["det", "conc"], default="det")
        p.add_argument("--trace", metavar="DIR", default=None)
        p.add_argument("--csp-trace", action="store_true", help="also log extraction steps (needs --trace)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("plan", help="solve a problem and print the global plan")
    p.add_argument("problem")
    engine_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a rendered plan against a problem")
    p.add_argument("problem")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dot", help="write one DOT file per agent and iteration")
    p.add_argument("problem")
    p.add_argument("--out", default=".")
    p.add_argument("--levels", type=_levels, default=None, metavar="A..B")
    engine_flags(p)
    p.set_defaults(func=cmd_dot)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
