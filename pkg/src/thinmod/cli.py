"""``drg`` command line.

Exit codes: 0 all gates pass, 2 unreadable input, 3 not distance-regular,
4 outside the Q-polynomial class (no ordering, or diameter/valency < 3),
5 an audit or cross-check gate failed.
"""

from __future__ import annotations

import argparse
import os
import sys

from .graphs import DisconnectedGraphError, GraphFormatError, NotDistanceRegularError, load_graph
from .kernel import DEFAULT_EPS, Arith
from .params import ParameterArray, ParameterArrayError
from .report import EXIT_NOT_DRG, EXIT_PARSE, Outcome, analyze_graph, analyze_params, dumps, header

FAMILIES = ("qracah", "classical")


class UsageError(ValueError):
    pass


def resolve_tolerance(flag: float | None, environ=os.environ) -> float:
    """--tol wins over DRG_TOL, which wins over the built-in default."""
    if flag is not None:
        return flag
    raw = environ.get("DRG_TOL")
    if raw is None or raw.strip() == "":
        return DEFAULT_EPS
    try:
        value = float(raw)
    except ValueError:
        raise UsageError(f"DRG_TOL={raw!r} is not a number") from None
    if value < 0:
        raise UsageError("DRG_TOL must be nonnegative")
    return value


def _common(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("exact", "float"), default="exact",
                   help="rational arithmetic (default) or float64 with tolerance")
    p.add_argument("--tol", type=float, default=None, help="float-mode tolerance (overrides DRG_TOL)")
    p.add_argument("--seed", type=int, default=0, help="seed for the module decomposition")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drg", description="Thin-module analysis of distance-regular graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-graph", help="full pipeline on a graph file")
    p.add_argument("--input", required=True, help="edge-list file: header 'n m', then 'u v' per edge")
    p.add_argument("--base-vertex", type=int, default=0)
    _common(p)

    p = sub.add_parser("analyze-params", help="formula pipeline on a parameter-array JSON file")
    p.add_argument("--params", required=True)
    p.add_argument("--family", choices=FAMILIES, default=None)
    _common(p)

    p = sub.add_parser("cross-check", help="matrix scalars against formula scalars, module by module")
    p.add_argument("--input", required=True)
    p.add_argument("--base-vertex", type=int, default=0)
    _common(p)

    p = sub.add_parser("fit-family", help="fit a q-Racah or classical family")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="graph file (global fit plus every module)")
    src.add_argument("--params", help="parameter-array JSON (treated as a trivial module)")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--base-vertex", type=int, default=0)
    _common(p)
    return parser


def _read_params(path: str, arith: Arith) -> ParameterArray:
    with open(path, encoding="utf-8") as fh:
        return ParameterArray.from_json(fh.read(), arith)


def run(args: argparse.Namespace) -> Outcome:
    eps = resolve_tolerance(args.tol)
    arith = Arith(args.mode == "exact", eps)
    cmd = args.command
    graph_path = getattr(args, "input", None)
    if graph_path is not None:
        g = load_graph(graph_path)
        if not 0 <= args.base_vertex < g.n:
            raise UsageError(f"base vertex {args.base_vertex} is not in 0..{g.n - 1}")
        if cmd == "analyze-graph":
            return analyze_graph(g, arith, args.base_vertex, args.seed)
        if cmd == "cross-check":
            return analyze_graph(g, arith, args.base_vertex, args.seed, command=cmd, with_families=False)
        return analyze_graph(g, arith, args.base_vertex, args.seed, command=cmd, family=args.family)
    pa = _read_params(args.params, arith)
    return analyze_params(pa, arith, args.family, command=cmd)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        outcome = run(args)
    except (GraphFormatError, ParameterArrayError, UsageError, OSError) as exc:
        print(f"drg: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotDistanceRegularError, DisconnectedGraphError) as exc:
        report = header(args.command, Arith(args.mode == "exact"), args.seed, args.mode)
        report["error"] = f"not distance-regular: {exc}"
        outcome = Outcome(report, EXIT_NOT_DRG)
    text = dumps(outcome.report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if outcome.exit_code:
        reason = outcome.report.get("error") or ", ".join(outcome.report.get("verdict", {}).get("failures", []))
        print(f"drg: exit {outcome.exit_code}: {reason}", file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
