"""Command-line driver.

Exit codes: 0 converged with residuals in tolerance, 2 invalid input,
3 not converged (or residuals above tolerance).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .instances import NAMED, random_two_connected, stacked
from .io import ParseError, dumps, instance_from_graph, instance_to_dict, load_instance, load_solution
from .layout import LayoutError
from .pipeline import EXIT_INVALID, EXIT_OK, GEOMETRIC_TOLERANCE, run_pack, run_pdpack
from .planegraph import GraphError
from .solver import LINEAR_SOLVERS, MODES, SolverConfig
from .svg import render_svg


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", help="instance file (JSON or text)")
    p.add_argument("-o", "--output", help="write the solution JSON here (default: stdout)")
    p.add_argument("--tol", type=float, help="max angle residual in radians (default: min(1e-9 n, 1e-6))")
    p.add_argument("--max-iter", type=int, default=1000, help="Newton iteration cap")
    p.add_argument("--mode", choices=MODES, default="plain")
    p.add_argument("--linsolve", choices=LINEAR_SOLVERS, default="cholesky")
    p.add_argument("--geom-tol", type=float, default=GEOMETRIC_TOLERANCE,
                   help="also require tangency/orthogonality residuals below this for exit code 0")
    p.add_argument("--position-critical", action="store_true",
                   help="tighten the default angle tolerance like 1/n^2")
    p.add_argument("--check-overlap", action="store_true",
                   help="brute-force overlap check (at most 1000 circles per class)")
    p.add_argument("--svg", metavar="PATH", help="also render the packing as SVG")
    p.add_argument("--no-duals", action="store_true", help="leave dual circles out of the SVG")
    p.add_argument("--edges", action="store_true", help="draw primal edges in the SVG")
    p.add_argument("--timings", action="store_true",
                   help="include wall time in the solution (breaks byte-reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circlepack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdpack", help="primal-dual packing of a triangulation")
    _solver_args(p)
    p = sub.add_parser("pack", help="primal packing of a 2-connected plane graph")
    _solver_args(p)

    p = sub.add_parser("generate", help="write a test instance")
    p.add_argument("kind", choices=["stacked", "two-connected", *sorted(NAMED)])
    p.add_argument("-n", "--vertices", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deep", action="store_true", help="stacked: always split the newest face")
    p.add_argument("-o", "--output")

    p = sub.add_parser("render", help="render a solution file as SVG")
    p.add_argument("solution")
    p.add_argument("--svg", metavar="PATH", required=True)
    p.add_argument("--no-duals", action="store_true")
    p.add_argument("--edges", action="store_true")
    return parser


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _solve(args) -> int:
    try:
        inst = load_instance(args.instance)
        cfg = SolverConfig(mode=args.mode, tol=args.tol, max_iter=args.max_iter, linsolve=args.linsolve)
        run = run_pdpack if args.command == "pdpack" else run_pack
        sol = run(inst, cfg, check_overlap=args.check_overlap,
                  position_critical=args.position_critical, geometric_tolerance=args.geom_tol)
    except (ParseError, GraphError, ValueError, OSError) as exc:
        print(f"circlepack: invalid input: {exc}", file=sys.stderr)
        if args.command == "pdpack" and "triangulation" in str(exc):
            print("circlepack: hint: use 'pack' for plane graphs that are not triangulations",
                  file=sys.stderr)
        return EXIT_INVALID
    doc = sol.to_dict(timings=args.timings)
    _write(dumps(doc), args.output)
    if args.svg and doc["primal"]:
        _write(render_svg(doc, duals=not args.no_duals, edges=args.edges), args.svg)
    pd = sol if args.command == "pdpack" else sol.pd
    if pd.report is not None and not pd.report.supported_range:
        print(f"circlepack: warning: radius ratio 10^{pd.report.log_ratio / math.log(10):.1f} is beyond "
              "the range where double precision resolves the smallest circles", file=sys.stderr)
    if sol.exit_code != EXIT_OK:
        print(f"circlepack: {sol.status}", file=sys.stderr)
    return sol.exit_code


def _generate(args) -> int:
    try:
        if args.kind == "stacked":
            g = stacked(args.vertices, seed=args.seed, deep=args.deep)
        elif args.kind == "two-connected":
            g = random_two_connected(args.vertices, seed=args.seed)
        else:
            g = NAMED[args.kind]()
    except ValueError as exc:
        print(f"circlepack: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(dumps(instance_to_dict(instance_from_graph(g))), args.output)
    return EXIT_OK


def _render(args) -> int:
    try:
        doc = load_solution(args.solution)
        svg = render_svg(doc, duals=not args.no_duals, edges=args.edges)
    except (ParseError, ValueError, KeyError, OSError) as exc:
        print(f"circlepack: invalid solution: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(svg, args.svg)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("pdpack", "pack"):
        try:
            return _solve(args)
        except LayoutError as exc:
            print(f"circlepack: {exc}", file=sys.stderr)
            return 3
    if args.command == "generate":
        return _generate(args)
    return _render(args)


if __name__ == "__main__":
    sys.exit(main())
