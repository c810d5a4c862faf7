"""Command-line front end.

    polp run --program FILE [--query ATOM --objective EXPR --constraint C ...]
    polp ingest --edges FILE --opt-fraction F --seed N --out FILE
    polp bench complete --max-n N --seed S --out CSV

`run` exits with 0 when the solver converged, 2 when the constraints are
infeasible, 3 when the iteration limit was hit and 1 on any error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import PolpError
from .network import bench_complete, ingest_edgelist, write_bench_csv
from .optimizer import CONVERGED, INFEASIBLE, MAX_ITERS
from .parser import SolverConfig, parse_directives, parse_problem, parse_program
from .pipeline import PipelineConfig, optimize_prob
from .report import RunReport

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_MAX_ITERS = 0, 1, 2, 3
STATUS_EXIT = {CONVERGED: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, MAX_ITERS: EXIT_MAX_ITERS}


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def build_parser():
    ap = argparse.ArgumentParser(prog="polp", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="optimize a program and report the query probability")
    run.add_argument("--program", required=True, help="program file")
    run.add_argument("--query", help="ground query atom (overrides the file directive)")
    run.add_argument("--objective", help="objective expression over optimizable facts")
    run.add_argument("--constraint", action="append", default=None, metavar="CONSTR",
                     help="constraint such as 'path(a,e) > 0.6'; repeatable")
    run.add_argument("--maximize", action="store_true", help="maximize instead of minimize")
    run.add_argument("--tol", type=float, default=1e-5)
    run.add_argument("--max-iters", type=int, default=1000)
    run.add_argument("--multistart", type=int, default=1, metavar="K")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--strict-eps", type=float, default=0.0, metavar="E")
    run.add_argument("--algorithm", default="slsqp")
    run.add_argument("--timeout", type=float, default=None, help="per-phase limit in seconds")
    run.add_argument("--format", choices=("json", "text", "csv"), default="text")
    run.add_argument("--out", default=None, help="report file (default: stdout)")
    run.add_argument("--dot", default=None, help="write the query BDD in Graphviz format")

    ing = sub.add_parser("ingest", help="turn an edge list into a program")
    ing.add_argument("--edges", required=True)
    ing.add_argument("--opt-fraction", type=float, default=0.5)
    ing.add_argument("--seed", type=int, default=0)
    ing.add_argument("--fixed-prob", type=float, default=0.5)
    ing.add_argument("--opt-range", type=float, nargs=2, default=(0.001, 0.999),
                     metavar=("LO", "HI"))
    ing.add_argument("--out", default=None)

    bench = sub.add_parser("bench", help="regenerate benchmark tables")
    bsub = bench.add_subparsers(dest="suite", required=True)
    comp = bsub.add_parser("complete", help="complete graphs K_N")
    comp.add_argument("--max-n", type=int, default=6)
    comp.add_argument("--min-n", type=int, default=3)
    comp.add_argument("--seed", type=int, default=1)
    comp.add_argument("--timeout", type=float, default=300.0)
    comp.add_argument("--cap", type=int, default=7, help="largest N accepted")
    comp.add_argument("--out", default=None)
    return ap


def cmd_run(args):
    text = Path(args.program).read_text(encoding="utf-8")
    program = parse_program(text)
    kwargs = parse_directives(program.directives)
    if args.query:
        kwargs["query_text"] = args.query
    if args.objective:
        kwargs["objective_text"] = args.objective
    if args.constraint is not None:
        kwargs["constraints_text"] = args.constraint
    if args.maximize:
        kwargs["direction"] = "maximize"
    if "query_text" not in kwargs:
        raise PolpError("no query given (use --query or a '% polp: query=...' directive)")
    config = SolverConfig(algorithm=args.algorithm, tol=args.tol, max_iters=args.max_iters,
                          strict_eps=args.strict_eps, multistart=args.multistart,
                          seed=args.seed)
    problem = parse_problem(program, config=config, **kwargs)
    result = optimize_prob(program, problem, PipelineConfig(phase_timeout=args.timeout))
    if args.dot:
        roots = {str(q): r for q, r in result.roots.items()}
        Path(args.dot).write_text(result.manager.to_dot(roots), encoding="utf-8")
    report = RunReport.from_result(result, args.program)
    _write(args.out, report.render(args.format))
    return STATUS_EXIT[report.status]


def cmd_ingest(args):
    text = Path(args.edges).read_text(encoding="utf-8")
    out = ingest_edgelist(text, args.opt_fraction, args.seed, args.fixed_prob,
                          tuple(args.opt_range), source=args.edges)
    _write(args.out, out)
    return EXIT_OK


def cmd_bench(args):
    rows = bench_complete(range(args.min_n, args.max_n + 1), args.seed, args.timeout,
                          max_n=args.cap)
    if args.out in (None, "-"):
        write_bench_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_bench_csv(rows, fh)
    return EXIT_OK


def main(argv=None):
    level = getattr(logging, os.environ.get("POLP_LOG", "WARNING").upper(), None)
    logging.basicConfig(level=level if isinstance(level, int) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "ingest": cmd_ingest, "bench": cmd_bench}[args.command]
    try:
        return handler(args)
    except PolpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: [io] {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
