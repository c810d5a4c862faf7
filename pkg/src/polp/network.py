"""Graph workloads: edge-list ingestion and the complete-graph benchmark."""

from __future__ import annotations

import csv
import logging
import math
import random
import re
import time

from .errors import ParseError, PolpError
from .parser import SolverConfig, format_program, parse_problem, parse_program
from .pipeline import PipelineConfig, optimize_prob

logger = logging.getLogger(__name__)

PATH_RULES = ("path(X,X).", "path(X,Y) :- path(X,Z), edge(Z,Y).")
_NODE_RE = re.compile(r"^(?:[a-z][A-Za-z0-9_]*|\d+)$")


def read_edgelist(text, source="<edges>"):
    """``u v`` pairs, one per line; blank lines and ``%``/``#`` comments are skipped."""
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "%#":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{source}: expected 'u v', got {line!r}", lineno, 1)
        for p in parts:
            if not _NODE_RE.match(p):
                raise ParseError(f"{source}: node name {p!r} is not a constant", lineno, 1)
        edges.append((parts[0], parts[1]))
    if not edges:
        raise ParseError(f"{source}: no edges")
    return edges


def optimizable_count(n_edges, fraction):
    return min(n_edges, int(math.floor(fraction * n_edges + 0.5)))


def edges_to_program(edges, opt_fraction=0.5, seed=0, fixed_prob=0.5,
                     opt_range=(0.001, 0.999)):
    """Program text with a seeded optimizable/fixed split of the (deduplicated) edges."""
    lo, hi = opt_range
    if not 0.0 <= opt_fraction <= 1.0:
        raise PolpError("opt-fraction must lie in [0, 1]")
    unique = list(dict.fromkeys(edges))
    chosen = set(random.Random(seed).sample(range(len(unique)),
                                            optimizable_count(len(unique), opt_fraction)))
    lines = []
    for i, (u, v) in enumerate(unique):
        if i in chosen:
            lines.append(f"optimizable [{lo!r},{hi!r}]::edge({u},{v}).")
        else:
            lines.append(f"{fixed_prob!r}::edge({u},{v}).")
    lines.append("")
    lines.extend(PATH_RULES if unique else PATH_RULES[:1])
    return "\n".join(lines) + "\n"


def ingest_edgelist(edge_text, opt_fraction=0.5, seed=0, fixed_prob=0.5,
                    opt_range=(0.001, 0.999), source="<edges>"):
    return edges_to_program(read_edgelist(edge_text, source), opt_fraction, seed,
                            fixed_prob, opt_range)


def complete_graph_edges(n):
    """Edges ``i -> j`` for ``1 <= i < j <= n``."""
    return [(str(i), str(j)) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def complete_graph_problem(n, seed, threshold=0.8, config=None):
    """Program and problem: keep P(path(1,n)) above `threshold`, minimize all optimizable probabilities."""
    program = parse_program(edges_to_program(complete_graph_edges(n), 0.5, seed))
    objective = " + ".join(str(f.atom) for f in program.opt_facts) or "0"
    problem = parse_problem(program, f"path(1,{n})", objective,
                            [f"path(1,{n}) > {threshold!r}"], config or SolverConfig())
    return program, problem


BENCH_COLUMNS = ("n", "edges", "optimizable", "status", "objective", "probability",
                 "time_s", "ground_ms", "compile_ms", "reorder_ms", "extract_ms",
                 "solve_ms", "monomials", "nodes")


def bench_complete(n_values, seed=1, timeout=300.0, solver=None, max_n=7):
    """Rows (dicts, in `n_values` order) for the complete-graph experiment."""
    rows = []
    for n in n_values:
        if n > max_n:
            raise PolpError(f"n={n} exceeds the configured cap {max_n}")
        program, problem = complete_graph_problem(n, seed, config=solver)
        t0 = time.monotonic()
        row = {"n": n, "edges": len(program.facts), "optimizable": len(program.opt_facts)}
        try:
            res = optimize_prob(program, problem, PipelineConfig(phase_timeout=timeout))
        except PolpError as exc:
            logger.warning("n=%d failed: %s", n, exc)
            row.update(status="timeout" if exc.stage == "timeout" else "error",
                       time_s=time.monotonic() - t0)
            rows.append(row)
            continue
        stats = res.stats()
        row.update(status=res.solution.status, objective=res.solution.objective_value,
                   probability=res.query_probability, time_s=time.monotonic() - t0,
                   monomials=stats["monomials"], nodes=stats["nodes"], **res.timings)
        rows.append(row)
        logger.info("n=%d status=%s P=%.4f %.2fs", n, row["status"], row["probability"],
                    row["time_s"])
    return rows


def write_bench_csv(rows, fh):
    w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n",
                       extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
