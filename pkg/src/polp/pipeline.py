"""End-to-end solution of a probabilistic optimizable problem.

parse -> ground -> compile BDDs -> reorder -> paths -> query equations ->
solve -> evaluate the query at the optimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .grounder import DEFAULT_MAX_GROUND_RULES, QueryCompiler, ground, new_manager
from .optimizer import OptProblem, optimize
from .symbolic import (DEFAULT_MAX_MONOMIALS, clamp_probability, expr_compile,
                       negated, raw_operation_count, to_polynomial)
from .timing import Deadline, timed

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    max_ground_rules: int = DEFAULT_MAX_GROUND_RULES
    max_monomials: int = DEFAULT_MAX_MONOMIALS
    max_nodes: int | None = None
    phase_timeout: float | None = None


@dataclass
class PipelineResult:
    program: object
    problem: object
    ground_program: object
    compiler: object
    roots: dict
    paths: dict
    polynomials: dict
    opt_problem: OptProblem
    solution: object
    timings: dict = field(default_factory=dict)

    @property
    def manager(self):
        return self.compiler.manager

    @property
    def query_polynomial(self):
        return self.polynomials[self.problem.query]

    @property
    def query_probability(self):
        return self.solution.query_probs[str(self.problem.query)]

    def stats(self):
        poly = self.query_polynomial
        paths = self.paths[self.problem.query]
        return {
            "nodes": self.manager.node_count(self.roots.values()),
            "path_terms": len(paths),
            "monomials": len(poly),
            "operations": poly.operation_count(),
            "raw_operations": raw_operation_count(paths),
        }


def build_opt_problem(problem, polynomials, opt_vars):
    """Bind the objective and constraints to a vector of optimizable probabilities."""
    columns = {f.atom: i for i, f in enumerate(opt_vars)}
    objective = expr_compile(problem.objective, polynomials, columns)
    constraints = [expr_compile(g, polynomials, columns) for g in problem.residuals()]
    return OptProblem(
        n=len(opt_vars),
        objective=objective,
        constraints=constraints,
        bounds=[(f.lower, f.upper) for f in opt_vars],
        direction=problem.direction,
        config=problem.solver,
        names=[str(f.atom) for f in opt_vars],
        constraint_labels=[str(c) for c in problem.constraints],
    )


def maximize_as_minimize(p):
    """The same problem stated as minimization of the negated objective."""
    return OptProblem(p.n, negated(p.objective), p.constraints, p.bounds, "minimize",
                      p.config, p.names, p.constraint_labels)


def optimize_prob(program, problem, config=None):
    """Solve `problem` over `program`; returns every intermediate artefact."""
    config = config or PipelineConfig()
    timings = {}

    def deadline():
        return Deadline(config.phase_timeout)

    query_atoms = problem.query_atoms()
    extra = {a for q in query_atoms for a in q.args}
    with timed(timings, "ground_ms"):
        gp = ground(program, extra, config.max_ground_rules)
    opt_vars = gp.opt_vars()
    atoms = {f.id: f.atom for f in opt_vars}

    with timed(timings, "compile_ms"):
        compiler = QueryCompiler(gp, new_manager(gp, config.max_nodes), deadline())
        roots = {q: compiler.compile(q) for q in query_atoms}
    m = compiler.manager

    with timed(timings, "reorder_ms"):
        m.reorder_optimizable_first()

    with timed(timings, "extract_ms"):
        paths = {q: m.paths_prob(r) for q, r in roots.items()}
        polys = {q: to_polynomial(paths[q], atoms, config.max_monomials) for q in query_atoms}

    opt_problem = build_opt_problem(problem, polys, opt_vars)
    with timed(timings, "solve_ms"):
        solution = optimize(opt_problem, deadline())

    values = {f.id: solution.x[i] for i, f in enumerate(opt_vars)}
    for q in query_atoms:
        solution.query_probs[str(q)] = clamp_probability(polys[q].evaluate(values))
    logger.info("%s: status=%s objective=%.6g P(%s)=%.6g", problem.query, solution.status,
                solution.objective_value, problem.query, solution.query_probs[str(problem.query)])
    return PipelineResult(program, problem, gp, compiler, roots, paths, polys,
                          opt_problem, solution, timings)
