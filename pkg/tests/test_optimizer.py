import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import signal_problem
from polp.errors import PhaseTimeout, PolpError
from polp.expr import Const, Constraint, OptRef, QueryRef
from polp.logic import Atom
from polp.network import complete_graph_problem
from polp.optimizer import (CONVERGED, INFEASIBLE, MAX_ITERS, OptProblem, kkt_residual,
                            multistart, optimize, solve)
from polp.parser import SolverConfig
from polp.pipeline import maximize_as_minimize, optimize_prob
from polp.symbolic import QueryPolynomial, expr_compile
from polp.timing import Deadline


def opt_problem(**kw):
    program, problem = signal_problem(**kw)
    return optimize_prob(program, problem).opt_problem


def assert_feasible(p, sol):
    x = np.array(sol.x)
    assert np.all(x >= p.lower - 1e-9) and np.all(x <= p.upper + 1e-9)
    if sol.status == CONVERGED:
        assert all(g <= p.config.tol for g in p.residuals(x))
        assert sol.max_violation <= p.config.tol


def test_signal_optimum():
    p = opt_problem()
    sol = solve(p)
    assert sol.status == CONVERGED
    assert sol.objective_value == pytest.approx(1.3704, abs=5e-3)
    assert_feasible(p, sol)
    # the query constraint is active
    assert p.residuals(np.array(sol.x))[0] == pytest.approx(0.0, abs=1e-3)
    assert kkt_residual(p, sol.x) < 1e-4
    assert sol.assignment.keys() == {"edge(b,c)", "edge(b,d)"}


def test_box_only_minimum():
    sol = solve(opt_problem(constraints=[]))
    assert sol.status == CONVERGED
    assert sol.x == pytest.approx((0.3, 0.3), abs=1e-9)
    assert sol.objective_value == pytest.approx(0.6, abs=1e-9)


def test_infeasible_keeps_most_feasible_point():
    p = opt_problem(constraints=["path(a,e) >= 0.999"])
    sol = solve(p)
    assert sol.status == INFEASIBLE
    assert sol.x == pytest.approx((0.8, 0.8), abs=1e-6)
    # f(0.8, 0.8) = 0.65376 is the best reachable probability
    assert sol.max_violation == pytest.approx(0.999 - 0.65376, abs=1e-6)


def test_max_iters_status():
    sol = solve(opt_problem(config=SolverConfig(max_iters=1)))
    assert sol.status == MAX_ITERS
    assert len(sol.x) == 2


def test_multistart_matches_single_start():
    p = opt_problem(config=SolverConfig(multistart=8, seed=42))
    many = optimize(p)
    one = solve(p)
    assert many.status == CONVERGED
    assert many.objective_value == pytest.approx(one.objective_value, abs=5e-3)


def test_multistart_one_is_solve():
    p = opt_problem()
    assert multistart(p, 1, seed=5) == solve(p)


def test_seeded_runs_are_identical():
    p = opt_problem(config=SolverConfig(multistart=4, seed=3))
    a, b = optimize(p), optimize(p)
    assert a == b and a.x == b.x


def test_multistart_rejects_zero():
    with pytest.raises(PolpError):
        multistart(opt_problem(), 0, 0)


@pytest.mark.parametrize("constraints", [None, [], ["path(a,e) >= 0.5"]])
def test_direction_symmetry(constraints):
    p = opt_problem(constraints=constraints, objective="edge(b,c) * edge(b,d) - edge(b,c)",
                    direction="maximize")
    up = solve(p)
    down = solve(maximize_as_minimize(p))
    assert up.x == down.x
    assert up.objective_value == -down.objective_value


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 0.999), st.floats(0.3, 0.8))
def test_restoration_is_monotone(threshold, cap):
    p = opt_problem(constraints=[f"path(a,e) >= {threshold!r}", f"edge(b,c) <= {cap!r}"])
    sol = solve(p)
    hist = sol.restoration_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    assert_feasible(p, sol)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_complete_graph_solutions_are_feasible(n):
    program, problem = complete_graph_problem(n, 1)
    res = optimize_prob(program, problem)
    assert res.solution.status == CONVERGED
    assert_feasible(res.opt_problem, res.solution)
    assert res.query_probability == pytest.approx(0.8, abs=5e-3)


def test_no_variables():
    p = OptProblem(0, expr_compile_const(0.3), [], [])
    sol = solve(p)
    assert sol.status == CONVERGED and sol.x == () and sol.objective_value == 0.3


def expr_compile_const(value):
    return expr_compile(Const(value), {}, {})


def test_invalid_bounds():
    with pytest.raises(PolpError):
        OptProblem(1, expr_compile_const(0.0), [], [(0.5, 0.5)])
    with pytest.raises(PolpError):
        OptProblem(1, expr_compile_const(0.0), [], [(0.2, 0.5)], direction="sideways")


def test_unknown_solver():
    with pytest.raises(PolpError):
        solve(opt_problem(config=SolverConfig(algorithm="mma")))


def test_deadline_is_enforced():
    p = opt_problem()
    dead = Deadline(0.0)
    dead.start -= 1.0
    with pytest.raises(PhaseTimeout):
        solve(p, deadline=dead)


def test_one_variable_problem():
    a, q = Atom("a", ()), Atom("q", ())
    poly = QueryPolynomial({(0,): 0.72}, {0: a})
    cols = {a: 0}
    g = expr_compile(Constraint(QueryRef(q), ">=", Const(0.6)).residual(0.0), {q: poly}, cols)
    p = OptProblem(1, expr_compile(OptRef(a), {}, cols), [g], [(0.3, 0.999)])
    sol = solve(p)
    assert sol.status == CONVERGED
    assert sol.x[0] == pytest.approx(0.6 / 0.72, abs=1e-5)
