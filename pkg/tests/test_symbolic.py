import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import SIGNAL, atom, compile_text, random_formula_manager
from polp.bdd import PathTerm
from polp.errors import ResourceError, SymbolicError
from polp.expr import Constraint, Mul, QueryRef, Sub
from polp.oracle import enumerate_worlds
from polp.parser import parse_expr, parse_program
from polp.symbolic import (QueryPolynomial, evaluate, expr_compile, gradient, paths_value,
                           raw_operation_count, to_polynomial)


@pytest.fixture(scope="module")
def signal_poly():
    gp, m, root, q = compile_text(SIGNAL, "path(a,e)")
    atoms = {f.id: f.atom for f in gp.opt_vars()}
    return gp, q, to_polynomial(m.paths_prob(root), atoms)


def test_signal_equation_text(signal_poly):
    _, _, poly = signal_poly
    assert poly.pretty() == "-0.216*edge(b,c)*edge(b,d) + 0.27*edge(b,c) + 0.72*edge(b,d)"
    assert len(poly) == 3 and poly.operation_count() == 6


def test_signal_value_at_reported_optimum(signal_poly):
    gp, _, poly = signal_poly
    bc, bd = (f.id for f in gp.opt_vars())
    assert evaluate(poly, {bc: 0.6352, bd: 0.7352}) == pytest.approx(0.6, abs=5e-4)


def test_signal_value_matches_enumeration(signal_poly):
    gp, q, poly = signal_poly
    bc, bd = (f.id for f in gp.opt_vars())
    exact = enumerate_worlds(gp, {bc: 0.5, bd: 0.5}, q)
    assert poly.evaluate({bc: 0.5, bd: 0.5}) == pytest.approx(exact, abs=1e-12)


def test_signal_gradient(signal_poly):
    gp, _, poly = signal_poly
    bc, bd = (f.id for f in gp.opt_vars())
    g = gradient(poly, {bc: 0.5, bd: 0.5})
    assert g[bc] == pytest.approx(0.162, abs=1e-12)
    assert g[bd] == pytest.approx(0.72 - 0.216 * 0.5, abs=1e-12)


def test_constant_polynomial():
    poly = to_polynomial([PathTerm(0.45, ())])
    assert poly.terms == {(): 0.45}
    assert poly.evaluate({}) == 0.45 and poly.evaluate({3: 0.2}) == 0.45
    assert poly.gradient({}) == {}
    assert poly.operation_count() == 0


def test_missing_variable(signal_poly):
    gp, _, poly = signal_poly
    with pytest.raises(SymbolicError):
        poly.evaluate({gp.opt_vars()[0].id: 0.5})
    with pytest.raises(SymbolicError):
        poly.gradient({})


def test_tiny_coefficients_dropped():
    poly = QueryPolynomial({(0,): 1e-16, (1,): 0.5})
    assert list(poly.terms) == [(1,)]


def test_monomial_cap():
    paths = [PathTerm(0.5, tuple((v, 0) for v in range(12)))]
    with pytest.raises(ResourceError):
        to_polynomial(paths, max_monomials=100)


path_lists = st.lists(
    st.tuples(st.floats(0.01, 1.0),
              st.dictionaries(st.integers(0, 3), st.integers(0, 1), max_size=4)),
    min_size=1, max_size=6)


@settings(max_examples=100, deadline=None)
@given(path_lists, st.integers(0, 2 ** 31))
def test_canonical_equals_raw(raw, seed):
    paths = [PathTerm(c, tuple(sorted(lits.items()))) for c, lits in raw]
    poly = to_polynomial(paths)
    rng = np.random.default_rng(seed)
    for _ in range(100):
        x = {v: float(rng.uniform()) for v in range(4)}
        assert poly.evaluate(x) == pytest.approx(paths_value(paths, x), abs=1e-12)
    assert poly.operation_count() <= max(raw_operation_count(paths), 1) * 4


def central_difference(poly, x, v, h=1e-6):
    up, down = dict(x), dict(x)
    up[v] += h
    down[v] -= h
    return (poly.evaluate(up) - poly.evaluate(down)) / (2 * h)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.frozensets(st.integers(0, 4), max_size=4),
                       st.floats(-2, 2), min_size=1, max_size=8),
       st.integers(0, 2 ** 31))
def test_gradient_matches_finite_differences(terms, seed):
    poly = QueryPolynomial({tuple(k): c for k, c in terms.items()})
    rng = np.random.default_rng(seed)
    for _ in range(20):
        x = {v: float(rng.uniform(0.01, 0.99)) for v in range(5)}
        g = poly.gradient(x)
        for v in poly.vars:
            fd = central_difference(poly, x, v)
            assert abs(g[v] - fd) <= 1e-6 * max(abs(fd), 1e-3)


@pytest.mark.parametrize("seed", range(20))
def test_probability_range(seed):
    m, root = random_formula_manager(seed, 7)
    poly = to_polynomial(m.paths_prob(root))
    opt = [v for v in range(7) if m.var_meta[v].optimizable]
    rng = np.random.default_rng(seed)
    for _ in range(50):
        value = poly.evaluate({v: float(rng.uniform()) for v in opt})
        assert -1e-9 <= value <= 1 + 1e-9
    corners = {v: float(rng.integers(0, 2)) for v in opt}
    assert -1e-9 <= poly.evaluate(corners) <= 1 + 1e-9


def test_compensated_summation_agrees(signal_poly):
    gp, _, poly = signal_poly
    x = {f.id: 0.3 for f in gp.opt_vars()}
    assert poly.evaluate(x, compensated=True) == pytest.approx(poly.evaluate(x), abs=1e-15)


@pytest.fixture(scope="module")
def signal_program():
    return parse_program(SIGNAL)


def columns_for(program):
    return {f.atom: i for i, f in enumerate(program.opt_facts)}


def test_linear_expression(signal_program):
    e = expr_compile(parse_expr("edge(b,c) - edge(b,d)", signal_program), {},
                     columns_for(signal_program))
    X = np.array([[0.4, 0.7], [0.1, 0.2]])
    assert np.allclose(e.value(X), [-0.3, -0.1])
    assert np.array_equal(e.grad(X), [[1.0, -1.0], [1.0, -1.0]])


def test_constant_expression_gradient(signal_program):
    e = expr_compile(parse_expr("0.25", signal_program), {}, columns_for(signal_program))
    assert e(np.array([0.5, 0.5])) == 0.25
    assert np.array_equal(e.grad(np.array([[0.5, 0.5]])), [[0.0, 0.0]])


def test_query_constraint_residual(signal_program, signal_poly):
    _, q, poly = signal_poly
    cons = Constraint(QueryRef(q), ">", parse_expr("0.6", signal_program))
    g = expr_compile(cons.residual(0.0), {q: poly}, columns_for(signal_program))
    x = np.array([0.6352, 0.7352])
    ids = {f.atom: f.id for f in compile_text(SIGNAL, "path(a,e)")[0].opt_vars()}
    px = poly.evaluate({ids[a]: x[i] for a, i in columns_for(signal_program).items()})
    assert g(x) == pytest.approx(0.6 - px, abs=1e-15)


def test_unresolved_query_atom(signal_program):
    with pytest.raises(SymbolicError):
        expr_compile(QueryRef(atom("path(a,e)")), {}, columns_for(signal_program))


def test_product_of_disjoint_polynomials():
    p1 = QueryPolynomial({(0,): 0.5, (0, 1): -0.2, (): 0.1}, {0: "u", 1: "v"})
    p2 = QueryPolynomial({(2,): 0.9, (): 0.05}, {2: "w"})
    qa, qb = atom("qa"), atom("qb")
    cols = {"u": 0, "v": 1, "w": 2}
    e = expr_compile(Mul(QueryRef(qa), QueryRef(qb)), {qa: p1, qb: p2}, cols)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.uniform(size=3)
        a = p1.evaluate({0: x[0], 1: x[1]})
        b = p2.evaluate({2: x[2]})
        assert e(x) == pytest.approx(a * b, abs=1e-14)


def test_composite_gradient():
    p1 = QueryPolynomial({(0,): 0.5, (0, 1): -0.2}, {0: "u", 1: "v"})
    qa = atom("qa")
    cols = {"u": 0, "v": 1}
    e = expr_compile(Sub(Mul(QueryRef(qa), QueryRef(qa)), QueryRef(qa)), {qa: p1}, cols)
    x = np.array([0.3, 0.6])
    g = e.grad(x[None, :])[0]
    h = 1e-6
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        fd = (e(x + dx) - e(x - dx)) / (2 * h)
        assert abs(g[j] - fd) <= 1e-6 * max(abs(fd), 1e-3)
