"""Query equations: multilinear polynomials in the optimizable probabilities."""

from __future__ import annotations

import math

import numpy as np

from .errors import ResourceError, SymbolicError
from .expr import Add, Const, Mul, Neg, OptRef, QueryRef, Sub

COEFF_EPS = 1e-15
DEFAULT_MAX_MONOMIALS = 1_000_000


class QueryPolynomial:
    """Sum of ``coeff * prod(x_v for v in key)`` over sorted variable-id tuples.

    `atoms` optionally maps variable ids to the atoms they stand for; it is
    used for printing and for binding variables to optimizer columns.
    """

    def __init__(self, terms=None, atoms=None):
        clean = {}
        for key, c in (terms or {}).items():
            if abs(c) >= COEFF_EPS:
                clean[tuple(sorted(key))] = float(c)
        self.terms = dict(sorted(clean.items()))
        self.vars = frozenset(v for key in self.terms for v in key)
        self.atoms = dict(atoms or {})

    def __eq__(self, other):
        return isinstance(other, QueryPolynomial) and self.terms == other.terms

    def __repr__(self):
        return f"QueryPolynomial({self.terms!r})"

    def __len__(self):
        return len(self.terms)

    def evaluate(self, assignment, compensated=False):
        """Raw value; not clamped, so float noise outside [0,1] stays visible."""
        missing = self.vars.difference(assignment)
        if missing:
            raise SymbolicError(f"assignment misses variables {sorted(missing)}")
        parts = []
        for key, c in self.terms.items():
            for v in key:
                c *= assignment[v]
            parts.append(c)
        return math.fsum(parts) if compensated else sum(parts, 0.0)

    def gradient(self, assignment):
        missing = self.vars.difference(assignment)
        if missing:
            raise SymbolicError(f"assignment misses variables {sorted(missing)}")
        grad = {v: 0.0 for v in self.vars}
        for key, c in self.terms.items():
            for i, v in enumerate(key):
                g = c
                for j, w in enumerate(key):
                    if j != i:
                        g *= assignment[w]
                grad[v] += g
        return grad

    def operation_count(self):
        """Multiplications plus additions of the expanded form."""
        if not self.terms:
            return 0
        return sum(len(key) for key in self.terms) + len(self.terms) - 1

    def pretty(self, names=None):
        names = names or {v: str(a) for v, a in self.atoms.items()}
        if not self.terms:
            return "0"
        # highest degree first, as the equation is usually read
        items = sorted(self.terms.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        out = []
        for i, (key, c) in enumerate(items):
            factors = [names.get(v, f"x{v}") for v in key]
            mag = abs(c)
            if factors:
                body = "*".join(([f"{mag:.12g}"] if mag != 1.0 else []) + factors)
            else:
                body = f"{mag:.12g}"
            if i == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append(("- " if c < 0 else "+ ") + body)
        return " ".join(out)


def to_polynomial(paths, atoms=None, max_monomials=DEFAULT_MAX_MONOMIALS):
    """Expand path terms and collect like monomials (the canonical query equation)."""
    total = {}
    for path in paths:
        partial = {(): path.coeff}
        for v, sign in path.literals:
            nxt = {}
            for key, c in partial.items():
                grown = key + (v,)
                nxt[grown] = nxt.get(grown, 0.0) + (c if sign else -c)
                if not sign:
                    nxt[key] = nxt.get(key, 0.0) + c
            partial = nxt
        for key, c in partial.items():
            key = tuple(sorted(key))
            total[key] = total.get(key, 0.0) + c
        if len(total) > max_monomials:
            raise ResourceError(f"query equation exceeds {max_monomials} monomials")
    return QueryPolynomial(total, atoms)


def paths_value(paths, assignment):
    """Unexpanded path-sum; the reference the canonical form must agree with."""
    return sum(p.value(assignment) for p in paths)


def raw_operation_count(paths):
    """Operation count of the unexpanded path-sum (one subtraction per negated literal)."""
    if not paths:
        return 0
    ops = len(paths) - 1
    for p in paths:
        ops += len(p.literals) + sum(1 for _, s in p.literals if not s)
    return ops


def clamp_probability(value):
    return min(1.0, max(0.0, value))


def evaluate(poly, assignment):
    return poly.evaluate(assignment)


def gradient(poly, assignment):
    return poly.gradient(assignment)


# ---------------------------------------------------------------------------
# vectorised expressions over an ordered vector of optimizable probabilities
# ---------------------------------------------------------------------------

class CompiledExpr:
    """Value and gradient of an expression at points ``X[..., n]``."""

    n = 0

    def value(self, X):
        raise NotImplementedError

    def grad(self, X):
        raise NotImplementedError

    def __call__(self, x):
        return float(self.value(np.asarray(x, dtype=float)))


class _Const(CompiledExpr):
    def __init__(self, c, n):
        self.c, self.n = float(c), n

    def value(self, X):
        return np.full(np.shape(X)[:-1], self.c)

    def grad(self, X):
        return np.zeros(np.shape(X))


class _Column(CompiledExpr):
    def __init__(self, j, n):
        self.j, self.n = j, n

    def value(self, X):
        return X[..., self.j]

    def grad(self, X):
        g = np.zeros(np.shape(X))
        g[..., self.j] = 1.0
        return g


class CompiledPolynomial(CompiledExpr):
    def __init__(self, poly, var_columns, n):
        self.n = n
        keys = list(poly.terms)
        self.coeffs = np.array([poly.terms[k] for k in keys], dtype=float)
        self.mask = np.zeros((len(keys), n), dtype=bool)
        for i, key in enumerate(keys):
            for v in key:
                try:
                    self.mask[i, var_columns[v]] = True
                except KeyError:
                    raise SymbolicError(f"variable {v} has no optimizer column") from None
        self.used = np.flatnonzero(self.mask.any(axis=0))

    def value(self, X):
        if not len(self.coeffs):
            return np.zeros(np.shape(X)[:-1])
        prods = np.where(self.mask, X[..., None, :], 1.0).prod(axis=-1)
        return prods @ self.coeffs

    def grad(self, X):
        g = np.zeros(np.shape(X))
        for j in self.used:
            mask = self.mask.copy()
            mask[:, j] = False
            prods = np.where(mask, X[..., None, :], 1.0).prod(axis=-1)
            g[..., j] = prods @ (self.coeffs * self.mask[:, j])
        return g


class _Sum(CompiledExpr):
    def __init__(self, a, b, sign):
        self.a, self.b, self.sign, self.n = a, b, sign, a.n

    def value(self, X):
        return self.a.value(X) + self.sign * self.b.value(X)

    def grad(self, X):
        return self.a.grad(X) + self.sign * self.b.grad(X)


class _Product(CompiledExpr):
    def __init__(self, a, b):
        self.a, self.b, self.n = a, b, a.n

    def value(self, X):
        return self.a.value(X) * self.b.value(X)

    def grad(self, X):
        va = np.asarray(self.a.value(X))[..., None]
        vb = np.asarray(self.b.value(X))[..., None]
        return self.a.grad(X) * vb + va * self.b.grad(X)


class _Negated(CompiledExpr):
    def __init__(self, a):
        self.a, self.n = a, a.n

    def value(self, X):
        return -self.a.value(X)

    def grad(self, X):
        return -self.a.grad(X)


def negated(e):
    return _Negated(e)


def expr_compile(expr, query_polys, columns):
    """Compile an expression tree into a `CompiledExpr`.

    `columns` maps optimizable atoms to positions in the optimizer vector;
    `query_polys` maps query atoms to their `QueryPolynomial` (whose `atoms`
    attribute ties variable ids back to optimizable atoms).
    """
    n = len(columns)
    poly_cache = {}

    def rec(e):
        if isinstance(e, Const):
            return _Const(e.value, n)
        if isinstance(e, OptRef):
            if e.atom not in columns:
                raise SymbolicError(f"{e.atom} is not an optimizable fact")
            return _Column(columns[e.atom], n)
        if isinstance(e, QueryRef):
            if e.atom not in query_polys:
                raise SymbolicError(f"no query equation compiled for {e.atom}")
            if e.atom not in poly_cache:
                poly = query_polys[e.atom]
                var_columns = {v: columns[a] for v, a in poly.atoms.items() if a in columns}
                poly_cache[e.atom] = CompiledPolynomial(poly, var_columns, n)
            return poly_cache[e.atom]
        if isinstance(e, Add):
            return _Sum(rec(e.left), rec(e.right), 1.0)
        if isinstance(e, Sub):
            return _Sum(rec(e.left), rec(e.right), -1.0)
        if isinstance(e, Mul):
            return _Product(rec(e.left), rec(e.right))
        if isinstance(e, Neg):
            return _Negated(rec(e.operand))
        raise SymbolicError(f"cannot compile {e!r}")

    return rec(expr)
