"""Reduced ordered BDDs with complemented 0-edges.

A node reference is a plain ``int``: ``index << 1 | complement``.  Node 0 is
the single terminal (TRUE), so ``TRUE == 0`` and ``FALSE == 1``.  The 1-edge
of every internal node is stored uncomplemented; only 0-edges and external
references may carry the complement bit.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from .errors import BddError, ResourceError

TRUE = 0
FALSE = 1

FIXED = "fixed"
OPTIMIZABLE = "optimizable"


def negate(ref):
    return ref ^ 1


def is_complemented(ref):
    return bool(ref & 1)


def regular(ref):
    return ref & ~1


@dataclass
class VarMeta:
    name: str
    kind: str = FIXED
    prob: float | None = None
    lower: float | None = None
    upper: float | None = None

    @property
    def optimizable(self):
        return self.kind == OPTIMIZABLE


@dataclass(frozen=True)
class PathTerm:
    """``coeff * prod(x if sign else 1 - x)`` over the literals' optimizable variables."""

    coeff: float
    literals: tuple = ()

    def value(self, values):
        out = self.coeff
        for v, sign in self.literals:
            out *= values[v] if sign else 1.0 - values[v]
        return out


class BddManager:
    """Shared node arena with a per-variable unique table and an AND cache."""

    def __init__(self, max_nodes=None):
        self.max_nodes = max_nodes
        self.var_meta = []
        self.var_order = []      # level -> var
        self._level = []         # var -> level
        self._var = [-1]         # node -> var (-1 for the terminal)
        self._hi = [TRUE]
        self._lo = [TRUE]
        self._unique = []        # var -> {(hi, lo): node}
        self._and_cache = {}
        self.stats = {"swaps": 0, "path_expansions": 0}

    # -- variables -------------------------------------------------------
    def add_var(self, name, kind=FIXED, prob=None, lower=None, upper=None):
        if kind == FIXED and (prob is None or not 0.0 <= prob <= 1.0):
            raise BddError(f"fixed variable {name} needs a probability in [0,1]")
        if kind not in (FIXED, OPTIMIZABLE):
            raise BddError(f"unknown variable kind {kind!r}")
        v = len(self.var_meta)
        self.var_meta.append(VarMeta(name, kind, prob, lower, upper))
        self._level.append(len(self.var_order))
        self.var_order.append(v)
        self._unique.append({})
        needed = 4 * len(self.var_meta) + 1000
        if sys.getrecursionlimit() < needed:
            sys.setrecursionlimit(needed)
        return v

    @property
    def num_vars(self):
        return len(self.var_meta)

    def level(self, v):
        return self._level[v]

    def var_of(self, ref):
        """Variable labelling the node of `ref`; -1 for the terminal."""
        return self._var[ref >> 1]

    def children(self, ref):
        """(then, else) of the function denoted by `ref`, complement pushed down."""
        n, c = ref >> 1, ref & 1
        if n == 0:
            raise BddError("the terminal has no children")
        return self._hi[n] ^ c, self._lo[n] ^ c

    def _check(self, ref):
        if not isinstance(ref, int) or ref < 0 or (ref >> 1) >= len(self._var):
            raise BddError(f"{ref!r} is not a node of this manager")

    # -- construction ----------------------------------------------------
    def _mk(self, v, hi, lo):
        if hi == lo:
            return hi
        if hi & 1:
            return self._mk(v, hi ^ 1, lo ^ 1) ^ 1
        table = self._unique[v]
        n = table.get((hi, lo))
        if n is None:
            n = len(self._var)
            if self.max_nodes is not None and n >= self.max_nodes:
                raise ResourceError(f"BDD arena exhausted ({self.max_nodes} nodes)")
            self._var.append(v)
            self._hi.append(hi)
            self._lo.append(lo)
            table[(hi, lo)] = n
        return n << 1

    def mk_var(self, v):
        if not isinstance(v, int) or not 0 <= v < len(self.var_meta):
            raise BddError(f"unknown variable {v!r}")
        return self._mk(v, TRUE, FALSE)

    def _ref_level(self, ref):
        v = self._var[ref >> 1]
        return len(self.var_order) if v < 0 else self._level[v]

    def _cofactors(self, ref, v):
        n = ref >> 1
        if self._var[n] != v:
            return ref, ref
        c = ref & 1
        return self._hi[n] ^ c, self._lo[n] ^ c

    def apply_and(self, a, b):
        self._check(a)
        self._check(b)
        return self._and(a, b)

    def _and(self, a, b):
        if a == FALSE or b == FALSE or a == b ^ 1:
            return FALSE
        if a == TRUE or a == b:
            return b
        if b == TRUE:
            return a
        if a > b:
            a, b = b, a
        r = self._and_cache.get((a, b))
        if r is not None:
            return r
        v = self.var_order[min(self._ref_level(a), self._ref_level(b))]
        a1, a0 = self._cofactors(a, v)
        b1, b0 = self._cofactors(b, v)
        r = self._mk(v, self._and(a1, b1), self._and(a0, b0))
        self._and_cache[(a, b)] = r
        return r

    def apply_or(self, a, b):
        self._check(a)
        self._check(b)
        return self._and(a ^ 1, b ^ 1) ^ 1

    def negate(self, a):
        self._check(a)
        return a ^ 1

    # -- inspection ------------------------------------------------------
    def evaluate(self, ref, values):
        """Truth value of `ref` under `values` (indexable by variable id)."""
        c, n = ref & 1, ref >> 1
        while n:
            e = self._hi[n] if values[self._var[n]] else self._lo[n]
            c ^= e & 1
            n = e >> 1
        return not c

    def reachable(self, roots):
        """Node indices reachable from `roots` (terminal included)."""
        seen = set()
        stack = [r >> 1 for r in roots]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if n:
                stack.append(self._hi[n] >> 1)
                stack.append(self._lo[n] >> 1)
        return seen

    def node_count(self, roots):
        return len(self.reachable(roots))

    def support(self, ref):
        return {self._var[n] for n in self.reachable([ref]) if n}

    def check_invariants(self, roots):
        """Raise `BddError` if reachable nodes break reduced/ordered/canonical form."""
        seen = {}
        for n in self.reachable(roots):
            if not n:
                continue
            v, hi, lo = self._var[n], self._hi[n], self._lo[n]
            if hi & 1:
                raise BddError(f"node {n} has a complemented 1-edge")
            if hi == lo:
                raise BddError(f"node {n} is redundant")
            if (v, hi, lo) in seen:
                raise BddError(f"nodes {seen[(v, hi, lo)]} and {n} are duplicates")
            seen[(v, hi, lo)] = n
            for child in (hi, lo):
                if self._ref_level(child) <= self._level[v]:
                    raise BddError(f"node {n} violates the variable order")

    # -- reordering ------------------------------------------------------
    def swap_adjacent(self, level):
        """Exchange the variables at `level` and `level + 1` in place.

        Only nodes of the upper variable that depend on the lower one are
        rewritten; every existing reference keeps denoting the same function.
        """
        if not 0 <= level < len(self.var_order) - 1:
            raise BddError(f"cannot swap level {level}")
        x, y = self.var_order[level], self.var_order[level + 1]
        ux, uy = self._unique[x], self._unique[y]
        var = self._var
        movers = [(key, n) for key, n in ux.items()
                  if var[key[0] >> 1] == y or var[key[1] >> 1] == y]
        for key, _ in movers:
            del ux[key]
        self.var_order[level], self.var_order[level + 1] = y, x
        self._level[x], self._level[y] = level + 1, level
        for (hi, lo), n in movers:
            f11, f10 = self._cofactors(hi, y)
            f01, f00 = self._cofactors(lo, y)
            new_hi = self._mk(x, f11, f01)
            new_lo = self._mk(x, f10, f00)
            assert not new_hi & 1 and (new_hi, new_lo) not in uy
            var[n] = y
            self._hi[n] = new_hi
            self._lo[n] = new_lo
            uy[(new_hi, new_lo)] = n
        self._and_cache.clear()
        self.stats["swaps"] += 1

    def reorder_optimizable_first(self, root=None):
        """Bubble optimizable variables above fixed ones with adjacent swaps.

        The partition is stable: each block keeps its relative order.  Returns
        `root` unchanged (references stay valid across swaps).
        """
        order = self.var_order
        meta = self.var_meta
        changed = True
        while changed:
            changed = False
            for level in range(len(order) - 1):
                if not meta[order[level]].optimizable and meta[order[level + 1]].optimizable:
                    self.swap_adjacent(level)
                    changed = True
        return root

    def optimizable_first(self):
        kinds = [self.var_meta[v].optimizable for v in self.var_order]
        return kinds == sorted(kinds, reverse=True)

    # -- probability -----------------------------------------------------
    def prob(self, ref, overrides=None, table=None):
        """Probability that `ref` is true with independent variables.

        `overrides` maps variable ids to probabilities and may cover
        optimizable variables; any other optimizable variable reached is an
        error.  `table` is the per-node memo and may be shared between calls.
        """
        self._check(ref)
        if table is None:
            table = {}
        p = self._prob_node(ref >> 1, overrides or {}, table)
        return 1.0 - p if ref & 1 else p

    def _var_prob(self, v, overrides):
        p = overrides.get(v)
        if p is not None:
            return p
        meta = self.var_meta[v]
        if meta.optimizable:
            raise BddError(f"optimizable variable {meta.name} reached while computing a "
                           "fixed probability")
        return meta.prob

    def _prob_node(self, n, overrides, table):
        if n == 0:
            return 1.0
        res = table.get(n)
        if res is not None:
            return res
        lo = self._lo[n]
        p0 = self._prob_node(lo >> 1, overrides, table)
        if lo & 1:
            p0 = 1.0 - p0
        p1 = self._prob_node(self._hi[n] >> 1, overrides, table)
        pi = self._var_prob(self._var[n], overrides)
        res = p1 * pi + p0 * (1.0 - pi)
        table[n] = res
        return res

    def paths_prob(self, root):
        """Paths through the optimizable block of `root` with the probability of their tails.

        The manager is first reordered so optimizable variables come first.
        Each `PathTerm` carries the probability of the fixed sub-diagram it
        ends in; zero-probability paths are dropped.  Summing the terms as
        polynomials in the optimizable probabilities gives P(root).
        """
        self._check(root)
        self.reorder_optimizable_first()
        table_paths = {}
        table_prob = {}
        meta = self.var_meta

        def rec(ref, comp):
            comp ^= ref & 1
            n = ref >> 1
            v = self._var[n]
            if v < 0 or not meta[v].optimizable:
                p = self._prob_node(n, {}, table_prob)
                return [(1.0 - p if comp else p, ())]
            key = (n, comp)
            cached = table_paths.get(key)
            if cached is not None:
                return cached
            self.stats["path_expansions"] += 1
            res = []
            for coeff, lits in rec(self._lo[n], comp):
                if coeff > 0:
                    res.append((coeff, lits + ((v, 0),)))
            for coeff, lits in rec(self._hi[n], comp):
                if coeff > 0:
                    res.append((coeff, lits + ((v, 1),)))
            table_paths[key] = res
            return res

        return [PathTerm(c, lits) for c, lits in rec(root, 0) if c > 0]

    # -- export ----------------------------------------------------------
    def to_dot(self, roots, names=None):
        """Graphviz text: solid 1-edges, dashed 0-edges, dotted complemented 0-edges."""
        if isinstance(roots, int):
            roots = {"root": roots}
        elif not isinstance(roots, dict):
            roots = {f"root{i}": r for i, r in enumerate(roots)}
        lines = ["digraph bdd {"]
        reach = sorted(self.reachable(roots.values()),
                       key=lambda n: (self._ref_level(n << 1), n))
        for n in reach:
            if n == 0:
                lines.append('  n0 [label="1", shape=box];')
            else:
                v = self._var[n]
                label = names[v] if names else self.var_meta[v].name
                lines.append(f'  n{n} [label="{label}"];')
        for n in reach:
            if n:
                lines.append(f"  n{n} -> n{self._hi[n] >> 1} [style=solid];")
                lo = self._lo[n]
                style = "dotted" if lo & 1 else "dashed"
                lines.append(f"  n{n} -> n{lo >> 1} [style={style}];")
        for name, r in roots.items():
            lines.append(f'  "{name}" [shape=box];')
            style = "dotted" if r & 1 else "solid"
            lines.append(f'  "{name}" -> n{r >> 1} [style={style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# Functional aliases matching the operation names used across the package.

def mk_var(m, v):
    return m.mk_var(v)


def apply_and(m, a, b):
    return m.apply_and(a, b)


def apply_or(m, a, b):
    return m.apply_or(a, b)


def prob(m, node, overrides=None):
    return m.prob(node, overrides)


def reorder_optimizable_first(m, root=None):
    return m.reorder_optimizable_first(root)


def paths_prob(m, root):
    return m.paths_prob(root)
