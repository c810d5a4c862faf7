"""Terms and atoms of the function-free logic language."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Atom:
    """``pred(arg, ...)``; constants are plain strings, variables are `Var`."""

    pred: str
    args: tuple = ()

    @property
    def arity(self):
        return len(self.args)

    @property
    def signature(self):
        return (self.pred, len(self.args))

    def is_ground(self):
        return not any(isinstance(a, Var) for a in self.args)

    def variables(self):
        return {a for a in self.args if isinstance(a, Var)}

    def substitute(self, theta):
        if not theta:
            return self
        return Atom(self.pred, tuple(theta.get(a, a) if isinstance(a, Var) else a
                                     for a in self.args))

    def __str__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(str(a) for a in self.args)})"


def match(pattern, ground, theta=None):
    """One-way match of `pattern` against ground atom; returns extended bindings or None."""
    if pattern.pred != ground.pred or len(pattern.args) != len(ground.args):
        return None
    theta = dict(theta) if theta else {}
    for p, g in zip(pattern.args, ground.args):
        if isinstance(p, Var):
            bound = theta.get(p)
            if bound is None:
                theta[p] = g
            elif bound != g:
                return None
        elif p != g:
            return None
    return theta


def unifiable(a, b):
    """True if the two atoms have a common instance (variables renamed apart)."""
    if a.signature != b.signature:
        return False
    parent = {}

    def find(t):
        while t in parent:
            t = parent[t]
        return t

    for x, y in zip(a.args, b.args):
        x = find(("L", x) if isinstance(x, Var) else x)
        y = find(("R", y) if isinstance(y, Var) else y)
        if x == y:
            continue
        if isinstance(x, tuple):
            parent[x] = y
        elif isinstance(y, tuple):
            parent[y] = x
        else:
            return False
    return True
