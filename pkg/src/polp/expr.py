"""Objective and constraint expression trees.

Leaves are numeric constants, references to optimizable facts and references
to (ground) query atoms.  Only ``+``, ``-`` and ``*`` are allowed so that every
expression stays a polynomial in the optimizable probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

from .logic import Atom


class Expr:
    def opt_atoms(self):
        return set()

    def query_atoms(self):
        return set()

    def __add__(self, other):
        return Add(self, _wrap(other))

    def __sub__(self, other):
        return Sub(self, _wrap(other))

    def __mul__(self, other):
        return Mul(self, _wrap(other))

    def __neg__(self):
        return Neg(self)


def _wrap(x):
    return x if isinstance(x, Expr) else Const(float(x))


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class OptRef(Expr):
    atom: Atom

    def opt_atoms(self):
        return {self.atom}

    def __str__(self):
        return str(self.atom)


@dataclass(frozen=True)
class QueryRef(Expr):
    atom: Atom

    def query_atoms(self):
        return {self.atom}

    def __str__(self):
        return str(self.atom)


@dataclass(frozen=True)
class _Binary(Expr):
    left: Expr
    right: Expr

    symbol = "?"

    def opt_atoms(self):
        return self.left.opt_atoms() | self.right.opt_atoms()

    def query_atoms(self):
        return self.left.query_atoms() | self.right.query_atoms()

    def __str__(self):
        return f"({self.left} {self.symbol} {self.right})"


class Add(_Binary):
    symbol = "+"


class Sub(_Binary):
    symbol = "-"


class Mul(_Binary):
    symbol = "*"


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def opt_atoms(self):
        return self.operand.opt_atoms()

    def query_atoms(self):
        return self.operand.query_atoms()

    def __str__(self):
        return f"-{self.operand}"


COMPARATORS = ("<=", ">=", "<", ">")


@dataclass(frozen=True)
class Constraint:
    """``left op right`` with op one of ``<``, ``<=``, ``>``, ``>=``."""

    left: Expr
    op: str
    right: Expr

    def residual(self, strict_eps=0.0):
        """Expression ``g`` such that the constraint holds iff ``g <= 0``.

        Strict comparisons are relaxed to non-strict ones shifted by `strict_eps`.
        """
        if self.op in ("<", "<="):
            g = Sub(self.left, self.right)
        elif self.op in (">", ">="):
            g = Sub(self.right, self.left)
        else:
            raise ValueError(f"unknown comparator {self.op!r}")
        if self.op in ("<", ">") and strict_eps:
            g = Add(g, Const(float(strict_eps)))
        return g

    def opt_atoms(self):
        return self.left.opt_atoms() | self.right.opt_atoms()

    def query_atoms(self):
        return self.left.query_atoms() | self.right.query_atoms()

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Bound:
    """Implicit box constraint ``lower <= atom`` or ``atom <= upper``."""

    atom: Atom
    side: str  # "lower" | "upper"
    value: float

    def __str__(self):
        op = ">=" if self.side == "lower" else "<="
        return f"{self.atom} {op} {self.value!r}"
