"""Reader for probabilistic optimizable logic programs and problem statements.

Program syntax (ProbLog style, ``%`` starts a line comment)::

    0.9::edge(a,b).
    optimizable [0.3,0.8]::edge(b,c).
    optimizable::edge(b,d).           % range defaults to [0.001,0.999]
    path(X,X).
    path(X,Y) :- path(X,Z), edge(Z,Y).

A problem may be embedded in the program with directive comments::

    % polp: query=path(a,e) objective=edge(b,c)+edge(b,d) constraint=path(a,e)>0.6
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError, ResolutionError
from .expr import (COMPARATORS, Add, Bound, Const, Constraint, Mul, Neg,
                   OptRef, QueryRef, Sub)
from .logic import Atom, Var, unifiable

DEFAULT_OPT_RANGE = (0.001, 0.999)

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<op>::|:-|<=|>=|[<>()\[\],.+\-*/])
""", re.VERBOSE)

_DIRECTIVE_RE = re.compile(r"^\s*%\s*polp:(.*)$")
_DIRECTIVE_KEY_RE = re.compile(r"(?:^|\s)(query|objective|constraint|direction)=")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text, line_offset=0, column_offset=0):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line + line_offset, col + column_offset)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line + line_offset, col + column_offset))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    end_col = pos - line_start + 1
    tokens.append(Token("eof", "", line + line_offset, end_col + column_offset))
    return tokens


# ---------------------------------------------------------------------------
# program items
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbFact:
    atom: Atom
    prob: float

    def __str__(self):
        return f"{self.prob!r}::{self.atom}."


@dataclass(frozen=True)
class OptFact:
    atom: Atom
    lower: float = DEFAULT_OPT_RANGE[0]
    upper: float = DEFAULT_OPT_RANGE[1]

    def __str__(self):
        return f"optimizable [{self.lower!r},{self.upper!r}]::{self.atom}."


@dataclass(frozen=True)
class Rule:
    """Definite clause; an empty body makes it a certain (deterministic) fact."""

    head: Atom
    body: tuple = ()

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


@dataclass(frozen=True)
class Program:
    clauses: tuple = ()
    directives: tuple = ()
    source_spans: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def prob_facts(self):
        return [c for c in self.clauses if isinstance(c, ProbFact)]

    @property
    def opt_facts(self):
        return [c for c in self.clauses if isinstance(c, OptFact)]

    @property
    def rules(self):
        return [c for c in self.clauses if isinstance(c, Rule)]

    @property
    def facts(self):
        """Probabilistic and optimizable facts in declaration order."""
        return [c for c in self.clauses if not isinstance(c, Rule)]

    def derived_signatures(self):
        return {r.head.signature for r in self.rules}

    def fact_signatures(self):
        return {f.atom.signature for f in self.facts}

    def constants(self):
        out = set()
        for c in self.clauses:
            atoms = (c.head,) + c.body if isinstance(c, Rule) else (c.atom,)
            for a in atoms:
                out.update(x for x in a.args if not isinstance(x, Var))
        return out


def format_program(program):
    lines = [str(c) for c in program.clauses]
    lines.extend(f"% polp: {d}" for d in program.directives)
    return "\n".join(lines) + ("\n" if lines else "")


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def peek(self, k=1):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            self.fail(f"expected {text!r}")
        return t

    def fail(self, msg):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.column)


def _parse_atom(cur, allow_vars=True):
    t = cur.tok
    if t.kind != "name":
        cur.fail("expected an atom")
    cur.advance()
    args = []
    if cur.accept("("):
        while True:
            a = cur.tok
            if a.kind in ("name", "number"):
                args.append(a.text)
            elif a.kind == "var":
                if not allow_vars:
                    raise ParseError(f"variable {a.text} not allowed here", a.line, a.column)
                args.append(Var(a.text))
            else:
                cur.fail("expected a constant or variable")
            cur.advance()
            if cur.accept(")"):
                break
            cur.expect(",")
    return Atom(t.text, tuple(args))


def _parse_number(cur):
    t = cur.tok
    if t.kind != "number":
        cur.fail("expected a number")
    cur.advance()
    return float(t.text)


def _parse_clause(cur):
    t = cur.tok
    if t.kind == "name" and t.text == "optimizable" and cur.peek().text in ("[", "::"):
        cur.advance()
        lower, upper = DEFAULT_OPT_RANGE
        if cur.accept("["):
            lower = _parse_number(cur)
            cur.expect(",")
            upper = _parse_number(cur)
            cur.expect("]")
        cur.expect("::")
        atom = _parse_atom(cur)
        cur.expect(".")
        if not (0.0 < lower < upper < 1.0):
            raise ParseError(f"optimizable bounds must satisfy 0 < lower < upper < 1, "
                             f"got [{lower!r},{upper!r}]", t.line, t.column)
        if not atom.is_ground():
            raise ParseError(f"optimizable fact {atom} must be ground", t.line, t.column)
        return OptFact(atom, lower, upper)
    if t.kind == "number":
        prob = _parse_number(cur)
        cur.expect("::")
        atom = _parse_atom(cur)
        cur.expect(".")
        if not (0.0 < prob <= 1.0):
            raise ParseError(f"probability out of range (0,1]: {t.text}", t.line, t.column)
        return ProbFact(atom, prob)
    head = _parse_atom(cur)
    body = []
    if cur.accept(":-"):
        body.append(_parse_atom(cur))
        while cur.accept(","):
            body.append(_parse_atom(cur))
    cur.expect(".")
    return Rule(head, tuple(body))


def _validate(clauses, spans):
    def fail(item, msg):
        line, col = spans.get(item, (None, None))
        raise ParseError(msg, line, col)

    facts = [c for c in clauses if not isinstance(c, Rule)]
    rules = [c for c in clauses if isinstance(c, Rule)]

    by_sig = {}
    for f in facts:
        for prev in by_sig.get(f.atom.signature, ()):
            if unifiable(prev.atom, f.atom):
                fail(f, f"duplicate fact declaration: {f.atom}")
        by_sig.setdefault(f.atom.signature, []).append(f)

    defined = {f.atom.signature for f in facts} | {r.head.signature for r in rules}
    for r in rules:
        for f in by_sig.get(r.head.signature, ()):
            if unifiable(f.atom, r.head):
                fail(r, f"rule head {r.head} clashes with fact {f.atom}")
        for b in r.body:
            if b.signature not in defined:
                fail(r, f"undefined predicate {b.pred}/{b.arity} in body of {r.head}")
        if r.body:
            body_vars = set().union(*(b.variables() for b in r.body))
            missing = r.head.variables() - body_vars
            if missing:
                names = ", ".join(sorted(v.name for v in missing))
                fail(r, f"rule for {r.head} is not range-restricted ({names} not in body)")


def parse_program(text):
    """Parse program text into a validated `Program`; raises `ParseError`."""
    directives = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = _DIRECTIVE_RE.match(raw)
        if m:
            directives.append(m.group(1).strip())
    cur = _Cursor(tokenize(text))
    clauses, spans = [], {}
    while cur.tok.kind != "eof":
        start = cur.tok
        clause = _parse_clause(cur)
        if clause in spans:
            if not isinstance(clause, Rule):
                raise ParseError(f"duplicate fact declaration: {clause.atom}",
                                 start.line, start.column)
            continue
        spans[clause] = (start.line, start.column)
        clauses.append(clause)
    _validate(clauses, spans)
    return Program(tuple(clauses), tuple(directives), spans)


# ---------------------------------------------------------------------------
# problem statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "slsqp"
    tol: float = 1e-5
    max_iters: int = 1000
    strict_eps: float = 0.0
    multistart: int = 1
    seed: int = 0


@dataclass(frozen=True)
class ProblemSpec:
    query: Atom
    direction: str
    objective: object
    constraints: tuple = ()
    bounds: tuple = ()
    solver: SolverConfig = SolverConfig()

    def query_atoms(self):
        """Main query first, then atoms referenced by constraints, without repeats."""
        seen = [self.query]
        for c in self.constraints:
            for a in sorted(c.query_atoms()):
                if a not in seen:
                    seen.append(a)
        return seen

    def residuals(self):
        return [c.residual(self.solver.strict_eps) for c in self.constraints]


class _Resolver:
    def __init__(self, program):
        self.opt = {f.atom for f in program.opt_facts}
        self.opt_sigs = {a.signature for a in self.opt}
        self.derived = program.derived_signatures()
        self.prob = program.prob_facts

    def __call__(self, atom, tok):
        if not atom.is_ground():
            raise ResolutionError(f"non-ground atom {atom} in expression", tok.line, tok.column)
        if atom in self.opt:
            return OptRef(atom)
        if atom.signature in self.derived:
            return QueryRef(atom)
        if any(unifiable(f.atom, atom) for f in self.prob):
            return QueryRef(atom)
        if atom.signature in self.opt_sigs:
            raise ResolutionError(f"unresolved optimizable reference {atom}", tok.line, tok.column)
        raise ResolutionError(f"unresolved atom {atom}", tok.line, tok.column)


def _parse_sum(cur, resolve):
    node = _parse_product(cur, resolve)
    while True:
        if cur.accept("+"):
            node = Add(node, _parse_product(cur, resolve))
        elif cur.accept("-"):
            node = Sub(node, _parse_product(cur, resolve))
        else:
            return node


def _parse_product(cur, resolve):
    node = _parse_factor(cur, resolve)
    while True:
        if cur.accept("*"):
            node = Mul(node, _parse_factor(cur, resolve))
        elif cur.tok.text == "/":
            cur.fail("division is not supported")
        else:
            return node


def _parse_factor(cur, resolve):
    t = cur.tok
    if cur.accept("-"):
        return Neg(_parse_factor(cur, resolve))
    if cur.accept("("):
        node = _parse_sum(cur, resolve)
        cur.expect(")")
        return node
    if t.kind == "number":
        return Const(_parse_number(cur))
    if t.kind == "name":
        return resolve(_parse_atom(cur, allow_vars=True), t)
    if t.kind == "op" and t.text == "/":
        cur.fail("division is not supported")
    cur.fail("malformed expression")


def parse_expr(text, program):
    cur = _Cursor(tokenize(text))
    if cur.tok.kind == "eof":
        cur.fail("empty expression")
    node = _parse_sum(cur, _Resolver(program))
    if cur.tok.kind != "eof":
        cur.fail("malformed expression")
    return node


def parse_objective(text, program):
    """Objective expression; a one-element list ``[expr]`` is accepted as sugar."""
    cur = _Cursor(tokenize(text))
    resolve = _Resolver(program)
    bracketed = cur.accept("[") is not None
    node = _parse_sum(cur, resolve)
    if bracketed:
        if cur.tok.text == ",":
            cur.fail("exactly one objective expression is supported")
        cur.expect("]")
    if cur.tok.kind != "eof":
        cur.fail("malformed expression")
    if node.query_atoms():
        names = ", ".join(sorted(str(a) for a in node.query_atoms()))
        raise ResolutionError(f"objective may reference only optimizable facts, got {names}")
    return node


def parse_constraint(text, program):
    cur = _Cursor(tokenize(text))
    resolve = _Resolver(program)
    left = _parse_sum(cur, resolve)
    t = cur.tok
    if not (t.kind == "op" and t.text in COMPARATORS):
        cur.fail("expected a comparison operator")
    cur.advance()
    right = _parse_sum(cur, resolve)
    if cur.tok.kind != "eof":
        cur.fail("malformed constraint")
    return Constraint(left, t.text, right)


def parse_query(text, program):
    cur = _Cursor(tokenize(text))
    t = cur.tok
    atom = _parse_atom(cur)
    if cur.tok.kind != "eof":
        cur.fail("malformed query")
    if not atom.is_ground():
        raise ParseError(f"query {atom} is not ground", t.line, t.column)
    known = program.derived_signatures() | program.fact_signatures()
    if atom.signature not in known:
        raise ResolutionError(f"unresolved atom {atom}: unknown predicate "
                              f"{atom.pred}/{atom.arity}", t.line, t.column)
    return atom


def implicit_bounds(program):
    out = []
    for f in program.opt_facts:
        out.append(Bound(f.atom, "lower", f.lower))
        out.append(Bound(f.atom, "upper", f.upper))
    return tuple(out)


def parse_problem(program, query_text, objective_text="0", constraints_text=(),
                  config=None, direction="minimize"):
    """Build a `ProblemSpec`, resolving every atom against `program`."""
    if direction not in ("minimize", "maximize"):
        raise ParseError(f"direction must be minimize or maximize, got {direction!r}")
    return ProblemSpec(
        query=parse_query(query_text, program),
        direction=direction,
        objective=parse_objective(objective_text, program),
        constraints=tuple(parse_constraint(c, program) for c in constraints_text),
        bounds=implicit_bounds(program),
        solver=config or SolverConfig(),
    )


def parse_directives(directives):
    """Collect ``key=value`` pairs from ``% polp:`` lines into parse_problem kwargs."""
    out = {"constraints_text": []}
    for d in directives:
        keys = list(_DIRECTIVE_KEY_RE.finditer(d))
        if not keys or d[:keys[0].start()].strip():
            raise ParseError(f"malformed polp directive: {d!r}")
        for k, nxt in zip(keys, keys[1:] + [None]):
            value = d[k.end():nxt.start() if nxt else len(d)].strip()
            name = k.group(1)
            if name == "constraint":
                out["constraints_text"].append(value)
            elif name == "query":
                out["query_text"] = value
            elif name == "objective":
                out["objective_text"] = value
            else:
                out["direction"] = {"min": "minimize", "max": "maximize"}.get(value, value)
    return out


def problem_from_program(program, config=None):
    kwargs = parse_directives(program.directives)
    if "query_text" not in kwargs:
        raise ParseError("program has no '% polp: query=...' directive")
    return parse_problem(program, config=config, **kwargs)
