"""Grounding over the finite Herbrand universe and query compilation to BDDs."""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from .bdd import FALSE, FIXED, OPTIMIZABLE, TRUE, BddManager
from .errors import GroundingError, ResourceError
from .logic import Atom, Var, match
from .parser import OptFact

logger = logging.getLogger(__name__)

DEFAULT_MAX_GROUND_RULES = 10_000_000


@dataclass(frozen=True)
class FactVar:
    id: int
    atom: Atom
    kind: str
    prob: float | None = None
    lower: float | None = None
    upper: float | None = None

    @property
    def optimizable(self):
        return self.kind == OPTIMIZABLE


@dataclass
class GroundProgram:
    facts: dict = field(default_factory=dict)        # ground atom -> FactVar
    ground_rules: list = field(default_factory=list)  # (head, body tuple)
    constants: tuple = ()
    signatures: frozenset = frozenset()

    @property
    def variables(self):
        """FactVars indexed by id."""
        return sorted(self.facts.values(), key=lambda f: f.id)

    @property
    def heads(self):
        return {h for h, _ in self.ground_rules}

    def opt_vars(self):
        return [f for f in self.variables if f.optimizable]


def _instances(atom, constants):
    vs = sorted(atom.variables())
    if not vs:
        yield atom
        return
    for combo in itertools.product(constants, repeat=len(vs)):
        yield atom.substitute(dict(zip(vs, combo)))


class _AtomIndex:
    """Ground atoms by predicate, with per-argument lookup for joins."""

    def __init__(self):
        self.by_sig = defaultdict(set)
        self.by_arg = defaultdict(set)

    def add(self, atom):
        if atom in self.by_sig[atom.signature]:
            return False
        self.by_sig[atom.signature].add(atom)
        for i, a in enumerate(atom.args):
            self.by_arg[(atom.signature, i, a)].add(atom)
        return True

    def candidates(self, pattern, theta):
        best = None
        for i, a in enumerate(pattern.args):
            if isinstance(a, Var):
                a = theta.get(a)
                if a is None:
                    continue
            bucket = self.by_arg.get((pattern.signature, i, a), ())
            if best is None or len(bucket) < len(best):
                best = bucket
        return self.by_sig.get(pattern.signature, ()) if best is None else best


def _join(body, index, theta, delta_pos=None, delta=None):
    if not body:
        yield theta
        return
    first, rest = body[0], body[1:]
    src = delta if delta_pos == 0 else index
    for g in list(src.candidates(first, theta)):
        t2 = match(first, g, theta)
        if t2 is not None:
            yield from _join(rest, index, t2,
                             None if delta_pos is None else delta_pos - 1, delta)


def ground(program, extra_constants=(), max_ground_rules=DEFAULT_MAX_GROUND_RULES):
    """Instantiate `program` over its constants (plus `extra_constants`).

    Fact variables get dense ids in declaration order.  Rules are instantiated
    bottom-up over atoms that can possibly be true, so every ground body atom
    is a fact or the head of another ground rule.
    """
    constants = tuple(sorted(program.constants() | set(extra_constants)))
    gp = GroundProgram(constants=constants,
                       signatures=frozenset(program.derived_signatures()
                                            | program.fact_signatures()))
    index = _AtomIndex()
    for f in program.facts:
        for atom in _instances(f.atom, constants):
            if atom in gp.facts:
                raise GroundingError(f"fact {atom} declared twice")
            vid = len(gp.facts)
            if isinstance(f, OptFact):
                gp.facts[atom] = FactVar(vid, atom, OPTIMIZABLE, None, f.lower, f.upper)
            else:
                gp.facts[atom] = FactVar(vid, atom, FIXED, f.prob)
            index.add(atom)

    seen = set()

    def emit(head, body):
        key = (head, body)
        if key in seen:
            return False
        if len(seen) >= max_ground_rules:
            raise ResourceError(f"grounding exceeded {max_ground_rules} ground rules")
        seen.add(key)
        gp.ground_rules.append(key)
        return True

    for r in program.rules:
        if not r.body:
            for atom in _instances(r.head, constants):
                emit(atom, ())
                index.add(atom)
    body_rules = [r for r in program.rules if r.body]

    # first round: everything joins against the full index
    new = _AtomIndex()
    for r in body_rules:
        for theta in _join(r.body, index, {}):
            head = r.head.substitute(theta)
            if (emit(head, tuple(b.substitute(theta) for b in r.body))
                    and head not in index.by_sig[head.signature]):
                new.add(head)
    delta = new
    while any(delta.by_sig.values()):
        for sig, atoms in delta.by_sig.items():
            for a in atoms:
                index.add(a)
        new = _AtomIndex()
        for r in body_rules:
            for pos in range(len(r.body)):
                if r.body[pos].signature not in delta.by_sig:
                    continue
                for theta in _join(r.body, index, {}, pos, delta):
                    head = r.head.substitute(theta)
                    if (emit(head, tuple(b.substitute(theta) for b in r.body))
                            and head not in index.by_sig[head.signature]):
                        new.add(head)
        delta = new
    gp.ground_rules.sort()
    logger.debug("grounded %d facts, %d rules over %d constants",
                 len(gp.facts), len(gp.ground_rules), len(constants))
    return gp


def new_manager(gp, max_nodes=None):
    """BDD manager with one variable per ground fact, in fact-id order."""
    m = BddManager(max_nodes=max_nodes)
    for f in gp.variables:
        m.add_var(str(f.atom), f.kind, f.prob, f.lower, f.upper)
    return m


class QueryCompiler:
    """Least-fixpoint compilation of ground atoms to BDDs in one shared manager."""

    def __init__(self, gp, manager=None, deadline=None):
        self.gp = gp
        self.manager = manager if manager is not None else new_manager(gp)
        self.deadline = deadline
        self.formulas = {a: self.manager.mk_var(f.id) for a, f in gp.facts.items()}
        self._rules_by_head = defaultdict(list)
        for head, body in gp.ground_rules:
            self._rules_by_head[head].append(body)
        self._done = set(gp.facts)
        self.rounds = 0

    def _cone(self, q):
        cone, stack = set(), [q]
        while stack:
            a = stack.pop()
            if a in cone or a in self._done:
                continue
            cone.add(a)
            for body in self._rules_by_head.get(a, ()):
                stack.extend(body)
        return cone

    def compile(self, q):
        if q.signature not in self.gp.signatures:
            raise GroundingError(f"unknown predicate {q.pred}/{q.arity}")
        if q in self.formulas and q in self._done:
            return self.formulas[q]
        cone = self._cone(q)
        m = self.manager
        f = self.formulas
        for a in cone:
            f[a] = FALSE
        rules = [(h, body) for h in sorted(cone) for body in self._rules_by_head.get(h, ())]
        watchers = defaultdict(list)
        for i, (h, body) in enumerate(rules):
            for b in body:
                if b in cone:
                    watchers[b].append(i)
        pending = set(range(len(rules)))
        while pending:
            self.rounds += 1
            if self.deadline is not None:
                self.deadline.check("compile")
            changed = set()
            for i in sorted(pending):
                h, body = rules[i]
                conj = TRUE
                for b in body:
                    conj = m._and(conj, f[b])
                    if conj == FALSE:
                        break
                new = m._and(f[h] ^ 1, conj ^ 1) ^ 1
                if new != f[h]:
                    f[h] = new
                    changed.add(h)
            pending = {i for h in changed for i in watchers.get(h, ())}
        self._done |= cone
        return f[q]


def compile_query(gp, q, compiler=None):
    """BDD reference for the worlds in which ground atom `q` is derivable.

    Pass a `QueryCompiler` to share one manager across several queries; its
    ``manager`` attribute owns the returned reference.
    """
    if compiler is None:
        compiler = QueryCompiler(gp)
    return compiler.compile(q)
