"""Shared fixtures: reference programs and a seeded random program generator."""

import random

from polp.grounder import QueryCompiler, ground
from polp.logic import Atom
from polp.parser import parse_problem, parse_program

SIGNAL = """\
0.9::edge(a,b).
optimizable [0.3,0.8]::edge(b,c).
optimizable [0.3,0.8]::edge(b,d).
0.3::edge(c,e).
0.8::edge(d,e).

path(X,X).
path(X,Y) :- path(X,Z), edge(Z,Y).
"""

SIGNAL_QUERY = "path(a,e)"
SIGNAL_OBJECTIVE = "[edge(b,c) + edge(b,d)]"
SIGNAL_CONSTRAINTS = ["path(a,e) > 0.6", "edge(b,c) - edge(b,d) < 0.1",
                      "edge(b,d) - edge(b,c) < 0.1"]

ON_TIME = """\
0.5::no_traffic.
0.9::no_accidents.
on_time :- no_traffic, no_accidents.
"""


def atom(text):
    """Ground atom from ``name(a,b)`` text."""
    if "(" not in text:
        return Atom(text, ())
    name, rest = text.split("(", 1)
    return Atom(name, tuple(rest.rstrip(")").split(",")))


def signal_problem(constraints=None, objective=SIGNAL_OBJECTIVE, **kw):
    program = parse_program(SIGNAL)
    cons = SIGNAL_CONSTRAINTS if constraints is None else constraints
    return program, parse_problem(program, SIGNAL_QUERY, objective, cons, **kw)


def compile_text(text, query):
    program = parse_program(text)
    q = atom(query)
    gp = ground(program, set(q.args))
    comp = QueryCompiler(gp)
    return gp, comp.manager, comp.compile(q), q


_CONSTANTS = ("a", "b", "c")
_VARS = ("X", "Y", "Z")


def _arg(rng, allow_vars=True):
    if allow_vars and rng.random() < 0.75:
        return rng.choice(_VARS)
    return rng.choice(_CONSTANTS)


def random_program(seed, max_facts=12, max_rules=10):
    """Program text plus a ground query over a random, possibly recursive, rule set.

    Fact predicates are ``e/2`` and ``f/1``, derived predicates ``p/1``,
    ``r/2`` and ``s/0``.  Every rule is range-restricted and every body
    predicate is defined, so the result always parses.
    """
    rng = random.Random(seed)
    ground_facts = sorted({("e", (rng.choice(_CONSTANTS), rng.choice(_CONSTANTS)))
                           for _ in range(14)} |
                          {("f", (c,)) for c in _CONSTANTS if rng.random() < 0.6})
    rng.shuffle(ground_facts)
    ground_facts = ground_facts[:rng.randint(3, max_facts)]
    lines = []
    for i, (pred, args) in enumerate(ground_facts):
        head = f"{pred}({','.join(args)})"
        if rng.random() < 0.35:
            lo = round(rng.uniform(0.05, 0.4), 3)
            hi = round(rng.uniform(0.6, 0.95), 3)
            lines.append(f"optimizable [{lo},{hi}]::{head}.")
        else:
            lines.append(f"{round(rng.uniform(0.05, 1.0), 3)}::{head}.")
    fact_preds = sorted({(p, len(a)) for p, a in ground_facts})
    derived = rng.sample([("p", 1), ("r", 2), ("s", 0)], rng.randint(1, 3))
    n_rules = rng.randint(len(derived), max_rules)
    defined = []
    for k in range(n_rules):
        head_pred = derived[k] if k < len(derived) else rng.choice(derived)
        pool = fact_preds + defined
        body = []
        for _ in range(rng.randint(1, 3)):
            pred, arity = rng.choice(pool)
            body.append((pred, tuple(_arg(rng) for _ in range(arity))))
        body_vars = sorted({a for _, args in body for a in args if a in _VARS})
        head_args = tuple(rng.choice(body_vars) if body_vars and rng.random() < 0.8
                          else rng.choice(_CONSTANTS) for _ in range(head_pred[1]))
        text = ", ".join(f"{p}({','.join(a)})" if a else p for p, a in body)
        head = f"{head_pred[0]}({','.join(head_args)})" if head_args else head_pred[0]
        lines.append(f"{head} :- {text}.")
        if head_pred not in defined:
            defined.append(head_pred)
    qpred, qarity = rng.choice(defined)
    query = (f"{qpred}({','.join(rng.choice(_CONSTANTS) for _ in range(qarity))})"
             if qarity else qpred)
    return "\n".join(lines) + "\n", query


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(number, title, ok, detail=""):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
    if detail:
        line += f": {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_instance(seed):
    """Ground program, manager, query root and query for generator seed `seed`.

    The query is drawn among atoms that head at least one ground rule, so
    most instances are not constant.
    """
    text, query = random_program(seed)
    program = parse_program(text)
    gp = ground(program)
    heads = sorted(gp.heads)
    q = random.Random(seed).choice(heads) if heads else atom(query)
    comp = QueryCompiler(gp)
    return text, gp, comp.manager, comp.compile(q), q


def random_formula_manager(seed, nvars, ops=24):
    """Manager over `nvars` variables of random kind and a random formula root."""
    from polp.bdd import FIXED, OPTIMIZABLE, BddManager
    rng = random.Random(seed)
    m = BddManager()
    for i in range(nvars):
        if rng.random() < 0.4:
            m.add_var(f"x{i}", OPTIMIZABLE, lower=0.1, upper=0.9)
        else:
            m.add_var(f"x{i}", FIXED, prob=round(rng.uniform(0.05, 0.95), 3))
    pool = [m.mk_var(i) for i in range(nvars)]
    for _ in range(ops):
        a, b = rng.choice(pool), rng.choice(pool)
        if rng.random() < 0.3:
            a = m.negate(a)
        pool.append(m.apply_and(a, b) if rng.random() < 0.5 else m.apply_or(a, b))
    return m, pool[-1]
