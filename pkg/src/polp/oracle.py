"""Brute-force reference computations used to check the fast paths.

Nothing here touches the BDD or polynomial code: query probabilities come
from enumerating every world and running a plain Datalog fixpoint in it, and
optimization optima from exhaustive grid evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleError

MAX_WORLD_VARS = 20
MAX_GRID_VARS = 3


def least_model(true_facts, ground_rules):
    """Atoms derivable from `true_facts` with definite `ground_rules`."""
    model = set(true_facts)
    changed = True
    while changed:
        changed = False
        for head, body in ground_rules:
            if head not in model and all(b in model for b in body):
                model.add(head)
                changed = True
    return model


def _fact_list(gp):
    facts = gp.variables
    if len(facts) > MAX_WORLD_VARS:
        raise OracleError(f"{len(facts)} fact variables exceed the enumeration cap "
                          f"of {MAX_WORLD_VARS}")
    return facts


def satisfying_worlds(gp, q):
    """Boolean vector over all 2**n worlds (bit i of the index = fact id i is true)."""
    facts = _fact_list(gp)
    n = len(facts)
    out = np.zeros(2 ** n, dtype=bool)
    for w in range(2 ** n):
        true = [f.atom for f in facts if (w >> f.id) & 1]
        out[w] = q in least_model(true, gp.ground_rules)
    return out


def _fact_probs(gp, probs):
    probs = probs or {}
    out = []
    for f in _fact_list(gp):
        p = probs.get(f.id, probs.get(f.atom, probs.get(str(f.atom))))
        if p is None:
            if f.optimizable:
                raise OracleError(f"no probability given for optimizable fact {f.atom}")
            p = f.prob
        out.append(float(p))
    return out


def world_probabilities(gp, probs=None):
    """P(w) for every world, indexed like `satisfying_worlds`."""
    ps = _fact_probs(gp, probs)
    weights = np.ones(1)
    # world index bit i <-> fact i; build with fact 0 varying fastest
    for p in ps:
        weights = np.concatenate([weights * (1.0 - p), weights * p])
    return weights


def enumerate_worlds(gp, probs, q, worlds=None):
    """Exact P(q) as the sum of the probabilities of the worlds where `q` holds.

    `probs` maps fact ids, atoms or atom strings to probabilities and must
    cover every optimizable fact.  A precomputed `worlds` vector from
    `satisfying_worlds` can be passed to amortize the enumeration.
    """
    if worlds is None:
        worlds = satisfying_worlds(gp, q)
    w = world_probabilities(gp, probs)
    return float(w[worlds].sum())


def truth_table(manager, ref, nvars=None):
    """Evaluate a BDD on every assignment; returns a boolean vector like `satisfying_worlds`."""
    n = manager.num_vars if nvars is None else nvars
    out = np.zeros(2 ** n, dtype=bool)
    for w in range(2 ** n):
        out[w] = manager.evaluate(ref, [(w >> i) & 1 for i in range(n)])
    return out


@dataclass
class GridResult:
    feasible: bool
    x: tuple | None
    objective: float | None
    points: int


def _axis(lo, hi, step):
    k = int(np.floor((hi - lo) / step + 1e-9))
    pts = lo + step * np.arange(k + 1)
    if hi - pts[-1] > 1e-12:
        pts = np.append(pts, hi)
    return pts


def grid_search(p, step, feas_tol=0.0, chunk=200_000):
    """Best feasible grid point of an `OptProblem` with at most three variables."""
    if p.n > MAX_GRID_VARS:
        raise OracleError(f"grid search supports at most {MAX_GRID_VARS} variables")
    if step <= 0:
        raise OracleError("step must be positive")
    axes = [_axis(lo, hi, step) for lo, hi in p.bounds]
    sign = -1.0 if p.direction == "maximize" else 1.0
    best_val, best_x, total = np.inf, None, 0
    if p.n == 0:
        X = np.zeros((1, 0))
        ok = all(float(g.value(X)[0]) <= feas_tol for g in p.constraints)
        val = float(p.objective.value(X)[0])
        return GridResult(ok, () if ok else None, val if ok else None, 1)
    for X in _blocks(axes, chunk):
        total += len(X)
        ok = np.ones(len(X), dtype=bool)
        for g in p.constraints:
            ok &= np.asarray(g.value(X)) <= feas_tol
        if not ok.any():
            continue
        vals = sign * np.asarray(p.objective.value(X), dtype=float)
        vals = np.where(ok, vals, np.inf)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = float(vals[i]), tuple(float(v) for v in X[i])
    if best_x is None:
        return GridResult(False, None, None, total)
    return GridResult(True, best_x, sign * best_val, total)


def grid_extreme(expr, bounds, step, maximize=True):
    """Max (or min) of a compiled expression over a grid of the box; returns (value, x)."""
    axes = [_axis(lo, hi, step) for lo, hi in bounds]
    best, best_x = (-np.inf if maximize else np.inf), None
    for point_block in _blocks(axes):
        vals = np.asarray(expr.value(point_block))
        i = int(np.argmax(vals) if maximize else np.argmin(vals))
        if (vals[i] > best) if maximize else (vals[i] < best):
            best, best_x = float(vals[i]), tuple(point_block[i])
    return best, best_x


def _blocks(axes, chunk=200_000):
    rest = axes[1:]
    rest_size = int(np.prod([len(a) for a in rest])) if rest else 1
    rows = max(1, chunk // rest_size)
    for start in range(0, len(axes[0]), rows):
        mesh = np.meshgrid(axes[0][start:start + rows], *rest, indexing="ij")
        yield np.stack([m.ravel() for m in mesh], axis=-1)

