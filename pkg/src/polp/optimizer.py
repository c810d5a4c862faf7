"""Constrained nonlinear optimization of optimizable-fact probabilities."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import PolpError
from .parser import SolverConfig

logger = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max-iters"
INFEASIBLE = "infeasible"

FEASIBILITY_TOL = 1e-6


@dataclass
class OptProblem:
    """min/max ``objective(x)`` s.t. ``g(x) <= 0`` for every constraint and box bounds.

    `objective` and each entry of `constraints` are `CompiledExpr` objects.
    """

    n: int
    objective: object
    constraints: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    direction: str = "minimize"
    config: SolverConfig = SolverConfig()
    names: list = None
    constraint_labels: list = None

    def __post_init__(self):
        if len(self.bounds) != self.n:
            raise PolpError(f"expected {self.n} bounds, got {len(self.bounds)}")
        for lo, hi in self.bounds:
            if not 0.0 < lo < hi < 1.0:
                raise PolpError(f"bounds must satisfy 0 < lower < upper < 1, got ({lo}, {hi})")
        if self.direction not in ("minimize", "maximize"):
            raise PolpError(f"unknown direction {self.direction!r}")
        if self.names is None:
            self.names = [f"x{i}" for i in range(self.n)]

    @property
    def lower(self):
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def upper(self):
        return np.array([b[1] for b in self.bounds], dtype=float)

    def midpoint(self):
        return (self.lower + self.upper) / 2.0

    def residuals(self, x):
        return np.array([float(g.value(x)) for g in self.constraints], dtype=float)

    def max_violation(self, x):
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if self.constraints:
            viol = max(viol, float(self.residuals(x).max()))
        if self.n:
            viol = max(viol, float((self.lower - x).max()), float((x - self.upper).max()))
        return max(viol, 0.0)

    def objective_value(self, x):
        return float(self.objective.value(np.asarray(x, dtype=float)))


@dataclass
class Solution:
    assignment: dict
    objective_value: float
    status: str
    iterations: int = 0
    kkt_residual: float = 0.0
    max_violation: float = 0.0
    query_probs: dict = field(default_factory=dict)
    x: tuple = ()
    message: str = ""
    violation_history: list = field(default_factory=list, repr=False)
    restoration_history: list = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return self.status == CONVERGED


def kkt_residual(p, x, active_tol=None):
    """Stationarity plus complementarity error with nonnegative multipliers.

    Multipliers of the near-active constraints (including the box) are fitted
    by nonnegative least squares.
    """
    x = np.asarray(x, dtype=float)
    if p.n == 0:
        return 0.0
    sign = -1.0 if p.direction == "maximize" else 1.0
    grad_f = sign * np.asarray(p.objective.grad(x), dtype=float)
    active_tol = active_tol if active_tol is not None else max(1e-6, 10 * p.config.tol)
    cols, vals = [], []
    for g in p.constraints:
        gv = float(g.value(x))
        if gv > -active_tol:
            cols.append(np.asarray(g.grad(x), dtype=float))
            vals.append(gv)
    eye = np.eye(p.n)
    for j in range(p.n):
        if x[j] - p.lower[j] < active_tol:
            cols.append(-eye[j])
            vals.append(p.lower[j] - x[j])
        if p.upper[j] - x[j] < active_tol:
            cols.append(eye[j])
            vals.append(x[j] - p.upper[j])
    if not cols:
        return float(np.abs(grad_f).max())
    A = np.column_stack(cols)
    lam, _ = nnls(A, -grad_f)
    stationarity = np.abs(A @ lam + grad_f).max()
    complementarity = max(abs(l * v) for l, v in zip(lam, vals))
    return float(stationarity + complementarity)


class Solver:
    """Interface for local gradient-based solvers.

    ``run`` minimizes ``fun`` from ``x0`` subject to ``g(x) <= 0`` and box
    bounds and returns ``(x, success, iterations, message, hit_iteration_limit)``.
    """

    name = "abstract"

    def run(self, fun, jac, x0, constraints, bounds, tol, max_iters, callback=None):
        raise NotImplementedError


class SlsqpSolver(Solver):
    """Sequential least-squares quadratic programming (SciPy's SLSQP)."""

    name = "slsqp"

    def run(self, fun, jac, x0, constraints, bounds, tol, max_iters, callback=None):
        cons = [{"type": "ineq",
                 "fun": (lambda x, g=g: -float(g.value(x))),
                 "jac": (lambda x, g=g: -np.asarray(g.grad(x), dtype=float))}
                for g in constraints]
        with warnings.catch_warnings():
            # SLSQP clips its own out-of-box line-search steps; nothing to act on
            warnings.filterwarnings("ignore", "Values in x were outside bounds",
                                    RuntimeWarning)
            res = minimize(fun, x0, jac=jac, method="SLSQP", bounds=bounds,
                           constraints=cons, callback=callback,
                           options={"ftol": tol, "maxiter": max_iters})
        return np.asarray(res.x, dtype=float), bool(res.success), int(res.nit), \
            str(res.message), res.status == 9


SOLVERS = {"slsqp": SlsqpSolver}


def get_solver(name):
    try:
        return SOLVERS[name.lower()]()
    except KeyError:
        raise PolpError(f"unknown solver {name!r}; available: {', '.join(SOLVERS)}") from None


def _restore(p, x0, solver, history=None):
    """Minimize the worst constraint violation over the box; returns the best point found.

    The violation of every restoration iterate is appended to `history`.
    """
    n = p.n
    obj = lambda z: z[n]
    obj_jac = lambda z: np.r_[np.zeros(n), 1.0]

    class _Shifted:
        def __init__(self, g):
            self.g = g

        def value(self, z):
            return self.g.value(z[:n]) - z[n]

        def grad(self, z):
            return np.r_[np.asarray(self.g.grad(z[:n]), dtype=float), -1.0]

    t0 = max(p.max_violation(x0), 0.0) + 1.0
    z0 = np.r_[np.clip(x0, p.lower, p.upper), t0]
    bounds = list(p.bounds) + [(0.0, t0 + 1.0)]
    history = history if history is not None else []
    history.append(p.max_violation(z0[:n]))
    z, *_ = solver.run(obj, obj_jac, z0, [_Shifted(g) for g in p.constraints], bounds,
                       1e-12, max(p.config.max_iters, 200),
                       lambda zk, *_: history.append(p.max_violation(np.clip(zk[:n], p.lower,
                                                                            p.upper))))
    x = np.clip(z[:n], p.lower, p.upper)
    return x if p.max_violation(x) < p.max_violation(x0) else np.clip(x0, p.lower, p.upper)


def _solution(p, x, status, iterations, message, history, restoration=()):
    x = np.clip(np.asarray(x, dtype=float), p.lower, p.upper)
    return Solution(
        assignment={name: float(v) for name, v in zip(p.names, x)},
        objective_value=p.objective_value(x),
        status=status,
        iterations=iterations,
        kkt_residual=kkt_residual(p, x),
        max_violation=p.max_violation(x),
        x=tuple(float(v) for v in x),
        message=message,
        violation_history=history,
        restoration_history=list(restoration),
    )


def solve(p, x0=None, deadline=None):
    """Local optimum of `p` from `x0` (box midpoint by default)."""
    cfg = p.config
    if p.n == 0:
        x = np.zeros(0)
        status = CONVERGED if p.max_violation(x) <= cfg.tol else INFEASIBLE
        return _solution(p, x, status, 0, "no optimizable facts", [])
    solver = get_solver(cfg.algorithm)
    sign = -1.0 if p.direction == "maximize" else 1.0

    def fun(x):
        return sign * float(p.objective.value(x))

    def jac(x):
        return sign * np.asarray(p.objective.grad(x), dtype=float)

    history, restoration = [], []

    def callback(xk, *_):
        history.append(p.max_violation(xk))
        if deadline is not None:
            deadline.check("solve")

    x = p.midpoint() if x0 is None else np.clip(np.asarray(x0, dtype=float), p.lower, p.upper)
    total_iters = 0
    message = ""
    restored = False
    for attempt in range(3):
        x, success, nit, message, hit_limit = solver.run(
            fun, jac, x, p.constraints, p.bounds, cfg.tol, cfg.max_iters, callback)
        total_iters += nit
        x = np.clip(x, p.lower, p.upper)
        viol = p.max_violation(x)
        if viol > FEASIBILITY_TOL:
            if restored:
                break
            logger.debug("restoration from violation %.3g (%s)", viol, message)
            x = _restore(p, x, solver, restoration)
            restored = True
            if p.max_violation(x) > FEASIBILITY_TOL:
                break
            continue
        if success and viol <= cfg.tol:
            return _solution(p, x, CONVERGED, total_iters, message, history, restoration)
        if hit_limit:
            return _solution(p, x, MAX_ITERS, total_iters, message, history, restoration)
        # feasible but the line search gave up; accept a certified KKT point
        if kkt_residual(p, x) <= np.sqrt(cfg.tol):
            return _solution(p, x, CONVERGED, total_iters, message, history, restoration)
    if p.max_violation(x) > FEASIBILITY_TOL:
        return _solution(p, x, INFEASIBLE, total_iters, message or "infeasible", history,
                         restoration)
    return _solution(p, x, MAX_ITERS, total_iters, message, history, restoration)


def _rank(p, sol):
    obj = -sol.objective_value if p.direction == "maximize" else sol.objective_value
    return (obj, sol.kkt_residual, sol.x)


def multistart(p, k, seed, deadline=None):
    """Best feasible local optimum over `k` starts (midpoint first, then seeded uniform)."""
    if k < 1:
        raise PolpError("multistart needs k >= 1")
    rng = np.random.default_rng(seed)
    starts = [p.midpoint()] + [rng.uniform(p.lower, p.upper) for _ in range(k - 1)]
    sols = [solve(p, x0, deadline) for x0 in starts]
    feasible = [s for s in sols if s.status != INFEASIBLE and s.max_violation <= p.config.tol]
    if feasible:
        return min(feasible, key=lambda s: _rank(p, s))
    best = min(sols, key=lambda s: (s.max_violation, s.x))
    return replace(best, status=INFEASIBLE)


def optimize(p, deadline=None):
    """Dispatch on ``p.config.multistart``."""
    if p.config.multistart > 1:
        return multistart(p, p.config.multistart, p.config.seed, deadline)
    return solve(p, deadline=deadline)
