"""Derivative-free scalar minimizers behind one pluggable dispatch.

Both built-in methods enforce the evaluation budget exactly (an attempted
call beyond it aborts the run and the incumbent is returned), treat
non-finite objective values as +inf so they stay rankable, and are fully
deterministic for a fixed starting point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

INITIAL_SIMPLEX_STEP = 0.05 * 2.0 * np.pi
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class BudgetExhausted(Exception):
    """Raised by ScalarObjective when one more evaluation would exceed the cap."""


class BudgetTooSmall(ValueError):
    """The evaluation budget cannot even cover the method's startup phase."""


class ScalarObjective:
    """Wraps a cost callable with evaluation counting and incumbent tracking."""

    def __init__(self, fn: Callable[[np.ndarray], float], dimension: int):
        self.fn = fn
        self.dimension = dimension
        self.evaluations = 0
        self.budget: int | None = None
        self.best_cost = np.inf
        self.best_theta: np.ndarray | None = None
        self.trace: list[float] = []

    def __call__(self, theta) -> float:
        if self.budget is not None and self.evaluations >= self.budget:
            raise BudgetExhausted()
        theta = np.asarray(theta, dtype=float)
        self.evaluations += 1
        value = float(self.fn(theta))
        if not np.isfinite(value):
            value = np.inf
        self.trace.append(value)
        if value < self.best_cost:
            self.best_cost = value
            self.best_theta = theta.copy()
        return value


@dataclass
class OptimizerResult:
    theta: np.ndarray
    cost: float
    evaluations: int
    reason: str  # "budget" | "tolerance" | "stall"


def _finish(obj: ScalarObjective, reason: str) -> OptimizerResult:
    if obj.best_theta is None:
        raise RuntimeError("optimizer finished without any evaluation")
    return OptimizerResult(
        theta=obj.best_theta.copy(),
        cost=obj.best_cost,
        evaluations=obj.evaluations,
        reason=reason,
    )


def nelder_mead(obj: ScalarObjective, theta0, budget: int,
                xtol: float = 1e-8) -> OptimizerResult:
    """Classic simplex search: reflection 1, expansion 2, contraction and shrink 0.5.

    The initial simplex is theta0 plus one point per coordinate offset by
    +0.05 * 2*pi. Stops when the budget runs out or the simplex diameter
    falls below xtol (cost plateaus alone never stop it).
    """
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    if budget < d + 1:
        raise BudgetTooSmall(f"budget must cover the initial simplex ({d + 1} evaluations)")
    obj.budget = budget
    rho, chi, psi, sigma = 1.0, 2.0, 0.5, 0.5

    sim = np.tile(theta0, (d + 1, 1))
    sim[1:] += np.eye(d) * INITIAL_SIMPLEX_STEP
    fsim = np.empty(d + 1)
    reason = "budget"
    try:
        for i in range(d + 1):
            fsim[i] = obj(sim[i])
        while True:
            order = np.argsort(fsim, kind="stable")
            sim, fsim = sim[order], fsim[order]
            if np.abs(sim[1:] - sim[0]).max() <= xtol:
                reason = "tolerance"
                break
            centroid = sim[:-1].mean(axis=0)
            xr = centroid + rho * (centroid - sim[-1])
            fr = obj(xr)
            if fr < fsim[0]:
                xe = centroid + rho * chi * (centroid - sim[-1])
                fe = obj(xe)
                if fe < fr:
                    sim[-1], fsim[-1] = xe, fe
                else:
                    sim[-1], fsim[-1] = xr, fr
            elif fr < fsim[-2]:
                sim[-1], fsim[-1] = xr, fr
            else:
                shrink = False
                if fr < fsim[-1]:
                    xc = centroid + psi * rho * (centroid - sim[-1])
                    fc = obj(xc)
                    if fc <= fr:
                        sim[-1], fsim[-1] = xc, fc
                    else:
                        shrink = True
                else:
                    xcc = centroid - psi * (centroid - sim[-1])
                    fcc = obj(xcc)
                    if fcc < fsim[-1]:
                        sim[-1], fsim[-1] = xcc, fcc
                    else:
                        shrink = True
                if shrink:
                    before = sim.copy()
                    for i in range(1, d + 1):
                        sim[i] = sim[0] + sigma * (sim[i] - sim[0])
                        fsim[i] = obj(sim[i])
                    if np.array_equal(before, sim):
                        reason = "stall"
                        break
    except BudgetExhausted:
        reason = "budget"
    return _finish(obj, reason)


def _bracket(obj: ScalarObjective, x, u, f0: float, max_expand: int = 60):
    """Bracket a 1-d minimum of t -> f(x + t*u) around t = 0.

    Returns (lo, hi, best_t, best_f) with the best evaluated point inside.
    """
    best_t, best_f = 0.0, f0
    t1, f1 = 1.0, obj(x + u)
    if f1 < best_f:
        best_t, best_f = t1, f1
    if f1 >= f0:
        t2, f2 = -1.0, obj(x - u)
        if f2 < best_f:
            best_t, best_f = t2, f2
        if f2 >= f0:
            return -1.0, 1.0, best_t, best_f
        prev_t, prev_f, cur_t, cur_f = 0.0, f0, t2, f2
        step = -1.0
    else:
        prev_t, prev_f, cur_t, cur_f = 0.0, f0, t1, f1
        step = 1.0
    for _ in range(max_expand):
        step *= 1.0 + GOLDEN
        nxt_t = cur_t + step
        nxt_f = obj(x + nxt_t * u)
        if nxt_f < best_f:
            best_t, best_f = nxt_t, nxt_f
        if nxt_f >= cur_f:
            lo, hi = sorted((prev_t, nxt_t))
            return lo, hi, best_t, best_f
        prev_t, prev_f, cur_t, cur_f = cur_t, cur_f, nxt_t, nxt_f
    lo, hi = sorted((prev_t, cur_t))
    return lo, hi, best_t, best_f


def _line_minimize(obj: ScalarObjective, x, direction, fx: float, tol: float):
    """Golden-section refinement after bracketing; never returns a worse point."""
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return x, fx
    u = direction / norm
    lo, hi, best_t, best_f = _bracket(obj, x, u, fx)
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    dd = a + GOLDEN * (b - a)
    fc = obj(x + c * u)
    fd = obj(x + dd * u)
    if fc < best_f:
        best_t, best_f = c, fc
    if fd < best_f:
        best_t, best_f = dd, fd
    while (b - a) > tol:
        if fc <= fd:
            b, dd, fd = dd, c, fc
            c = b - GOLDEN * (b - a)
            fc = obj(x + c * u)
            if fc < best_f:
                best_t, best_f = c, fc
        else:
            a, c, fc = c, dd, fd
            dd = a + GOLDEN * (b - a)
            fd = obj(x + dd * u)
            if fd < best_f:
                best_t, best_f = dd, fd
    if best_t == 0.0:
        return x, fx
    return x + best_t * u, best_f


def powell(obj: ScalarObjective, theta0, budget: int,
           line_tol: float = 1e-4, ftol: float = 1e-10) -> OptimizerResult:
    """Conjugate-direction search with golden-section line minimization.

    The direction set resets to the coordinate axes every d iterations.
    """
    theta0 = np.asarray(theta0, dtype=float)
    d = theta0.size
    if budget < 2 * d:
        raise BudgetTooSmall(f"budget must allow at least {2 * d} evaluations")
    obj.budget = budget
    x = theta0.copy()
    reason = "budget"
    try:
        fx = obj(x)
        directions = np.eye(d)
        iteration = 0
        while True:
            iteration += 1
            x_start, f_start = x.copy(), fx
            biggest_drop, biggest_i = 0.0, 0
            for i in range(d):
                f_before = fx
                x, fx = _line_minimize(obj, x, directions[i], fx, line_tol)
                if f_before - fx > biggest_drop:
                    biggest_drop, biggest_i = f_before - fx, i
            if abs(f_start - fx) <= ftol * (abs(f_start) + abs(fx)) / 2.0:
                reason = "tolerance"
                break
            new_dir = x - x_start
            if not np.any(new_dir):
                reason = "stall"
                break
            f_ext = obj(x + new_dir)
            if f_ext < f_start:
                t = (2.0 * (f_start - 2.0 * fx + f_ext)
                     * (f_start - fx - biggest_drop) ** 2
                     - biggest_drop * (f_start - f_ext) ** 2)
                if t < 0.0:
                    x, fx = _line_minimize(obj, x, new_dir, fx, line_tol)
                    directions[biggest_i] = directions[-1]
                    directions[-1] = new_dir / np.linalg.norm(new_dir)
            if iteration % d == 0:
                directions = np.eye(d)
    except BudgetExhausted:
        reason = "budget"
    return _finish(obj, reason)


_REGISTRY: dict[str, Callable[..., OptimizerResult]] = {
    "nelder-mead": nelder_mead,
    "powell": powell,
}


def register_optimizer(name: str, fn: Callable[..., OptimizerResult]) -> None:
    """Register an external minimizer (e.g. a COBYLA adapter) under a CLI name."""
    _REGISTRY[name.lower()] = fn


def available_optimizers() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def minimize(name: str, obj: ScalarObjective, theta0, budget: int,
             **tolerances) -> OptimizerResult:
    """Dispatch to a registered minimizer by name."""
    key = name.lower()
    if key not in _REGISTRY:
        raise ValueError(f"unknown optimizer {name!r}; available: {available_optimizers()}")
    return _REGISTRY[key](obj, theta0, budget, **tolerances)
