"""Per-tick box-constrained minimization of the weighted objective sum.

Projected L-BFGS with Armijo backtracking along the projected path, warm
started from the previous tick's solution. Falls back to projected
steepest descent when curvature pairs are degenerate. Any non-finite term
evaluation aborts the solve and freezes the output at the seed, so the
engine never emits motion derived from a poisoned objective.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .kinematics import InvalidInputError, RobotModel
from .objectives import (DEFAULT_DIST_FLOOR, DEFAULT_EPSILON, EvalContext,
                         MotionHistory, ObjectiveTerm, evaluate_objective)
from .shapes import PlacedShape

PROJECTED_GRAD_TOL = 1e-6
RELATIVE_DECREASE_TOL = 1e-8
ARMIJO_C1 = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_BACKTRACKS = 25
LBFGS_MEMORY = 8


@dataclass
class SolveRequest:
    seed: np.ndarray
    terms: list[ObjectiveTerm]
    model: RobotModel
    history: MotionHistory
    env_shapes: list[PlacedShape] = field(default_factory=list)
    dt: float = 1.0 / 60.0
    max_iters: int = 100
    max_ms: float | None = 8.0
    epsilon: float = DEFAULT_EPSILON
    dist_floor: float = DEFAULT_DIST_FLOOR


@dataclass
class SolveResult:
    q_star: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    in_collision: bool
    min_self_distance: float = float("inf")
    min_env_distance: float = float("inf")
    diagnostics: list[str] = field(default_factory=list)


def build_context(req: SolveRequest) -> EvalContext:
    from .objectives import TermKind
    needs_collision = any(t.kind in (TermKind.SELF_COLLISION, TermKind.ENV_COLLISION)
                          for t in req.terms)
    return EvalContext.from_inputs(req.model, req.history, req.dt, req.env_shapes,
                                   req.epsilon, req.dist_floor,
                                   need_collision=needs_collision)


def objective_and_gradient(q: np.ndarray, req: SolveRequest,
                           ctx: EvalContext | None = None) -> tuple[float, np.ndarray]:
    """Aggregate objective value and gradient at q for a solve request."""
    if ctx is None:
        ctx = build_context(req)
    ev = evaluate_objective(np.asarray(q, dtype=float), ctx, req.terms, need_grad=True)
    return ev.value, ev.gradient


def _two_loop(g: np.ndarray, pairs: deque, h0: np.ndarray) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    if pairs:
        s_last, y_last, _ = pairs[-1]
        q *= (s_last @ y_last) / (y_last @ y_last)
    else:
        q *= h0
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += s * (a - b)
    return q


def _diagonal_preconditioner(req: SolveRequest) -> np.ndarray:
    """Inverse curvature estimate for the L-BFGS seed scaling.

    Smoothness terms contribute weight * (n-i+1) / (dt^2k c^2) per joint
    (their basins are quadratic near zero with the finite-difference lever
    squared). Pose-space terms contribute roughly weight * L^2 / c^2 with
    L ~ 0.5 m of Jacobian lever. Seeding with the inverse of this diagonal
    removes most of the landscape's conditioning before any curvature
    pairs exist.
    """
    from .objectives import _SMOOTHNESS_ORDER, TermKind
    n = req.model.joint_count
    joint_w = np.arange(n, 0, -1, dtype=float)
    pose_kinds = {TermKind.SET_TARGET, TermKind.ADJUST, TermKind.KEEP_DISTANCE,
                  TermKind.UPRIGHT, TermKind.EE_VEL}
    diag = np.full(n, 1.0)
    for t in req.terms:
        order = _SMOOTHNESS_ORDER.get(t.kind)
        if order is not None:
            diag += t.weight * joint_w / (req.dt ** (2 * order) * t.groove.c ** 2)
        elif t.kind in pose_kinds:
            diag += t.weight * 0.25 / t.groove.c ** 2
    return 1.0 / diag


def solve(req: SolveRequest) -> SolveResult:
    if not req.terms:
        raise InvalidInputError("solve requires at least one active objective term")
    if req.max_iters <= 0:
        raise InvalidInputError("iteration budget must be positive")

    lo = req.model.lower_limits
    hi = req.model.upper_limits
    seed = np.clip(np.asarray(req.seed, dtype=float), lo, hi)
    ctx = build_context(req)
    start = time.perf_counter() if req.max_ms is not None else None

    def finish(x, ev, iters, converged, diags):
        col = ev.collision
        return SolveResult(
            q_star=x,
            objective_value=ev.value,
            iterations=iters,
            converged=converged,
            in_collision=col.in_collision if col else False,
            min_self_distance=col.min_self_distance if col else float("inf"),
            min_env_distance=col.min_env_distance if col else float("inf"),
            diagnostics=diags,
        )

    ev = evaluate_objective(seed, ctx, req.terms, need_grad=True)
    if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
        return finish(seed, ev, 0, False,
                      ["non-finite objective at seed; output frozen at seed"])

    x = seed
    f, g = ev.value, ev.gradient
    best_ev = ev
    pairs: deque = deque(maxlen=LBFGS_MEMORY)
    h0 = _diagonal_preconditioner(req)
    iters = 0
    converged = False
    diags: list[str] = []

    for iters in range(1, req.max_iters + 1):
        if start is not None and (time.perf_counter() - start) * 1e3 > req.max_ms:
            diags.append("wall-clock budget exhausted")
            break

        pg = x - np.clip(x - g, lo, hi)
        if np.max(np.abs(pg)) < PROJECTED_GRAD_TOL:
            converged = True
            break

        active = ((x <= lo + 1e-12) & (g > 0)) | ((x >= hi - 1e-12) & (g < 0))
        d = -_two_loop(g, pairs, h0)
        d = np.where(active, 0.0, d)
        if d @ g > -1e-18:
            d = np.where(active, 0.0, -g * h0)
            if d @ g > -1e-18:
                converged = True
                break

        # first candidate is evaluated with its gradient: at steady state the
        # unit step is usually accepted and no second evaluation is needed
        accepted = False
        alpha = 1.0
        with_grad = True
        for _ in range(MAX_BACKTRACKS):
            xn = np.clip(x + alpha * d, lo, hi)
            step = xn - x
            if np.max(np.abs(step)) < 1e-14:
                break
            ev_n = evaluate_objective(xn, ctx, req.terms, need_grad=with_grad)
            if not np.isfinite(ev_n.value):
                return finish(seed, best_ev, iters, False,
                              ["non-finite objective during line search; "
                               "output frozen at seed"])
            if ev_n.value <= f + ARMIJO_C1 * (g @ step):
                accepted = True
                break
            alpha *= BACKTRACK_FACTOR
            with_grad = False
        if not accepted:
            converged = True    # no descent step exists at line-search resolution
            break

        if ev_n.gradient is None:
            ev_n = evaluate_objective(xn, ctx, req.terms, need_grad=True)
        if not np.all(np.isfinite(ev_n.gradient)):
            return finish(seed, best_ev, iters, False,
                          ["non-finite gradient after step; output frozen at seed"])
        s = xn - x
        y = ev_n.gradient - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        decrease = f - ev_n.value
        x, f, g = xn, ev_n.value, ev_n.gradient
        best_ev = ev_n
        if decrease < RELATIVE_DECREASE_TOL * (1.0 + abs(f)):
            converged = True
            break

    return finish(x, best_ev, iters, converged, diags)
