"""Full-batch limited-memory BFGS with a strong-Wolfe line search.

The objective must be deterministic over a frozen sample set; curvature
pairs only make sense against a fixed landscape. Line-search trials that
hit non-finite values are treated as failed trials and shrunk away; a run
terminates with reason ``non_finite`` only when no finite step exists at
all (the gradient-explosion condition).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .autodiff import NonFiniteError

TERMINATIONS = ("g_tol", "f_tol", "max_iter", "non_finite")

CURVATURE_MIN = 1e-10


@dataclass
class OptimConfig:
    memory: int = 20
    max_iter: int = 2000
    g_tol: float = 1e-9
    f_tol: float = 1e-12
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 25

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("history memory must be at least 1")
        if self.g_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")


@dataclass
class TrainReport:
    iterations: int
    loss_trajectory: np.ndarray
    final_loss: float
    wall_time: float
    termination: str
    n_evaluations: int = 0
    line_search_failures: int = 0
    quantity: dict = field(default_factory=dict)


def two_loop_recursion(grad, history):
    """L-BFGS search direction from gradient and (s, y) pair history.

    History pairs violating the curvature condition s.y > 1e-10 are
    skipped. With no usable pairs the direction is plain steepest descent
    scaled by the initial inverse-Hessian guess gamma*I.
    """
    pairs = [(s, y, sy) for s, y, sy in history if sy > CURVATURE_MIN]
    if not pairs:
        return -np.asarray(grad, dtype=float)
    q = np.asarray(grad, dtype=float).copy()
    alphas = []
    for s, y, sy in reversed(pairs):
        a = float(s @ q) / sy
        alphas.append(a)
        q -= a * y
    s, y, sy = pairs[-1]
    gamma = sy / float(y @ y)
    q *= gamma
    for (s, y, sy), a in zip(pairs, reversed(alphas)):
        b = float(y @ q) / sy
        q += (a - b) * s
    return -q


def _safe_eval(loss, x):
    """Evaluate the objective; map any non-finite outcome to (None, None)."""
    try:
        f, g = loss(x)
    except NonFiniteError:
        return None, None
    g = np.asarray(g, dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return None, None
    return float(f), g


def _zoom(loss, x, d, f0, dg0, lo, f_lo, dg_lo, hi, f_hi, c1, c2, max_trials):
    """Strong-Wolfe zoom stage on the bracket [lo, hi]."""
    best = None
    for _ in range(max_trials):
        # quadratic interpolation, guarded toward bisection
        denom = 2.0 * (f_hi - f_lo - dg_lo * (hi - lo))
        if denom != 0.0 and np.isfinite(denom) and np.isfinite(f_hi):
            a = lo - dg_lo * (hi - lo) ** 2 / denom
        else:
            a = 0.5 * (lo + hi)
        span = abs(hi - lo)
        if not np.isfinite(a) or a <= min(lo, hi) + 0.1 * span or a >= max(lo, hi) - 0.1 * span:
            a = 0.5 * (lo + hi)
        f_a, g_a = _safe_eval(loss, x + a * d)
        if f_a is None:
            hi, f_hi = a, np.inf
            continue
        dg_a = float(g_a @ d)
        if f_a > f0 + c1 * a * dg0 or f_a >= f_lo:
            hi, f_hi = a, f_a
        else:
            if abs(dg_a) <= -c2 * dg0:
                return a, f_a, g_a, True
            if dg_a * (hi - lo) >= 0.0:
                hi, f_hi = lo, f_lo
            lo, f_lo, dg_lo = a, f_a, dg_a
            best = (a, f_a, g_a)
        if abs(hi - lo) < 1e-16:
            break
    if best is not None:
        return best[0], best[1], best[2], True  # Armijo holds, curvature may not
    return None, None, None, False


def strong_wolfe(loss, x, d, f0, g0, c1=1e-4, c2=0.9, max_trials=25, a_init=1.0):
    """Find a step along ``d`` meeting the strong Wolfe conditions.

    Returns (alpha, f, g, ok); non-finite trial points count as failed
    trials and shrink the bracket.
    """
    dg0 = float(g0 @ d)
    if dg0 >= 0.0:
        return None, None, None, False
    a_prev, f_prev, dg_prev = 0.0, f0, dg0
    a = a_init
    for it in range(max_trials):
        f_a, g_a = _safe_eval(loss, x + a * d)
        if f_a is None:
            a = 0.5 * (a_prev + a)  # shrink back toward the last finite point
            if a < 1e-20:
                return None, None, None, False
            continue
        dg_a = float(g_a @ d)
        if f_a > f0 + c1 * a * dg0 or (it > 0 and f_a >= f_prev):
            return _zoom(loss, x, d, f0, dg0, a_prev, f_prev, dg_prev, a, f_a,
                         c1, c2, max_trials)
        if abs(dg_a) <= -c2 * dg0:
            return a, f_a, g_a, True
        if dg_a >= 0.0:
            return _zoom(loss, x, d, f0, dg0, a, f_a, dg_a, a_prev, f_prev,
                         c1, c2, max_trials)
        a_prev, f_prev, dg_prev = a, f_a, dg_a
        a = min(2.0 * a, 1e10)
    return None, None, None, False


def _armijo_fallback(loss, x, g, f0, c1, max_trials):
    """Backtracking steepest-descent step used when the Wolfe search fails."""
    d = -g
    dg0 = float(g @ d)
    a = 1.0 / max(1.0, float(np.max(np.abs(g))))
    for _ in range(max_trials):
        f_a, g_a = _safe_eval(loss, x + a * d)
        if f_a is not None and f_a <= f0 + c1 * a * dg0:
            return a * d, f_a, g_a
        a *= 0.5
    return None, None, None


def train(loss, init, cfg: OptimConfig = None):
    """Minimize ``loss: theta -> (value, gradient)`` from ``init``.

    Returns (theta, TrainReport). Deterministic for a fixed objective and
    starting point. Raises NonFiniteError when the objective is already
    non-finite at the starting point.
    """
    cfg = cfg or OptimConfig()
    x = np.asarray(init, dtype=float).copy()
    t0 = time.perf_counter()
    n_eval = [0]

    def counted(z):
        n_eval[0] += 1
        return loss(z)

    f, g = _safe_eval(counted, x)
    if f is None:
        raise NonFiniteError("objective is non-finite at the initial parameters")

    trajectory = [f]
    history = deque(maxlen=cfg.memory)
    termination = "max_iter"
    ls_failures = 0
    iterations = 0

    for k in range(cfg.max_iter):
        if float(np.max(np.abs(g))) <= cfg.g_tol:
            termination = "g_tol"
            break
        d = two_loop_recursion(g, history)
        if float(d @ g) >= 0.0:
            history.clear()
            d = -g
        a, f_new, g_new, ok = strong_wolfe(
            counted, x, d, f, g, cfg.c1, cfg.c2, cfg.max_line_search)
        if ok:
            step = a * d
        else:
            ls_failures += 1
            step, f_new, g_new = _armijo_fallback(
                counted, x, g, f, cfg.c1, cfg.max_line_search)
            if step is None:
                # no finite decreasing step in any direction
                probe, _ = _safe_eval(counted, x - 1e-8 * g)
                termination = "f_tol" if probe is not None else "non_finite"
                if termination == "non_finite":
                    trajectory.append(float("nan"))
                iterations = k + 1
                break
            history.clear()
        y = g_new - g
        sy = float(step @ y)
        if sy > CURVATURE_MIN:
            history.append((step, y, sy))
        x = x + step
        f_prev, f, g = f, f_new, g_new
        trajectory.append(f)
        iterations = k + 1
        if abs(f_prev - f) <= cfg.f_tol * (1.0 + abs(f)):
            termination = "f_tol"
            break
    else:
        iterations = cfg.max_iter

    report = TrainReport(
        iterations=iterations,
        loss_trajectory=np.asarray(trajectory),
        final_loss=f,
        wall_time=time.perf_counter() - t0,
        termination=termination,
        n_evaluations=n_eval[0],
        line_search_failures=ls_failures,
    )
    return x, report
