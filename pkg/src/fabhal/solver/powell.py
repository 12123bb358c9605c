"""Powell-style direction-set minimization under box bounds.

Coordinate directions with the classic largest-decrease direction
replacement, golden-section line minimization clamped to the feasible
segment, and an optional per-iteration callback (used for stall monitoring
and early exit).  Periodic dimensions are left unclamped; callers wrap them
afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PowellResult", "powell_minimize", "StopOptimization"]

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


class StopOptimization(Exception):
    """Raised by a callback to abort the run (e.g. stall detected)."""


@dataclass
class PowellResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    aborted: bool = False


def _line_bounds(x, d, lo, hi, periodic, max_step):
    """Feasible step interval [a_min, a_max] along direction d."""
    a_min, a_max = -max_step, max_step
    for i in range(len(x)):
        di = d[i]
        if abs(di) < 1e-300 or periodic[i]:
            continue
        l = (lo[i] - x[i]) / di
        h = (hi[i] - x[i]) / di
        if l > h:
            l, h = h, l
        a_min = max(a_min, l)
        a_max = min(a_max, h)
    if a_min > a_max:
        return 0.0, 0.0
    return a_min, a_max


def _golden(f, a, b, tol, max_iter=120):
    """Brent line minimum of f on [a, b]: parabolic steps with a
    golden-section safeguard; returns (alpha, f(alpha), evals)."""
    cgold = 1.0 - _GOLD
    x = w = v = a + cgold * (b - a)
    fx = fw = fv = f(x)
    evals = 1
    d = e = b - a
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        tol1 = tol * (1.0 + abs(x))
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            # parabola through (x, fx), (w, fw), (v, fv)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q != 0.0 and a * q < p + x * q < b * q:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if x < m else -tol1
                use_golden = False
        if use_golden:
            e = (b if x < m else a) - x
            d = cgold * e
        u = x + (d if abs(d) >= tol1 else (tol1 if d > 0 else -tol1))
        fu = f(u)
        evals += 1
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx, evals


def powell_minimize(
    fun,
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    periodic: np.ndarray | None = None,
    max_iter: int = 60,
    ftol: float = 1e-12,
    line_tol: float = 1e-10,
    callback=None,
) -> PowellResult:
    """Minimize ``fun`` over the box [lower, upper].

    ``periodic`` marks dimensions that may move freely (wrapped by the
    caller); their line searches are capped at one period per step.
    ``callback(x, f)`` runs once per outer iteration and may raise
    ``StopOptimization``.
    """
    n = len(x0)
    x = np.asarray(x0, dtype=float).copy()
    if periodic is None:
        periodic = np.zeros(n, dtype=bool)
    span = np.where(np.isfinite(upper - lower), upper - lower, 1.0)
    max_step = float(max(2.0 * span.max(initial=1.0), 1.0))

    evals = 0

    def f(z):
        nonlocal evals
        evals += 1
        return fun(z)

    fx = f(x)
    if n == 0:
        return PowellResult(x, fx, 0, evals)

    def basis():
        return [np.eye(n)[i] * max(span[i] * 0.1, 1e-3) for i in range(n)]

    def line_minimize(x, fx, d):
        a_min, a_max = _line_bounds(x, d, lower, upper, periodic, max_step)
        if a_max - a_min <= 0.0:
            return x, fx, False
        alpha, f_alpha, _ = _golden(
            lambda a: f(_clip_mixed(x + a * d, lower, upper, periodic)),
            a_min,
            a_max,
            line_tol,
        )
        if f_alpha < fx:
            return _clip_mixed(x + alpha * d, lower, upper, periodic), f_alpha, True
        return x, fx, False

    dirs = basis()
    aborted = False
    it = 0
    for it in range(1, max_iter + 1):
        f_start = fx
        x_start = x.copy()
        biggest_drop = 0.0
        biggest_idx = 0
        for i, d in enumerate(dirs):
            f_before = fx
            x, fx, moved = line_minimize(x, fx, d)
            if moved and f_before - fx > biggest_drop:
                biggest_drop = f_before - fx
                biggest_idx = i
        # classic replacement criterion: adopt the composite direction only
        # when the extrapolated point keeps improving and the decrease was
        # not dominated by a single existing direction
        new_dir = x - x_start
        if np.linalg.norm(new_dir) > 1e-14 and biggest_drop > 0.0:
            x_e = _clip_mixed(2.0 * x - x_start, lower, upper, periodic)
            f_e = f(x_e)
            if f_e < f_start:
                t = (
                    2.0 * (f_start - 2.0 * fx + f_e)
                    * (f_start - fx - biggest_drop) ** 2
                    - biggest_drop * (f_start - f_e) ** 2
                )
                if t < 0.0:
                    x, fx, moved = line_minimize(x, fx, new_dir)
                    if moved:
                        dirs[biggest_idx] = new_dir
        # keep the set from collapsing into a degenerate span
        if it % (2 * n) == 0:
            dirs = basis()
        if callback is not None:
            try:
                callback(x, fx)
            except StopOptimization:
                aborted = True
                break
        if f_start - fx <= ftol * (abs(f_start) + abs(fx) + 1e-300):
            break
    return PowellResult(x, fx, it, evals, aborted)


def _clip_mixed(z, lower, upper, periodic):
    out = np.array(z, dtype=float)
    b = ~periodic
    out[b] = np.clip(out[b], lower[b], upper[b])
    return out
