"""Cycle-closure feasibility: restarted Powell on the closure residual.

The sum of squared cycle residuals C(x) is minimized under the DoF box
bounds.  Runs restart from stratified (Latin-hypercube) samples, exit early
once C drops below the feasibility threshold, and abort when a sliding-window
linear fit of the C history flattens out (stall prevention).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fabhal.solver.config import SolverConfig
from fabhal.solver.powell import StopOptimization, powell_minimize

__all__ = ["StallMonitor", "FeasibilityResult", "solve_cycle_feasibility"]


class StallMonitor:
    """Sliding-window linear-regression stall detector.

    With a full window, computes the least-squares slope of the objective
    history against the iterate index and signals an abort when progress is
    flat: |slope| < threshold (or, with ``literal=True``, slope < threshold
    as stated, which also aborts steady decreases).
    """

    def __init__(self, window: int = 10, slope_threshold: float = 0.1, literal: bool = False):
        self.window = window
        self.slope_threshold = slope_threshold
        self.literal = literal
        self.history: list[float] = []

    def observe(self, value: float) -> bool:
        """Record one iterate; True = continue, False = abort."""
        self.history.append(float(value))
        if len(self.history) < self.window:
            return True
        ys = np.array(self.history[-self.window :])
        xs = np.arange(self.window, dtype=float)
        slope = float(np.polyfit(xs, ys, 1)[0])
        if self.literal:
            return not slope < self.slope_threshold
        return not abs(slope) < self.slope_threshold


@dataclass
class FeasibilityResult:
    ok: bool
    x: np.ndarray
    residual: float
    restarts_used: int
    iterations: int
    evaluations: int
    stalled_runs: int


def _stratified_samples(lo, hi, count, rng):
    """Latin-hypercube style per-DoF stratified samples within the box."""
    n = len(lo)
    if n == 0:
        return [np.zeros(0) for _ in range(count)]
    out = []
    strata = np.empty((count, n))
    for j in range(n):
        perm = rng.permutation(count)
        strata[:, j] = (perm + rng.random(count)) / count
    for i in range(count):
        out.append(lo + strata[i] * (hi - lo))
    return out


def solve_cycle_feasibility(
    assembly,
    config: SolverConfig | None = None,
    active_slots: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> FeasibilityResult:
    """Find x with C(x) <= threshold, restarting up to ``config.restarts`` times.

    ``active_slots`` restricts the search to a subset of x (the DoFs on the
    cycles); the rest stay at their current values.  The first attempt starts
    from the assembly's current DoF values, the remainder from stratified
    random samples.
    """
    config = config or SolverConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if assembly.n_cycles == 0:
        return FeasibilityResult(True, assembly.get_x(), 0.0, 0, 0, 0, 0)

    x_full = assembly.get_x()
    if active_slots is None:
        active_slots = np.arange(len(x_full))
    active_slots = np.asarray(active_slots, dtype=int)
    lo = assembly.x_min[active_slots]
    hi = assembly.x_max[active_slots]
    periodic = assembly.x_periodic[active_slots]

    def objective(sub):
        x = x_full.copy()
        x[active_slots] = sub
        return assembly.cycle_residual_sum(x)

    starts = [x_full[active_slots].copy()]
    # natural-pose start: angular DoFs at zero (arc-bottom contacts), sliding
    # DoFs at midpoint; connects tend to close in a hanging-like state
    defaults = np.array(
        [
            0.0 if assembly.dof_entries[i].angular
            else 0.5 * (assembly.dof_entries[i].lower + assembly.dof_entries[i].upper)
            for i in active_slots
        ]
    )
    if np.any(np.abs(defaults - starts[0]) > 1e-12):
        starts.append(defaults)
    starts += _stratified_samples(lo, hi, max(config.restarts - len(starts), 0), rng)

    best_x = x_full.copy()
    best_c = objective(starts[0])
    total_iter = 0
    total_evals = 0
    stalled = 0
    used = 0
    threshold = config.feasibility_threshold

    for attempt, start in enumerate(starts[: config.restarts]):
        used = attempt + 1
        monitor = StallMonitor(config.stall_window, config.stall_slope, config.stall_literal)

        def cb(x, fval):
            if fval <= threshold:
                raise StopOptimization  # early success exit
            if not monitor.observe(fval):
                raise StopOptimization

        res = powell_minimize(
            objective,
            start,
            lo,
            hi,
            periodic,
            max_iter=config.powell_max_iter,
            ftol=config.powell_ftol,
            line_tol=config.powell_line_tol,
            callback=cb,
        )
        total_iter += res.iterations
        total_evals += res.evaluations
        if res.aborted and res.fun > threshold:
            stalled += 1
        if res.fun < best_c:
            best_c = res.fun
            best_x = x_full.copy()
            best_x[active_slots] = res.x
        if best_c <= threshold:
            break

    best_x = assembly.wrap_x(best_x)
    return FeasibilityResult(
        ok=best_c <= threshold,
        x=best_x,
        residual=best_c,
        restarts_used=used,
        iterations=total_iter,
        evaluations=total_evals,
        stalled_runs=stalled,
    )


def refine_cycle_guess(
    assembly,
    active_slots: np.ndarray,
    threshold: float = 1e-8,
    max_iter: int = 40,
) -> np.ndarray | None:
    """Damped Gauss-Newton descent of the cycle residuals from the current x.

    Converges to the closure nearest the starting configuration (the Powell
    restarts have no such locality), which keeps naturally-posed starts in
    their basin.  The Jacobian is finite-differenced; returns the refined x
    or None when no nearby closure was reached.
    """
    if assembly.n_cycles == 0:
        return assembly.get_x()
    x = assembly.get_x()
    slots = np.asarray(active_slots, dtype=int)
    if len(slots) == 0:
        return None
    lo, hi = assembly.x_min[slots], assembly.x_max[slots]
    per = assembly.x_periodic[slots]

    def residuals(xf):
        return np.concatenate(
            [assembly.cycle_residual(xf, i) for i in range(assembly.n_cycles)]
        )

    def clip_sub(sub):
        out = sub.copy()
        out[~per] = np.clip(out[~per], lo[~per], hi[~per])
        return out

    # anisotropic step metric: wire twists are "expensive" motions, sliding
    # along a primitive is cheap, so the nearest closure is sought mostly by
    # sliding; keeps naturally hanging starts from twisting shut
    metric = np.array(
        [25.0 if assembly.dof_entries[s].angular else 1.0 for s in slots]
    )

    r = residuals(x)
    c = float(r @ r)
    lam = 1e-4
    eps = 1e-6
    for _ in range(max_iter):
        if c <= threshold:
            return assembly.wrap_x(x)
        J = np.empty((len(r), len(slots)))
        for k, slot in enumerate(slots):
            xp, xm = x.copy(), x.copy()
            xp[slot] += eps
            xm[slot] -= eps
            J[:, k] = (residuals(xp) - residuals(xm)) / (2 * eps)
        JtJ = J.T @ J
        g = J.T @ r
        scale = float(np.trace(JtJ)) / max(len(slots), 1)
        improved = False
        for _ in range(12):
            try:
                d = np.linalg.solve(JtJ + lam * scale * np.diag(metric), -g)
            except np.linalg.LinAlgError:
                break
            x_new = x.copy()
            x_new[slots] = clip_sub(x[slots] + d)
            r_new = residuals(x_new)
            c_new = float(r_new @ r_new)
            if c_new < c:
                x, r, c = x_new, r_new, c_new
                lam = max(lam / 3.0, 1e-10)
                improved = True
                break
            lam *= 5.0
        if not improved:
            break
    return assembly.wrap_x(x) if c <= threshold else None


def cycle_active_slots(assembly) -> np.ndarray:
    """Indices of x belonging to connections on any fundamental cycle.

    Tree edges shared by both endpoints' root paths (above the LCA) transform
    both cycle frames together and leave the residual norm unchanged, so only
    the symmetric difference of the two paths matters.
    """
    involved: set[int] = set(assembly.cycle_edges)
    for c_idx in assembly.cycle_edges:
        conn = assembly.connections[c_idx]

        def path_edges(inst):
            edges = []
            node = inst
            while node in assembly.tree_parent:
                parent, tree_idx, _ = assembly.tree_parent[node]
                edges.append(tree_idx)
                node = parent
            return edges

        ea = set(path_edges(conn.a.instance))
        eb = set(path_edges(conn.b.instance))
        involved |= ea ^ eb
    slots = [xi for xi, e in enumerate(assembly.dof_entries) if e.conn_idx in involved]
    return np.array(slots, dtype=int)
