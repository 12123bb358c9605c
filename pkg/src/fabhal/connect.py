"""The verified connect() operation.

Connecting two primitives runs, in order: the structural prechecks (type
compatibility, closedness, geometric fit, critical-dimension ledger); then,
when the edge closes one or more cycles, the geometric quick reject followed
by the numeric cycle-closure feasibility solve.  On success the connection is
committed and the feasible DoF values are written back; on any rejection the
assembly is left bit-identical.

During the connect-time feasibility solve, DoFs of ``is_fixed`` connections
participate in the search: taping a connector happens while assembling, at
whatever values make the assembly close.  They are frozen from then on (they
never enter the solve-time DoF vector).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from fabhal.assembly import Assembly, Endpoint
from fabhal.rules import ConnectCheck, Verdict
from fabhal.solver.config import SolverConfig
from fabhal.solver.feasibility import (
    cycle_active_slots,
    refine_cycle_guess,
    solve_cycle_feasibility,
)
from fabhal.solver.quick_reject import cycle_intervals, quick_reject_intervals

__all__ = ["connect"]


def _naturalize_tree_edge(assembly: Assembly, conn) -> None:
    """Pick hanging-friendly initial DoFs for a freshly added tree edge.

    The default zero angles can compose to a child part sitting above its
    support.  Half-turn choices of the connection's periodic angular DoFs
    reach the mirrored branches, so enumerate them and keep the assignment
    that puts the child's center of mass lowest.
    """
    child = None
    for inst, (parent, c_idx, _) in assembly.tree_parent.items():
        if assembly.connections[c_idx] is conn:
            child = inst
            break
    if child is None:
        return
    com = np.asarray(assembly.instances[child].part.center_of_mass, dtype=float)
    dofs = list(conn.prim_a.dofs) + list(conn.prim_b.dofs)
    flip_slots = [
        k
        for k, d in enumerate(dofs)
        if d.angular and d.tag.value == "unbounded"
    ]
    if not flip_slots:
        return
    base = conn.dof_values.copy()
    best = None
    best_z = math.inf
    for combo in itertools.product((0.0, math.pi), repeat=len(flip_slots)):
        vals = base.copy()
        for k, delta in zip(flip_slots, combo):
            vals[k] = base[k] + delta
        conn.dof_values = vals
        q = assembly.forward_kinematics()
        R, p = q[child]
        z = float(p[2] + R[2] @ com)
        if z < best_z - 1e-9:
            best_z = z
            best = vals
    conn.dof_values = best if best is not None else base


def _pre_orient_cycle_edge(assembly: Assembly, conn) -> None:
    """Half-turn the new edge's periodic DoFs to the branch nearest closure.

    Mirror-image attachments start the closure residual a half turn away
    (exactly at the rotation-log cut locus, where local descent stalls);
    enumerating the half-turn combinations of the new connection's own
    periodic DoFs starts the feasibility search on the right branch.
    """
    dofs = list(conn.prim_a.dofs) + list(conn.prim_b.dofs)
    flip_slots = [
        k for k, d in enumerate(dofs) if d.angular and d.tag.value == "unbounded"
    ]
    if not flip_slots:
        return
    base = conn.dof_values.copy()
    best = base
    best_c = math.inf
    for combo in itertools.product((0.0, math.pi), repeat=len(flip_slots)):
        vals = base.copy()
        for k, delta in zip(flip_slots, combo):
            vals[k] = base[k] + delta
        conn.dof_values = vals
        c = assembly.cycle_residual_sum(None)
        if c < best_c - 1e-12:
            best_c = c
            best = vals
    conn.dof_values = best


def connect(
    assembly: Assembly,
    ep_a: Endpoint | tuple[str, str],
    ep_b: Endpoint | tuple[str, str],
    alignment: str = "default",
    is_fixed: bool = False,
    config: SolverConfig | None = None,
) -> ConnectCheck:
    """Verify and commit a connection; returns OK or a typed rejection."""
    if not isinstance(ep_a, Endpoint):
        ep_a = Endpoint(*ep_a)
    if not isinstance(ep_b, Endpoint):
        ep_b = Endpoint(*ep_b)
    config = config or SolverConfig()

    res = assembly.precheck(ep_a, ep_b)
    if not res.ok:
        return res

    closes_cycle = assembly.would_close_cycle(ep_a, ep_b)
    conn = assembly.add_connection_unchecked(ep_a, ep_b, alignment, is_fixed)
    if not closes_cycle:
        _naturalize_tree_edge(assembly, conn)
        return ConnectCheck(Verdict.OK)

    # geometric quick reject over the new fundamental cycle
    cycle_idx = assembly.connections.index(conn)
    try:
        intervals = cycle_intervals(assembly, cycle_idx)
        if len(intervals) >= 3 and not quick_reject_intervals(intervals):
            assembly.pop_connection()
            return ConnectCheck(
                Verdict.QUICK_REJECTED,
                "the parts around the new cycle can never span a closed loop "
                "(connector distance bounds violate the polygon inequality)",
            )
    except Exception:
        assembly.pop_connection()
        raise

    # numeric cycle feasibility; taped (is_fixed) DoFs take part here
    fixed_flags = [c.is_fixed for c in assembly.connections]
    try:
        for c in assembly.connections:
            c.is_fixed = False
        assembly._rebuild()
        slots = cycle_active_slots(assembly)
        _pre_orient_cycle_edge(assembly, conn)
        # local refinement first: stay in the basin of the current
        # (naturally posed) configuration when a nearby closure exists
        refined = refine_cycle_guess(assembly, slots)
        if refined is not None:
            assembly.set_x(refined)
        seed = config.seed + 7919 * len(assembly.connections)
        rng = np.random.default_rng(seed)
        feas = solve_cycle_feasibility(assembly, config, slots, rng=rng)
        if feas.ok:
            assembly.set_x(feas.x)
    finally:
        for c, flag in zip(assembly.connections, fixed_flags):
            c.is_fixed = flag
        assembly._rebuild()

    if not feas.ok:
        assembly.pop_connection()
        return ConnectCheck(
            Verdict.CYCLE_INFEASIBLE,
            f"no connection parameters close the new cycle (best residual "
            f"{feas.residual:.3e} after {feas.restarts_used} restarts)",
        )
    return ConnectCheck(Verdict.OK)
