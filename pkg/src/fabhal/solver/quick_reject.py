"""Geometric quick reject for cycle-closing connections.

A cycle of k rigid parts can only close if there exist connector-to-connector
distances e_i, one per part, with e_i inside that part's precomputed bounds
and every e_i no longer than the sum of the others (the closed-polygon
generalization of the triangle inequality).  That is a small LP feasibility
problem; infeasibility proves the cycle can never close, so rejection is
sound as long as the intervals are conservative.
"""

from __future__ import annotations

import numpy as np

from fabhal.solver.simplex import lp_feasible

__all__ = ["quick_reject_intervals", "cycle_intervals", "quick_reject"]


def quick_reject_intervals(intervals: list[tuple[float, float]]) -> bool:
    """True if a closed loop with these per-part distance intervals may exist.

    ``intervals`` is [(e_min, e_max)] with k >= 3 entries.  Returns False
    only when the LP is infeasible (guaranteed impossible loop).
    """
    k = len(intervals)
    if k < 3:
        raise ValueError("quick reject needs at least 3 part hops")
    lo = np.array([iv[0] for iv in intervals], dtype=float)
    hi = np.array([iv[1] for iv in intervals], dtype=float)
    if np.any(lo < 0) or np.any(lo > hi):
        raise ValueError("intervals must satisfy 0 <= min <= max")
    # variables s = e - lo >= 0
    # polygon rows: e_i - sum_{j != i} e_j <= 0
    # upper bounds:  s_i <= hi_i - lo_i
    P = 2.0 * np.eye(k) - np.ones((k, k))
    A = np.vstack([P, np.eye(k)])
    b = np.concatenate([-(P @ lo), hi - lo])
    return lp_feasible(A, b)


def cycle_intervals(assembly, cycle_conn_idx: int, samples_per_dof: int = 16):
    """Per-part distance intervals around the fundamental cycle of an edge.

    The cycle consists of the tree path between the edge's two instances plus
    the edge itself; each instance on it contributes the distance interval
    between the two primitives through which the cycle passes it.
    """
    conn = assembly.connections[cycle_conn_idx]
    a_inst, b_inst = conn.a.instance, conn.b.instance

    def path_to_root(inst):
        path = [inst]
        while inst in assembly.tree_parent:
            inst = assembly.tree_parent[inst][0]
            path.append(inst)
        return path

    pa = path_to_root(a_inst)
    pb = path_to_root(b_inst)
    set_pa = {n: i for i, n in enumerate(pa)}
    lca = next(n for n in pb if n in set_pa)
    nodes = pa[: set_pa[lca] + 1] + [n for n in reversed(pb[: pb.index(lca)])]
    # nodes traces a_inst .. lca .. b_inst; the new edge closes b_inst -> a_inst

    # primitive used to enter each node along the cycle walk
    entries: dict[str, list[str]] = {n: [] for n in nodes}
    entries[a_inst].append(conn.a.primitive)
    entries[b_inst].append(conn.b.primitive)
    for child in nodes:
        if child == lca:
            continue
        parent, c_idx, parent_is_a = assembly.tree_parent[child]
        c = assembly.connections[c_idx]
        child_ep, parent_ep = (c.b, c.a) if parent_is_a else (c.a, c.b)
        entries[child].append(child_ep.primitive)
        entries[parent].append(parent_ep.primitive)

    intervals = []
    for n in nodes:
        prims = entries[n]
        if len(prims) != 2:
            raise AssertionError(f"cycle walk gave {len(prims)} primitives at {n}")
        inst = assembly.instances[n]
        intervals.append(inst.part.distance_bounds(prims[0], prims[1], samples_per_dof))
    return intervals


def quick_reject(assembly, cycle_conn_idx: int, samples_per_dof: int = 16) -> bool:
    """True = may be feasible, False = provably cannot close.

    Cycles with fewer than three part hops are never rejected here; they go
    straight to the numeric feasibility solve.
    """
    intervals = cycle_intervals(assembly, cycle_conn_idx, samples_per_dof)
    if len(intervals) < 3:
        return True
    return quick_reject_intervals(intervals)
