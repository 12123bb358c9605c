"""Phase-1 simplex feasibility check for small dense LPs.

The only use here is the geometric quick-reject test, whose problems have a
handful of variables and a couple dozen rows, so a plain dense tableau with
Bland's rule (no cycling) is entirely adequate.
"""

from __future__ import annotations

import numpy as np

__all__ = ["lp_feasible"]

_EPS = 1e-9


def lp_feasible(A_ub: np.ndarray, b_ub: np.ndarray) -> bool:
    """Is there an x >= 0 with A_ub @ x <= b_ub?

    Phase-1: minimize the sum of artificial variables; feasible iff the
    optimum is (numerically) zero.
    """
    A = np.asarray(A_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float).copy()
    m, n = A.shape

    # normalize to b >= 0, flipping rows (<= becomes >= with surplus)
    A = A.copy()
    ge_rows = b < 0
    A[ge_rows] *= -1.0
    b[ge_rows] *= -1.0

    # columns: x (n) + slack/surplus (m) + artificials (only for >= rows)
    n_art = int(ge_rows.sum())
    T = np.zeros((m + 1, n + m + n_art + 1))
    T[:m, :n] = A
    art_col = n + m
    basis = np.empty(m, dtype=int)
    for i in range(m):
        if ge_rows[i]:
            T[i, n + i] = -1.0  # surplus
            T[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        else:
            T[i, n + i] = 1.0  # slack
            basis[i] = n + i
    T[:m, -1] = b

    # objective row: minimize the sum of artificials, canonicalized so the
    # basic artificial columns read zero
    T[-1, n + m : n + m + n_art] = 1.0
    for i in range(m):
        if basis[i] >= n + m:
            T[-1, :] -= T[i, :]

    max_pivots = 200 * (m + n + 1)
    for _ in range(max_pivots):
        # Bland's rule: smallest-index entering column with negative cost
        costs = T[-1, :-1]
        entering = -1
        for j in range(len(costs)):
            if costs[j] < -_EPS:
                entering = j
                break
        if entering < 0:
            break
        col = T[:m, entering]
        ratios = np.where(col > _EPS, T[:m, -1] / np.where(col > _EPS, col, 1.0), np.inf)
        if not np.isfinite(ratios).any():
            # unbounded phase-1 cannot happen with artificials, but guard anyway
            return False
        leaving = int(np.argmin(ratios))
        # Bland tie-break on the basis index
        best = ratios[leaving]
        for i in range(m):
            if abs(ratios[i] - best) <= _EPS and basis[i] < basis[leaving]:
                leaving = i
        piv = T[leaving, entering]
        T[leaving, :] /= piv
        for i in range(m + 1):
            if i != leaving and abs(T[i, entering]) > 0.0:
                T[i, :] -= T[i, entering] * T[leaving, :]
        basis[leaving] = entering
    return bool(-T[-1, -1] <= 1e-7)
