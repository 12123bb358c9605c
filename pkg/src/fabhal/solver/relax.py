"""Gravity relaxation: static equilibrium of the assembly under self-load.

The energy is the total gravitational potential of the parts plus a quadratic
penalty keeping every connection's frames mated:

    E(q, x) = sum_i m_i g z_i(q)  +  sigma * sum_j |g_j(q, x)|^2   (+ sigma C_m)

with q the free per-part poses (position + rotation vector) and x the
connection DoFs under their box bounds.  Minimization is a projected
quasi-Newton method: BFGS curvature accumulation, active-set handling of the
bounds, and a backtracking line search that guarantees energy descent.

After convergence the configuration is snapped back onto the constraint
manifold (q = FK(x), plus a short cycle-closure polish of x) so the reported
state has exact tree residuals and cycle residuals at the feasibility
threshold rather than the O(weight/sigma) sag inherent to a finite penalty.
Fall-apart detection runs at the penalty optimum: a BOUNDED_AND_OPEN DoF
pinned at a bound with the energy gradient pointing out of the feasible
interval means the assembly slides apart there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fabhal.frames import exp_so3, so3_left_jacobian
from fabhal.primitives import DofTag
from fabhal.solver.config import SolverConfig
from fabhal.solver.feasibility import cycle_active_slots, solve_cycle_feasibility
from fabhal.solver.report import FallApartFlag

__all__ = ["RelaxProblem", "RelaxResult", "relax_under_gravity", "detect_fall_apart"]


class RelaxProblem:
    """E(q, x) and its analytic gradient over the stacked vector z = [q; x]."""

    def __init__(self, assembly, config: SolverConfig):
        self.assembly = assembly
        self.config = config
        self.movable = [
            iid for iid in assembly.instances if iid != assembly.environment_id
        ]
        self.q_slice = {
            iid: slice(6 * k, 6 * k + 6) for k, iid in enumerate(self.movable)
        }
        self.nq = 6 * len(self.movable)
        self.nx = assembly.ndofs
        self.n = self.nq + self.nx
        # box bounds: q free; x bounded except periodic dims
        lo = np.full(self.n, -np.inf)
        hi = np.full(self.n, np.inf)
        per = assembly.x_periodic
        lo[self.nq :][~per] = assembly.x_min[~per]
        hi[self.nq :][~per] = assembly.x_max[~per]
        self.lower, self.upper = lo, hi
        self._weights = {
            iid: config.gravity * assembly.instances[iid].part.mass
            for iid in self.movable
        }
        self._coms = {
            iid: np.asarray(assembly.instances[iid].part.center_of_mass, dtype=float)
            for iid in self.movable
        }

    # -- packing -------------------------------------------------------------
    #
    # Rotations are chart-local: z carries a small rotation vector delta per
    # part relative to a reference rotation, q_i = exp(hat(delta_i)) R_ref_i.
    # ``rebase`` folds accepted deltas into the references, keeping every
    # rotation-vector Jacobian well-conditioned.

    def pack(self, q: dict[str, tuple[np.ndarray, np.ndarray]], x: np.ndarray) -> np.ndarray:
        self._R_ref = {iid: q[iid][0].copy() for iid in self.movable}
        z = np.empty(self.n)
        for iid in self.movable:
            _, p = q[iid]
            s = self.q_slice[iid]
            z[s.start : s.start + 3] = p
            z[s.start + 3 : s.stop] = 0.0
        z[self.nq :] = x
        # datum shift: optimize E relative to the starting potential so the
        # evaluated numbers stay small and float resolution is not wasted on
        # an arbitrary height offset
        self._potential_datum = self.potential(q)
        # proximal anchor on the connection DoFs: energy-flat directions
        # (free spins) otherwise drift arbitrarily during the descent; the
        # weight is far below every physical force and reported tolerance
        self._x_anchor = np.array(x, dtype=float)
        return z

    def unpack(self, z: np.ndarray):
        q = {}
        rotvecs = {}
        env = self.assembly.environment_id
        if env is not None:
            q[env] = self.assembly.instances[env].fixed_frame.to_rp()
        for iid in self.movable:
            s = self.q_slice[iid]
            p = z[s.start : s.start + 3]
            w = z[s.start + 3 : s.stop]
            rotvecs[iid] = w
            q[iid] = (exp_so3(w) @ self._R_ref[iid], p)
        return q, rotvecs, z[self.nq :]

    def rebase(self, z: np.ndarray) -> np.ndarray:
        """Fold the rotation deltas into the reference rotations."""
        z = z.copy()
        for iid in self.movable:
            s = self.q_slice[iid]
            w = z[s.start + 3 : s.stop]
            if np.any(w):
                self._R_ref[iid] = exp_so3(w) @ self._R_ref[iid]
                z[s.start + 3 : s.stop] = 0.0
        return z

    # -- energy and gradient ---------------------------------------------------

    def potential(self, q) -> float:
        total = 0.0
        for iid in self.movable:
            R, p = q[iid]
            com_z = p[2] + R[2] @ self._coms[iid]
            total += self._weights[iid] * com_z
        return total

    _ANCHOR = 1e-9

    def _anchor_term(self, x: np.ndarray) -> float:
        a = getattr(self, "_x_anchor", None)
        if a is None or len(a) != len(x):
            return 0.0
        d = x - a
        return self._ANCHOR * float(d @ d)

    def energy(self, z: np.ndarray) -> float:
        q, _, x = self.unpack(z)
        sigma = self.config.sigma_relax
        total = self.potential(q) - getattr(self, "_potential_datum", 0.0)
        for j in range(len(self.assembly.connections)):
            r = self.assembly.connection_residual(q, x, j)
            total += sigma * float(r @ r)
        if self.config.include_multi_connection_in_relax:
            total += sigma * self.assembly.multi_connection_penalty(x)
        return total + self._anchor_term(x)

    def energy_and_gradient(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        asm = self.assembly
        q, rotvecs, x = self.unpack(z)
        sigma = self.config.sigma_relax
        g = np.zeros(self.n)
        total = -getattr(self, "_potential_datum", 0.0)
        # gravity
        zhat = np.array([0.0, 0.0, 1.0])
        for iid in self.movable:
            R, p = q[iid]
            w = self._weights[iid]
            com = self._coms[iid]
            total += w * (p[2] + R[2] @ com)
            s = self.q_slice[iid]
            g[s.start + 2] += w
            Jl = so3_left_jacobian(rotvecs[iid])
            arm = R @ com
            # d z(R com)/d theta = z . (-hat(R com) J_l d theta)
            g[s.start + 3 : s.stop] += w * (Jl.T @ np.cross(arm, zhat))
        # connection penalties
        env = asm.environment_id
        for j in range(len(asm.connections)):
            r, Ja, Jb, Jx = asm.connection_residual_jacobian(q, j, x, rotvecs)
            total += sigma * float(r @ r)
            coeff = 2.0 * sigma
            c = asm.connections[j]
            if c.a.instance != env:
                s = self.q_slice[c.a.instance]
                g[s] += coeff * (Ja.T @ r)
            if c.b.instance != env:
                s = self.q_slice[c.b.instance]
                g[s] += coeff * (Jb.T @ r)
            for xi, e in asm._x_slots_for(j):
                g[self.nq + xi] += coeff * float(Jx[:, e.slot] @ r)
        # multi-connection overlap
        if self.config.include_multi_connection_in_relax:
            cm, cm_grad = self._multi_connection_with_grad(x)
            total += sigma * cm
            g[self.nq :] += sigma * cm_grad
        a = getattr(self, "_x_anchor", None)
        if a is not None and len(a) == self.nx:
            d = x - a
            total += self._ANCHOR * float(d @ d)
            g[self.nq :] += 2.0 * self._ANCHOR * d
        return total, g

    def _multi_connection_with_grad(self, x: np.ndarray, hessian: np.ndarray | None = None):
        from fabhal.rules import multi_connection_terms

        asm = self.assembly
        total = 0.0
        grad = np.zeros(self.nx)
        slot_to_x = {}
        for xi, e in enumerate(asm.dof_entries):
            slot_to_x[(e.conn_idx, e.slot)] = xi
        sigma = self.config.sigma_relax
        for _, prim, members in asm._shared_primitives():
            occupants = []
            xslots = []
            for c_idx, slot, width in members:
                vals = asm._conn_values(c_idx, x)
                occupants.append((float(vals[slot]), width))
                xslots.append(slot_to_x.get((c_idx, slot)))
            for i in range(len(occupants)):
                for jj in range(i + 1, len(occupants)):
                    f, dsep = multi_connection_terms(
                        prim, [occupants[i], occupants[jj]]
                    )[0]
                    if f < 0.0:
                        total += f * f
                        if xslots[i] is not None:
                            grad[xslots[i]] += 2.0 * f * dsep
                        if xslots[jj] is not None:
                            grad[xslots[jj]] -= 2.0 * f * dsep
                        if hessian is not None:
                            # Gauss-Newton block of sigma * f^2
                            cols = []
                            if xslots[i] is not None:
                                cols.append((self.nq + xslots[i], dsep))
                            if xslots[jj] is not None:
                                cols.append((self.nq + xslots[jj], -dsep))
                            for za, da in cols:
                                for zb, db in cols:
                                    hessian[za, zb] += 2.0 * sigma * da * db
        return total, grad

    def gradient_and_gauss_newton(self, z: np.ndarray):
        """(E, grad, B) with B the Gauss-Newton model of the penalty terms.

        The gravitational term is linear in position and mildly nonlinear in
        rotation; its Hessian is left to the Levenberg damping.
        """
        asm = self.assembly
        q, rotvecs, x = self.unpack(z)
        sigma = self.config.sigma_relax
        g = np.zeros(self.n)
        B = np.zeros((self.n, self.n))
        total = -getattr(self, "_potential_datum", 0.0)
        zhat = np.array([0.0, 0.0, 1.0])
        for iid in self.movable:
            R, p = q[iid]
            w = self._weights[iid]
            com = self._coms[iid]
            total += w * (p[2] + R[2] @ com)
            s = self.q_slice[iid]
            g[s.start + 2] += w
            Jl = so3_left_jacobian(rotvecs[iid])
            arm = R @ com
            g[s.start + 3 : s.stop] += w * (Jl.T @ np.cross(arm, zhat))
            # curvature bound of the gravity term over rotations: |H| <= w |com|
            rb = range(s.start + 3, s.stop)
            B[rb, rb] += w * (float(np.linalg.norm(com)) + 1e-3)
        env = asm.environment_id
        coeff = 2.0 * sigma
        for j in range(len(asm.connections)):
            r, Ja, Jb, Jx = asm.connection_residual_jacobian(q, j, x, rotvecs)
            total += sigma * float(r @ r)
            c = asm.connections[j]
            cols: list[tuple[slice | np.ndarray, np.ndarray]] = []
            if c.a.instance != env:
                s = self.q_slice[c.a.instance]
                g[s] += coeff * (Ja.T @ r)
                cols.append((np.arange(s.start, s.stop), Ja))
            if c.b.instance != env:
                s = self.q_slice[c.b.instance]
                g[s] += coeff * (Jb.T @ r)
                cols.append((np.arange(s.start, s.stop), Jb))
            xcols = []
            Jxs = []
            for xi, e in asm._x_slots_for(j):
                g[self.nq + xi] += coeff * float(Jx[:, e.slot] @ r)
                xcols.append(self.nq + xi)
                Jxs.append(Jx[:, e.slot])
            if xcols:
                cols.append((np.array(xcols), np.array(Jxs).T))
            # scatter 2 sigma J^T J over the participating blocks
            for ia, Jcol_a in cols:
                for ib, Jcol_b in cols:
                    B[np.ix_(ia, ib)] += coeff * (Jcol_a.T @ Jcol_b)
        if self.config.include_multi_connection_in_relax:
            cm, cm_grad = self._multi_connection_with_grad(x, hessian=B)
            total += sigma * cm
            g[self.nq :] += sigma * cm_grad
        a = getattr(self, "_x_anchor", None)
        if a is not None and len(a) == self.nx:
            d = x - a
            total += self._ANCHOR * float(d @ d)
            g[self.nq :] += 2.0 * self._ANCHOR * d
            idx = np.arange(self.nq, self.n)
            B[idx, idx] += 2.0 * self._ANCHOR
        return total, g, B


@dataclass
class RelaxResult:
    converged: bool
    z: np.ndarray
    energy: float
    gradient: np.ndarray
    iterations: int
    energy_history: list[float] = field(default_factory=list)
    active_lower: np.ndarray | None = None
    active_upper: np.ndarray | None = None


def _projected_gradient(z, g, lo, hi, tol=1e-10):
    pg = g.copy()
    at_lo = z <= lo + tol
    at_hi = z >= hi - tol
    pg[at_lo] = np.minimum(g[at_lo], 0.0)
    pg[at_hi] = np.maximum(g[at_hi], 0.0)
    return pg


def minimize_projected_newton(
    problem: RelaxProblem,
    z0: np.ndarray,
    max_iter: int = 400,
    grad_tol: float = 1e-4,
) -> RelaxResult:
    """Active-set Newton with a Gauss-Newton Hessian and Levenberg damping.

    The penalty terms carry the curvature (2 sigma J^T J from the analytic
    residual Jacobians); bound handling fixes the active variables per
    iteration, and a projected backtracking search guarantees descent.
    """
    lo, hi = problem.lower, problem.upper
    z = np.clip(z0, lo, hi)
    f, g, B = problem.gradient_and_gauss_newton(z)
    n = len(z)
    lam = 1e-3
    history = [f]
    it = 0
    converged = False

    def is_converged(z, g, B):
        pg = _projected_gradient(z, g, lo, hi)
        if np.linalg.norm(pg, ord=np.inf) <= grad_tol:
            return True
        # Newton-metric test: would the remaining projected gradient move
        # any DoF by more than grad_tol under the local curvature?  Needed
        # because the absolute gradient scale grows with penalty stiffness.
        bound_tol = 1e-10
        active = ((z <= lo + bound_tol) & (g > 0)) | ((z >= hi - bound_tol) & (g < 0))
        free = ~active
        if not free.any():
            return True
        Bff = B[np.ix_(free, free)]
        try:
            d = np.linalg.solve(Bff + 1e-9 * np.diag(np.diagonal(Bff) + 1.0), -pg[free])
        except np.linalg.LinAlgError:
            return False
        return bool(np.linalg.norm(d, ord=np.inf) <= grad_tol)

    for it in range(1, max_iter + 1):
        if is_converged(z, g, B):
            converged = True
            break
        bound_tol = 1e-10
        active = ((z <= lo + bound_tol) & (g > 0)) | ((z >= hi - bound_tol) & (g < 0))
        free = ~active
        accepted = False
        z_new, f_new = z, f
        for _ in range(25):
            d = np.zeros(n)
            if free.any():
                Bff = B[np.ix_(free, free)]
                nf = int(free.sum())
                # Marquardt scaling: damp relative to each direction's own
                # curvature, with a floor for penalty-flat directions
                damp = np.diag(np.diagonal(Bff) + 1.0)
                try:
                    d_free = np.linalg.solve(Bff + lam * damp, -g[free])
                except np.linalg.LinAlgError:
                    d_free = -g[free] / (lam * np.diagonal(damp))
                d[free] = d_free
            cand = np.clip(z + d, lo, hi)
            step = cand - z
            if not np.any(step):
                lam *= 4.0
                continue
            f_cand = problem.energy(cand)
            gs = float(g @ step)
            noise = 1e-12 * (1.0 + abs(f))
            if f_cand <= f + 1e-4 * min(gs, 0.0) and f_cand < f - noise:
                z_new, f_new, accepted = cand, f_cand, True
                lam = max(lam / 3.0, 1e-9)
                break
            lam *= 4.0
        if not accepted:
            # damped projected gradient fallback
            pg = _projected_gradient(z, g, lo, hi)
            alpha = 1.0 / max(np.linalg.norm(pg), 1.0)
            for _ in range(60):
                cand = np.clip(z - alpha * pg, lo, hi)
                if not np.any(cand - z):
                    break
                f_cand = problem.energy(cand)
                if f_cand < f - 1e-12 * (1.0 + abs(f)):
                    z_new, f_new, accepted = cand, f_cand, True
                    break
                alpha *= 0.5
            if not accepted:
                # no step, however damped, lowers E measurably: the state
                # minimizes the energy to float resolution
                converged = True
                break
        z, f = problem.rebase(z_new), f_new
        f, g, B = problem.gradient_and_gauss_newton(z)
        history.append(f)
    if not converged and is_converged(z, g, B):
        converged = True
    bound_tol = 1e-9
    return RelaxResult(
        converged=converged,
        z=z,
        energy=f,
        gradient=g,
        iterations=it,
        energy_history=history,
        active_lower=z <= lo + bound_tol,
        active_upper=z >= hi - bound_tol,
    )


def detect_fall_apart(problem: RelaxProblem, result: RelaxResult) -> list[FallApartFlag]:
    """Flag BOUNDED_AND_OPEN DoFs pinned at a bound with an outward slope."""
    asm = problem.assembly
    flags = []
    tol = problem.config.fall_apart_grad_tol
    for xi, entry in enumerate(asm.dof_entries):
        if entry.tag is not DofTag.BOUNDED_AND_OPEN:
            continue
        zi = problem.nq + xi
        grad = float(result.gradient[zi])
        if result.active_lower[zi] and grad > tol:
            flags.append(
                FallApartFlag(entry.owner.key(), entry.name, "lower", grad)
            )
        elif result.active_upper[zi] and grad < -tol:
            flags.append(
                FallApartFlag(entry.owner.key(), entry.name, "upper", grad)
            )
    return flags


def relax_under_gravity(
    assembly,
    x_feas: np.ndarray,
    config: SolverConfig | None = None,
    rng: np.random.Generator | None = None,
):
    """Run the equilibrium solve from a feasible start.

    Returns ``(problem, result, flags, x_final, q_final, polish_ok)`` where
    ``x_final``/``q_final`` are the snapped on-manifold configuration.
    """
    config = config or SolverConfig()
    problem = RelaxProblem(assembly, config)
    q0 = assembly.forward_kinematics(x_feas)
    z0 = problem.pack(q0, x_feas)
    result = minimize_projected_newton(
        problem, z0, max_iter=config.newton_max_iter, grad_tol=config.newton_grad_tol
    )
    flags = detect_fall_apart(problem, result)

    # snap back onto the constraint manifold for reporting
    x_relaxed = assembly.wrap_x(result.z[problem.nq :])
    polish_ok = True
    x_final = x_relaxed
    if assembly.n_cycles:
        polish_cfg = config.with_overrides(restarts=1)
        saved = assembly.get_x()
        assembly.set_x(x_relaxed)
        pol = solve_cycle_feasibility(
            assembly, polish_cfg, cycle_active_slots(assembly), rng=rng
        )
        assembly.set_x(saved)
        polish_ok = pol.ok
        x_final = pol.x
    q_final = assembly.forward_kinematics(x_final)
    return problem, result, flags, x_final, q_final, polish_ok
