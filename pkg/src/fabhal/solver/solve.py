"""The two-step assembly solve.

Step 1 brings the target part as close as possible to its goal pose while
keeping cycle-closure and overlap penalties small: Powell minimization of
f_obj + sigma (C_m + C) under the DoF bounds, doubling sigma (warm-started)
until the constraint residual clears the feasibility threshold or the
doubling budget runs out.

Step 2 relaxes the result to static equilibrium under gravity (see
``relax``), detects fall-apart conditions, and assembles the SolveReport.
"""

from __future__ import annotations

import time

import numpy as np

from fabhal.frames import Frame, rotation_angle_between
from fabhal.solver.config import SolverConfig
from fabhal.solver.feasibility import cycle_active_slots, solve_cycle_feasibility
from fabhal.solver.powell import powell_minimize
from fabhal.solver.relax import relax_under_gravity
from fabhal.solver.report import SolveReport, SolveStatus

__all__ = ["user_objective", "solve_step1", "solve_assembly"]


def user_objective(assembly, x: np.ndarray | None = None, q=None) -> float:
    """Squared distance of the target part from its goal pose.

    Position error in mm plus the geodesic orientation angle scaled by the
    configured mm-per-radian factor; zero iff the target sits exactly at the
    goal.
    """
    if assembly.target_id is None:
        raise ValueError("assembly has no target part")
    goal = assembly.instances[assembly.target_id].goal_frame
    if q is None:
        q = assembly.forward_kinematics(x)
    R, p = q[assembly.target_id]
    Rg, pg = goal.to_rp()
    dp = p - pg
    angle = rotation_angle_between(R, Rg)
    s = assembly.orientation_scale
    return float(dp @ dp) + (s * angle) ** 2


def solve_step1(
    assembly, config: SolverConfig | None = None
) -> tuple[np.ndarray, float, dict]:
    """Minimize f_obj + sigma (C_m + C); returns (x_feas, residual, stats)."""
    config = config or SolverConfig()
    x = assembly.get_x()
    if assembly.ndofs == 0:
        resid = assembly.cycle_residual_sum(None) + assembly.multi_connection_penalty(None)
        return x, resid, {"sigma_rounds": 0, "iterations": 0, "evaluations": 0}

    lo, hi, periodic = assembly.x_min, assembly.x_max, assembly.x_periodic
    sigma = config.sigma_initial
    iters = 0
    evals = 0
    rounds = 0
    best_x = x.copy()
    best_resid = np.inf

    target_id = assembly.target_id
    goal = assembly.instances[target_id].goal_frame
    Rg, pg = goal.to_rp()
    s = assembly.orientation_scale

    def objective_terms(z):
        q = assembly.forward_kinematics(z)
        R, p = q[target_id]
        dp = p - pg
        angle = rotation_angle_between(R, Rg)
        fobj = float(dp @ dp) + (s * angle) ** 2
        resid = assembly.cycle_residual_sum(z, q) + assembly.multi_connection_penalty(z)
        return fobj, resid

    for round_idx in range(config.sigma_doublings_max + 1):
        rounds = round_idx + 1

        def penalized(z, _sigma=sigma):
            fobj, resid = objective_terms(z)
            return fobj + _sigma * resid

        res = powell_minimize(
            penalized,
            x,
            lo,
            hi,
            periodic,
            max_iter=config.powell_max_iter,
            ftol=config.powell_ftol,
            line_tol=config.powell_line_tol,
        )
        iters += res.iterations
        evals += res.evaluations
        x = assembly.wrap_x(res.x)
        _, resid = objective_terms(x)
        if resid < best_resid:
            best_resid, best_x = resid, x.copy()
        if resid <= config.feasibility_threshold:
            break
        sigma *= 2.0
    stats = {"sigma_rounds": rounds, "iterations": iters, "evaluations": evals}
    return best_x, best_resid, stats


def _frames_json(assembly, q) -> dict:
    out = {}
    for iid, (R, p) in q.items():
        out[iid] = Frame.from_rp(R, p).to_json()
    return out


def _x_json(assembly) -> dict:
    out = {}
    for idx, c in enumerate(assembly.connections):
        ext = np.concatenate(
            [
                c.prim_a.to_external(c.dof_values[: c.na]),
                c.prim_b.to_external(c.dof_values[c.na :]),
            ]
        )
        out[f"{c.a.key()}|{c.b.key()}"] = [round(float(v), 12) for v in ext]
    return out


def solve_assembly(
    assembly,
    config: SolverConfig | None = None,
    step1_only: bool = False,
) -> SolveReport:
    """Full two-step solve of a valid assembly."""
    config = config or SolverConfig()
    if not assembly.is_valid():
        raise ValueError(
            "assembly is not valid: environment and target must be connected"
        )
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    notes: list[str] = []
    iterations: dict[str, int] = {}

    # make sure cycles start feasible (connect() normally guarantees this,
    # but programmatically-built assemblies may arrive unsolved)
    if assembly.n_cycles and assembly.cycle_residual_sum(None) > config.feasibility_threshold:
        feas = solve_cycle_feasibility(assembly, config, cycle_active_slots(assembly), rng=rng)
        iterations["feasibility_restarts"] = feas.restarts_used
        if not feas.ok:
            q = assembly.forward_kinematics()
            report = SolveReport(
                status=SolveStatus.FEASIBILITY_FAILED,
                x=_x_json(assembly),
                q=_frames_json(assembly, q),
                objective=user_objective(assembly, None, q),
                cycle_residual=feas.residual,
                multi_connection_penalty=assembly.multi_connection_penalty(None),
                connection_residual_sum=feas.residual,
                energy=0.0,
                iterations=iterations,
                wall_time_s=time.perf_counter() - t0,
                notes=["cycle feasibility failed"],
            )
            return report
        assembly.set_x(feas.x)

    x_feas, resid1, stats1 = solve_step1(assembly, config)
    iterations.update({f"step1_{k}": v for k, v in stats1.items()})
    assembly.set_x(x_feas)
    if resid1 > config.feasibility_threshold:
        notes.append(
            f"step-1 constraint residual {resid1:.3e} above threshold after "
            f"{stats1['sigma_rounds']} sigma rounds; passing best configuration onward"
        )

    if step1_only:
        q = assembly.forward_kinematics()
        return SolveReport(
            status=SolveStatus.SOLVED,
            x=_x_json(assembly),
            q=_frames_json(assembly, q),
            objective=user_objective(assembly, None, q),
            cycle_residual=assembly.cycle_residual_sum(None),
            multi_connection_penalty=assembly.multi_connection_penalty(None),
            connection_residual_sum=_connection_residual_sum(assembly, q),
            energy=0.0,
            iterations=iterations,
            wall_time_s=time.perf_counter() - t0,
            notes=notes + ["step 1 only: gravity relaxation skipped"],
        )

    problem, result, flags, x_final, q_final, polish_ok = relax_under_gravity(
        assembly, assembly.get_x(), config, rng=rng
    )
    iterations["newton_iterations"] = result.iterations
    assembly.set_x(x_final)

    # non-increasing energy across accepted steps is part of the contract
    hist = result.energy_history
    if any(b > a + 1e-9 for a, b in zip(hist, hist[1:])):
        notes.append("energy history was not monotone; solver accepted an ascent step")

    cycle_c = assembly.cycle_residual_sum(None)
    conn_sum = _connection_residual_sum(assembly, q_final)
    cm = assembly.multi_connection_penalty(None)
    energy = problem.potential(q_final)

    active = {}
    for xi, e in enumerate(assembly.dof_entries):
        zi = problem.nq + xi
        if result.active_lower[zi]:
            active[f"{e.owner.key()}.{e.name}"] = "lower"
        elif result.active_upper[zi]:
            active[f"{e.owner.key()}.{e.name}"] = "upper"

    if flags:
        status = SolveStatus.FALLS_APART
    elif not result.converged:
        status = SolveStatus.STALLED
        notes.append("relaxation hit the iteration cap before the gradient tolerance")
    elif not polish_ok or cycle_c > config.feasibility_threshold:
        status = SolveStatus.FEASIBILITY_FAILED
        notes.append("post-relaxation cycle polish failed to re-close the cycles")
    else:
        status = SolveStatus.SOLVED

    return SolveReport(
        status=status,
        x=_x_json(assembly),
        q=_frames_json(assembly, q_final),
        objective=user_objective(assembly, None, q_final),
        cycle_residual=cycle_c,
        multi_connection_penalty=cm,
        connection_residual_sum=conn_sum,
        energy=energy,
        active_set=active,
        fall_apart=flags,
        iterations=iterations,
        wall_time_s=time.perf_counter() - t0,
        notes=notes,
    )


def _connection_residual_sum(assembly, q) -> float:
    total = 0.0
    for j in range(len(assembly.connections)):
        r = assembly.connection_residual(q, None, j)
        total += float(r @ r)
    return total
