"""Numerical machinery: quick reject, cycle feasibility, two-step solve."""

from fabhal.solver.config import SolverConfig, load_config
from fabhal.solver.feasibility import (
    StallMonitor,
    cycle_active_slots,
    solve_cycle_feasibility,
)
from fabhal.solver.quick_reject import quick_reject, quick_reject_intervals
from fabhal.solver.relax import relax_under_gravity
from fabhal.solver.report import FallApartFlag, SolveReport, SolveStatus
from fabhal.solver.solve import solve_assembly, solve_step1, user_objective

__all__ = [
    "SolverConfig",
    "load_config",
    "StallMonitor",
    "cycle_active_slots",
    "solve_cycle_feasibility",
    "quick_reject",
    "quick_reject_intervals",
    "relax_under_gravity",
    "FallApartFlag",
    "SolveReport",
    "SolveStatus",
    "solve_assembly",
    "solve_step1",
    "user_objective",
]
