"""Solve outcome reporting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

__all__ = ["SolveStatus", "FallApartFlag", "SolveReport"]


class SolveStatus(Enum):
    SOLVED = "solved"
    FALLS_APART = "falls_apart"
    FEASIBILITY_FAILED = "feasibility_failed"
    STALLED = "stalled"


@dataclass(frozen=True)
class FallApartFlag:
    """A BOUNDED_AND_OPEN DoF pinned at a bound with an outward energy slope."""

    owner: str  # "instance.primitive"
    dof: str
    bound: str  # "lower" | "upper"
    gradient: float  # dE/dx at the optimum; sign points outward


@dataclass
class SolveReport:
    status: SolveStatus
    x: dict[str, list[float]]  # per-connection external-unit DoF values
    q: dict[str, dict]  # per-instance world frame {position, orientation}
    objective: float  # f_obj at the reported configuration
    cycle_residual: float  # C(x)
    multi_connection_penalty: float  # C_m(x)
    connection_residual_sum: float  # sum over j of |g_j(q, x)|^2
    energy: float  # E at the reported configuration (uJ-scale)
    active_set: dict[str, str] = field(default_factory=dict)  # dof key -> bound
    fall_apart: list[FallApartFlag] = field(default_factory=list)
    iterations: dict[str, int] = field(default_factory=dict)
    wall_time_s: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_json(self, include_timing: bool = True) -> dict:
        data = {
            "format": 1,
            "status": self.status.value,
            "x": self.x,
            "q": self.q,
            "objective": self.objective,
            "cycle_residual": self.cycle_residual,
            "multi_connection_penalty": self.multi_connection_penalty,
            "connection_residual_sum": self.connection_residual_sum,
            "energy": self.energy,
            "active_set": self.active_set,
            "fall_apart": [
                {
                    "owner": f.owner,
                    "dof": f.dof,
                    "bound": f.bound,
                    "gradient": f.gradient,
                }
                for f in self.fall_apart
            ],
            "iterations": self.iterations,
            "notes": self.notes,
        }
        if include_timing:
            data["wall_time_s"] = self.wall_time_s
        return data

    def canonical_json(self) -> str:
        """Deterministic serialization: timing excluded, stable key order."""
        return json.dumps(self.to_json(include_timing=False), sort_keys=True, separators=(",", ":"))
