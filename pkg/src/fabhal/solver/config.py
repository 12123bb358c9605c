"""Solver configuration with file/flag loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["SolverConfig", "load_config"]


@dataclass(frozen=True)
class SolverConfig:
    # penalty schedule for the user-objective step
    sigma_initial: float = 100.0
    sigma_doublings_max: int = 5
    # cycle feasibility
    feasibility_threshold: float = 1e-6
    restarts: int = 16
    stall_window: int = 10
    stall_slope: float = 0.1
    # read "slope < 0.1" literally (aborts any slow decrease) instead of
    # |slope| < 0.1; off by default
    stall_literal: bool = False
    # residual scaling: mm per radian in 6-vector residuals and in f_obj
    orientation_scale: float = 100.0
    seed: int = 0
    # gravity relaxation
    sigma_relax: float = 100.0
    include_multi_connection_in_relax: bool = True
    gravity: float = 9.81  # m/s^2; masses g, lengths mm -> energies in uJ
    newton_max_iter: int = 400
    newton_grad_tol: float = 1e-4
    connection_residual_tol: float = 1e-3
    # outward energy slope (uJ per DoF unit) at an open bound that counts as
    # the assembly sliding apart; real falls register orders of magnitude
    # above this, numerical noise orders below
    fall_apart_grad_tol: float = 0.1
    # Powell budgets
    powell_max_iter: int = 40
    powell_ftol: float = 1e-8
    powell_line_tol: float = 3e-7
    # parallel sweep workers (None = serial)
    sweep_workers: int | None = None

    def with_overrides(self, **kwargs) -> "SolverConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self

    def __post_init__(self):
        for name in (
            "sigma_initial",
            "feasibility_threshold",
            "restarts",
            "stall_window",
            "stall_slope",
            "orientation_scale",
            "sigma_relax",
            "gravity",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"SolverConfig.{name} must be positive")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path: str | Path | None = None, **overrides) -> SolverConfig:
    """Build a config from an optional TOML/JSON file plus keyword overrides."""
    data: dict = {}
    if path is not None:
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix.lower() == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
        known = {f.name for f in fields(SolverConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig(**data)
