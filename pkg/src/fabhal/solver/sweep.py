"""Parametric design sweeps: enumerate template variants, solve, rank.

Each grid point is instantiated, elaborated, and solved (both steps); rows
are ranked by the relaxed pose objective with failed variants last.  With a
group-by parameter the full grid runs once per group value and each group
reports a winner.  Workers solve variants in parallel; results merge by grid
index so the output is deterministic regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from fabhal.dsl.ast import Program
from fabhal.dsl.elaborate import elaborate
from fabhal.dsl.parser import parse
from fabhal.dsl.printer import print_program
from fabhal.dsl.template import TemplateError, enumerate_grid, instantiate_template
from fabhal.parts import PartLibrary, load_bundled_library
from fabhal.solver.config import SolverConfig
from fabhal.solver.solve import solve_assembly

__all__ = ["SweepRow", "SweepResult", "parametric_sweep"]

# step-1 effort is capped for sweeps: ranking needs the relaxed objective,
# not a fully polished intermediate
_SWEEP_OVERRIDES = {"powell_max_iter": 20}


@dataclass
class SweepRow:
    index: int
    binding: dict
    group: str | None
    status: str
    objective: float
    energy: float = 0.0
    detail: str = ""

    def sort_key(self):
        failed = self.status != "solved"
        return (failed, self.objective if math.isfinite(self.objective) else math.inf)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "binding": self.binding,
            "group": self.group,
            "status": self.status,
            "objective": self.objective,
            "energy": self.energy,
            "detail": self.detail,
        }


@dataclass
class SweepResult:
    rows: list[SweepRow]
    winners: dict[str, SweepRow] = field(default_factory=dict)
    variants_per_group: int = 0

    def ranked(self) -> list[SweepRow]:
        return sorted(self.rows, key=lambda r: (r.sort_key(), r.index))

    def to_json(self) -> dict:
        return {
            "variants_per_group": self.variants_per_group,
            "rows": [r.to_json() for r in self.ranked()],
            "winners": {k or "": v.to_json() for k, v in self.winners.items()},
        }


def _solve_variant(args) -> SweepRow:
    (index, text, binding, group, group_param, config_json) = args
    config = SolverConfig(**config_json)
    lib = load_bundled_library()
    full_binding = dict(binding)
    if group_param is not None:
        full_binding[group_param] = group
    result = parse(text)
    if not result.ok or result.program is None:
        return SweepRow(index, binding, group, "template_error", math.inf, detail="parse failed")
    try:
        inst = instantiate_template(result.program, full_binding)
    except TemplateError as exc:
        return SweepRow(index, binding, group, "template_error", math.inf, detail=str(exc))
    ela = elaborate(inst, lib, config)
    if not ela.ok:
        msgs = "; ".join(str(d) for d in ela.diagnostics)
        return SweepRow(index, binding, group, "elaboration_error", math.inf, detail=msgs)
    if not ela.assembly.is_valid():
        return SweepRow(
            index, binding, group, "invalid", math.inf, detail="environment and target not connected"
        )
    try:
        report = solve_assembly(ela.assembly, config)
    except Exception as exc:  # a variant failure must not abort the sweep
        return SweepRow(index, binding, group, "solver_error", math.inf, detail=str(exc))
    return SweepRow(
        index,
        binding,
        group,
        report.status.value,
        report.objective,
        report.energy,
        "; ".join(f.owner + "." + f.dof for f in report.fall_apart),
    )


def parametric_sweep(
    program: Program,
    config: SolverConfig | None = None,
    group_by: str | None = None,
    library: PartLibrary | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Instantiate and solve every grid point of a template.

    ``group_by`` names a declared parameter whose values partition the sweep;
    the full grid of the remaining parameters runs per group value and the
    lowest relaxed objective in each group wins.
    """
    config = (config or SolverConfig()).with_overrides(**_SWEEP_OVERRIDES)
    grid, group_values = enumerate_grid(program, group_by)
    text = print_program(program)
    cfg_json = config.to_json()

    tasks = []
    index = 0
    for group in group_values:
        for binding in grid:
            # deterministic per-variant seed, independent of worker count
            vcfg = dict(cfg_json)
            vcfg["seed"] = config.seed + 104729 * index
            tasks.append((index, text, binding, group, group_by, vcfg))
            index += 1

    workers = workers if workers is not None else config.sweep_workers
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_solve_variant, tasks, chunksize=1))
    else:
        rows = [_solve_variant(t) for t in tasks]
    rows.sort(key=lambda r: r.index)

    winners: dict[str, SweepRow] = {}
    for row in rows:
        key = row.group if row.group is not None else ""
        cur = winners.get(key)
        if cur is None or (row.sort_key(), row.index) < (cur.sort_key(), cur.index):
            winners[key] = row
    return SweepResult(rows=rows, winners=winners, variants_per_group=len(grid))
