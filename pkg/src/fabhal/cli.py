"""Command line interface: validate, solve, sweep, serve.

Exit codes are a stable contract:
  0  success / Solved
  1  program diagnostics (parse or elaboration failure)
  2  I/O or usage error
  3  feasibility failed
  4  assembly falls apart
  5  solver stalled
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from fabhal.dsl import elaborate, instantiate_template, parse
from fabhal.parts import load_bundled_library, load_library
from fabhal.scene import export_scene
from fabhal.solver import SolverConfig, load_config, solve_assembly
from fabhal.solver.report import SolveStatus
from fabhal.solver.sweep import parametric_sweep

_STATUS_EXIT = {
    SolveStatus.SOLVED: 0,
    SolveStatus.FEASIBILITY_FAILED: 3,
    SolveStatus.FALLS_APART: 4,
    SolveStatus.STALLED: 5,
}


def _load_library_opt(library_path: str | None):
    if library_path:
        return load_library(library_path)
    return load_bundled_library()


def _read_program(path: str, as_json: bool):
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        _fail_io(str(exc), as_json)
    result = parse(text)
    if not result.ok or result.program is None:
        _emit_diags(result.diagnostics, as_json)
        sys.exit(1)
    return result


def _emit_diags(diags, as_json: bool):
    if as_json:
        click.echo(json.dumps({"diagnostics": [d.to_json() for d in diags]}, indent=2))
    else:
        for d in diags:
            click.echo(str(d), err=True)


def _fail_io(message: str, as_json: bool):
    if as_json:
        click.echo(json.dumps({"error": message}))
    else:
        click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _config_from(config_path, seed) -> SolverConfig:
    try:
        cfg = load_config(config_path) if config_path else SolverConfig()
    except (OSError, ValueError) as exc:
        _fail_io(str(exc), False)
    if seed is not None:
        cfg = cfg.with_overrides(seed=seed)
    return cfg


def _parse_binding(pairs: tuple[str, ...]) -> dict:
    binding = {}
    for pair in pairs:
        if "=" not in pair:
            _fail_io(f"binding {pair!r} must look like name=value", False)
        k, v = pair.split("=", 1)
        try:
            binding[k] = float(v)
        except ValueError:
            binding[k] = v
    return binding


@click.group()
def main():
    """Design and solve rigid fixture hacks."""


@main.command()
@click.argument("file", type=click.Path())
@click.option("--library", "library_path", type=click.Path(), help="Part library JSON.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable diagnostics.")
def validate(file, library_path, as_json):
    """Parse and elaborate a program; exit 0 when clean."""
    result = _read_program(file, as_json)
    program = result.program
    try:
        lib = _load_library_opt(library_path)
    except OSError as exc:
        _fail_io(str(exc), as_json)
    if program.is_template:
        # validate the template surface only: a default instantiation
        binding = {}
        for p in program.params:
            dom = p.domain
            binding[p.name] = dom.values[0] if hasattr(dom, "values") else dom.lower
        program = instantiate_template(program, binding)
    ela = elaborate(program, lib)
    diags = list(result.diagnostics) + ela.diagnostics
    _emit_diags(diags, as_json)
    if not ela.ok:
        sys.exit(1)
    if as_json:
        pass
    else:
        click.echo(f"ok: {len(ela.assembly.instances)} instances, "
                   f"{len(ela.assembly.connections)} connections, "
                   f"{'valid' if ela.assembly.is_valid() else 'not yet solvable'}")


@main.command()
@click.argument("file", type=click.Path())
@click.option("--library", "library_path", type=click.Path(), help="Part library JSON.")
@click.option("--config", "config_path", type=click.Path(), help="Solver config TOML/JSON.")
@click.option("--seed", type=int, default=None, help="Random seed override.")
@click.option("--report", "report_path", type=click.Path(), help="Write the report JSON here.")
@click.option("--scene", "scene_path", type=click.Path(), help="Write a glTF scene here.")
@click.option("--step1-only", is_flag=True, help="Stop after the pose-objective step.")
@click.option("--bind", multiple=True, help="Template binding name=value (repeatable).")
def solve(file, library_path, config_path, seed, report_path, scene_path, step1_only, bind):
    """Solve a program and report the relaxed configuration."""
    result = _read_program(file, False)
    program = result.program
    cfg = _config_from(config_path, seed)
    try:
        lib = _load_library_opt(library_path)
    except OSError as exc:
        _fail_io(str(exc), False)
    if program.is_template:
        try:
            program = instantiate_template(program, _parse_binding(bind))
        except ValueError as exc:
            _fail_io(str(exc), False)
    elif bind:
        _fail_io("--bind given but the program declares no parameters", False)
    ela = elaborate(program, lib, cfg)
    if not ela.ok:
        _emit_diags(ela.diagnostics, False)
        sys.exit(1)
    if not ela.assembly.is_valid():
        click.echo("error: environment and target are not connected", err=True)
        sys.exit(1)
    report = solve_assembly(ela.assembly, cfg, step1_only=step1_only)
    payload = report.to_json()
    if report_path:
        Path(report_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if scene_path:
        export_scene(ela.assembly, scene_path, report.q)
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    sys.exit(_STATUS_EXIT[report.status])


@main.command()
@click.argument("file", type=click.Path())
@click.option("--library", "library_path", type=click.Path(), help="Part library JSON.")
@click.option("--config", "config_path", type=click.Path(), help="Solver config TOML/JSON.")
@click.option("--seed", type=int, default=None, help="Random seed override.")
@click.option("--group-by", default=None, help="Parameter whose values partition the sweep.")
@click.option("--parallel", type=int, default=None, help="Worker processes.")
@click.option("--csv", "csv_path", type=click.Path(), help="Write ranked rows as CSV.")
@click.option("--out", "json_path", type=click.Path(), help="Write the full result JSON.")
def sweep(file, library_path, config_path, seed, group_by, parallel, csv_path, json_path):
    """Enumerate and solve a template's variants; rank by relaxed objective."""
    result = _read_program(file, False)
    program = result.program
    if not program.is_template:
        _fail_io("program declares no parameters to sweep", False)
    cfg = _config_from(config_path, seed)
    try:
        lib = _load_library_opt(library_path)
    except OSError as exc:
        _fail_io(str(exc), False)
    sweep_result = parametric_sweep(
        program, cfg, group_by=group_by, library=lib, workers=parallel
    )
    if csv_path:
        import csv as _csv

        with open(csv_path, "w", newline="") as fh:
            names = sorted({k for row in sweep_result.rows for k in row.binding})
            w = _csv.writer(fh)
            w.writerow(["group", *names, "status", "objective"])
            for row in sweep_result.ranked():
                w.writerow(
                    [row.group or "", *(row.binding.get(n, "") for n in names), row.status, row.objective]
                )
    payload = sweep_result.to_json()
    if json_path:
        Path(json_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    winners = {k: {"binding": v.binding, "objective": v.objective, "status": v.status}
               for k, v in sweep_result.winners.items()}
    click.echo(json.dumps({"variants_per_group": sweep_result.variants_per_group,
                           "winners": winners}, indent=2, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1", envvar="FABHAL_HOST", show_default=True)
@click.option("--port", default=8765, envvar="FABHAL_PORT", show_default=True)
@click.option("--library", "library_path", type=click.Path(), envvar="FABHAL_LIBRARY")
@click.option("--config", "config_path", type=click.Path(), envvar="FABHAL_CONFIG")
def serve(host, port, library_path, config_path):
    """Run the design-session HTTP service."""
    import uvicorn

    from fabhal.service import create_app

    cfg = _config_from(config_path, None)
    try:
        lib = _load_library_opt(library_path)
    except OSError as exc:
        _fail_io(str(exc), False)
    uvicorn.run(create_app(lib, cfg), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
