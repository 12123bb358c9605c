"""Parametric program instantiation: substitute bindings, unroll repeats."""

from __future__ import annotations

import numpy as np

from fabhal.dsl.ast import (
    AddStmt,
    BinaryOp,
    ConnectStmt,
    EndWithStmt,
    FrameLiteral,
    NamePattern,
    Number,
    ParamDecl,
    ParamRef,
    PartDecl,
    Program,
    RepeatBlock,
    SetDomain,
)

__all__ = [
    "TemplateError",
    "MissingBinding",
    "BindingOutOfRange",
    "instantiate_template",
    "enumerate_grid",
]


class TemplateError(ValueError):
    pass


class MissingBinding(TemplateError):
    pass


class BindingOutOfRange(TemplateError):
    pass


def _check_binding(decl: ParamDecl, value) -> object:
    d = decl.domain
    if isinstance(d, SetDomain):
        sval = str(value)
        if sval not in d.values:
            raise BindingOutOfRange(
                f"param {decl.name!r}: {value!r} not in {{{', '.join(d.values)}}}"
            )
        return sval
    v = float(value)
    if not d.lower - 1e-9 <= v <= d.upper + 1e-9:
        raise BindingOutOfRange(
            f"param {decl.name!r}: {value} outside [{d.lower}, {d.upper}]"
        )
    return v


def _eval_expr(e, env: dict, where: str) -> float:
    if isinstance(e, Number):
        return e.value
    if isinstance(e, ParamRef):
        if e.name not in env:
            raise MissingBinding(f"{where}: no binding for parameter {e.name!r}")
        v = env[e.name]
        if isinstance(v, str):
            raise TemplateError(
                f"{where}: parameter {e.name!r} is a set value and cannot be used "
                "in arithmetic"
            )
        return float(v)
    if isinstance(e, BinaryOp):
        a = _eval_expr(e.left, env, where)
        b = _eval_expr(e.right, env, where)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise TemplateError(f"{where}: division by zero")
            return a / b
    raise TemplateError(f"{where}: cannot evaluate {e!r}")


def _format_value(v: float) -> str:
    if isinstance(v, str):
        return v
    if float(v) == int(v):
        return str(int(v))
    return repr(float(v))


def _subst_name(n: NamePattern, env: dict, where: str) -> NamePattern:
    parts: list = []
    for p in n.parts:
        if isinstance(p, str):
            parts.append(p)
        elif isinstance(p, ParamRef):
            if p.name not in env:
                raise MissingBinding(f"{where}: no binding for parameter {p.name!r}")
            parts.append(_format_value(env[p.name]))
        else:
            parts.append(_format_value(_eval_expr(p, env, where)))
    return NamePattern.literal("".join(parts))


def _subst_expr(e, env: dict, where: str) -> Number:
    return Number(_eval_expr(e, env, where))


def _subst_frame(f: FrameLiteral, env: dict, where: str) -> FrameLiteral:
    return FrameLiteral(
        tuple(_subst_expr(v, env, where) for v in f.position),
        tuple(_subst_expr(v, env, where) for v in f.orientation),
    )


def _subst_stmt(stmt, env: dict, out: list) -> None:
    where = f"line {stmt.span.line}"
    if isinstance(stmt, ParamDecl):
        return  # consumed by the binding
    if isinstance(stmt, PartDecl):
        out.append(
            PartDecl(
                _subst_name(stmt.name, env, where),
                _subst_name(stmt.part_id, env, where),
                tuple((k, _subst_expr(v, env, where)) for k, v in stmt.overrides),
                stmt.span,
            )
        )
        return
    if isinstance(stmt, AddStmt):
        out.append(
            AddStmt(
                _subst_name(stmt.instance, env, where),
                stmt.primitive,
                _subst_frame(stmt.frame, env, where),
                stmt.span,
            )
        )
        return
    if isinstance(stmt, EndWithStmt):
        out.append(
            EndWithStmt(
                _subst_name(stmt.instance, env, where),
                stmt.primitive,
                _subst_frame(stmt.frame, env, where),
                stmt.span,
            )
        )
        return
    if isinstance(stmt, ConnectStmt):
        out.append(
            ConnectStmt(
                (_subst_name(stmt.a[0], env, where), stmt.a[1]),
                (_subst_name(stmt.b[0], env, where), stmt.b[1]),
                stmt.alignment,
                stmt.is_fixed,
                stmt.span,
            )
        )
        return
    if isinstance(stmt, RepeatBlock):
        lo = _eval_expr(stmt.lower, env, where)
        hi = _eval_expr(stmt.upper, env, where)
        if abs(lo - round(lo)) > 1e-9 or abs(hi - round(hi)) > 1e-9:
            raise TemplateError(f"{where}: repeat bounds must be integers")
        lo_i, hi_i = int(round(lo)), int(round(hi))
        # hi < lo is an empty range (used for tail links in length-1 chains)
        for k in range(lo_i, hi_i + 1):
            inner = dict(env)
            inner[stmt.var] = float(k)
            for s in stmt.body:
                _subst_stmt(s, inner, out)
        return
    raise TemplateError(f"{where}: cannot instantiate {type(stmt).__name__}")


def instantiate_template(program: Program, binding: dict) -> Program:
    """Resolve all parameters and unroll repeats into a plain program."""
    env: dict = {}
    declared = {p.name: p for p in program.params}
    for name, decl in declared.items():
        if name not in binding:
            raise MissingBinding(f"no binding for parameter {name!r}")
        env[name] = _check_binding(decl, binding[name])
    extra = set(binding) - set(declared)
    if extra:
        raise TemplateError(f"bindings for undeclared parameters: {sorted(extra)}")
    out: list = []
    for stmt in program.statements:
        _subst_stmt(stmt, env, out)
    suffix = "_".join(
        f"{k}_{_format_value(env[k])}" for k in sorted(env)
    )
    inst = Program(f"{program.name}__{suffix}" if suffix else program.name)
    inst.statements = out
    return inst


def enumerate_grid(program: Program, group_by: str | None = None):
    """All bindings of a template's parameters.

    Returns ``(grid_params, group_values)``: the cartesian product of the
    non-grouped parameter domains as a list of dicts, and the values of the
    grouped parameter (or ``[None]``).  Range domains without a count are
    integer ranges.
    """
    decls = program.params
    names = [d.name for d in decls]
    if group_by is not None and group_by not in names:
        raise TemplateError(f"no parameter {group_by!r} to group by")
    axes: list[tuple[str, list]] = []
    group_values: list = [None]
    for d in decls:
        dom = d.domain
        if isinstance(dom, SetDomain):
            values = list(dom.values)
        elif dom.count is None:
            lo, hi = int(round(dom.lower)), int(round(dom.upper))
            values = [float(v) for v in range(lo, hi + 1)]
        else:
            values = [float(v) for v in np.linspace(dom.lower, dom.upper, dom.count)]
        if d.name == group_by:
            group_values = values
        else:
            axes.append((d.name, values))
    grid: list[dict] = [{}]
    for name, values in axes:
        grid = [dict(g, **{name: v}) for g in grid for v in values]
    return grid, group_values
