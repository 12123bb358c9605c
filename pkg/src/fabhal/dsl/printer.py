"""Canonical pretty-printer; parse(print(p)) is structurally p."""

from __future__ import annotations

from fabhal.dsl.ast import (
    AddStmt,
    ConnectStmt,
    EndWithStmt,
    FrameLiteral,
    NamePattern,
    ParamDecl,
    PartDecl,
    Program,
    RangeDomain,
    RepeatBlock,
    SetDomain,
    format_expr,
)

__all__ = ["print_program", "format_number"]


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


_expr = format_expr


def _name(n: NamePattern) -> str:
    return n.text()


def _frame(f: FrameLiteral) -> str:
    pos = ", ".join(_expr(v) for v in f.position)
    ypr = ", ".join(_expr(v) for v in f.orientation)
    return f"[{pos}], [{ypr}]"


def _ref(name: NamePattern, prim: str | None) -> str:
    return f"{_name(name)}.{prim}" if prim else _name(name)


def _stmt_lines(stmt, indent: str) -> list[str]:
    if isinstance(stmt, PartDecl):
        line = f"{indent}part {_name(stmt.name)}: {_name(stmt.part_id)}"
        if stmt.overrides:
            inner = ", ".join(f"{k}: {_expr(v)}" for k, v in stmt.overrides)
            line += f" {{ {inner} }}"
        return [line]
    if isinstance(stmt, AddStmt):
        return [f"{indent}add {_ref(stmt.instance, stmt.primitive)} at {_frame(stmt.frame)}"]
    if isinstance(stmt, EndWithStmt):
        return [
            f"{indent}end_with {_ref(stmt.instance, stmt.primitive)} at {_frame(stmt.frame)}"
        ]
    if isinstance(stmt, ConnectStmt):
        args = [_ref(*stmt.a), _ref(*stmt.b)]
        if stmt.alignment != "default":
            args.append(f"alignment={stmt.alignment}")
        if stmt.is_fixed:
            args.append("is_fixed=true")
        return [f"{indent}connect({', '.join(args)})"]
    if isinstance(stmt, ParamDecl):
        if isinstance(stmt.domain, SetDomain):
            vals = ", ".join(stmt.domain.values)
            return [f"{indent}param {stmt.name} in {{{vals}}}"]
        d: RangeDomain = stmt.domain
        line = (
            f"{indent}param {stmt.name} in "
            f"{format_number(d.lower)}..{format_number(d.upper)}"
        )
        if d.count is not None:
            line += f" count {d.count}"
        return [line]
    if isinstance(stmt, RepeatBlock):
        lines = [f"{indent}repeat {stmt.var} in {_expr(stmt.lower)}..{_expr(stmt.upper)} {{"]
        for inner in stmt.body:
            lines.extend(_stmt_lines(inner, indent + "    "))
        lines.append(f"{indent}}}")
        return lines
    raise TypeError(f"not a statement: {stmt!r}")


def print_program(program: Program) -> str:
    lines = [f"assembly {program.name}", ""]
    kinds = [type(s).__name__ for s in program.statements]
    for i, stmt in enumerate(program.statements):
        # blank line between statement groups of different kinds
        if i > 0 and kinds[i] != kinds[i - 1]:
            lines.append("")
        lines.extend(_stmt_lines(stmt, ""))
    return "\n".join(lines) + "\n"
