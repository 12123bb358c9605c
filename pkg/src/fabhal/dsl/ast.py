"""Syntax tree for fixture-hack programs.

A program is a flat statement list: part declarations, one environment
``add``, ``connect`` statements, and at most one ``end_with``.  Parametric
templates additionally carry ``param`` declarations and ``repeat`` blocks;
instantiation resolves every parameter reference and unrolls repetition,
yielding a plain program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

__all__ = [
    "Span",
    "SourceDiagnostic",
    "Number",
    "ParamRef",
    "BinaryOp",
    "NumExpr",
    "NamePattern",
    "FrameLiteral",
    "PartDecl",
    "AddStmt",
    "ConnectStmt",
    "EndWithStmt",
    "RangeDomain",
    "SetDomain",
    "ParamDecl",
    "RepeatBlock",
    "Program",
]


@dataclass(frozen=True)
class Span:
    line: int  # 1-based
    col: int  # 1-based
    end_line: int
    end_col: int

    @classmethod
    def point(cls, line: int, col: int) -> "Span":
        return cls(line, col, line, col)

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class SourceDiagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span
    hint: str = ""

    def __str__(self) -> str:
        s = f"{self.span}: {self.severity}: {self.message}"
        return f"{s} ({self.hint})" if self.hint else s

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "message": self.message,
            "line": self.span.line,
            "col": self.span.col,
            "end_line": self.span.end_line,
            "end_col": self.span.end_col,
            "hint": self.hint,
        }


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class BinaryOp:
    op: str  # + - * /
    left: "NumExpr"
    right: "NumExpr"


NumExpr = Union[Number, ParamRef, BinaryOp]


def format_expr(e, parent_prec: int = 0) -> str:
    """Canonical text for a numeric expression."""
    if isinstance(e, Number):
        v = e.value
        return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(float(v))
    if isinstance(e, ParamRef):
        return f"${e.name}"
    if isinstance(e, BinaryOp):
        prec = {"+": 1, "-": 1, "*": 2, "/": 2}[e.op]
        if isinstance(e.left, Number) and e.left.value == 0.0 and e.op == "-":
            return f"-{format_expr(e.right, 3)}"
        s = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an expression: {e!r}")


@dataclass(frozen=True)
class NamePattern:
    """Identifier with interpolated segments, e.g. ``link$i`` or ``ring${i - 1}``."""

    parts: tuple

    @classmethod
    def literal(cls, name: str) -> "NamePattern":
        return cls((name,))

    @property
    def is_literal(self) -> bool:
        return all(isinstance(p, str) for p in self.parts)

    def text(self) -> str:
        out = []
        for p in self.parts:
            if isinstance(p, str):
                out.append(p)
            elif isinstance(p, ParamRef):
                out.append(f"${p.name}")
            else:
                out.append(f"${{{format_expr(p)}}}")
        return "".join(out)


# -- statements ----------------------------------------------------------------


@dataclass(frozen=True)
class FrameLiteral:
    position: tuple[NumExpr, NumExpr, NumExpr]
    orientation: tuple[NumExpr, NumExpr, NumExpr]


@dataclass(frozen=True)
class PartDecl:
    name: NamePattern
    part_id: NamePattern
    overrides: tuple[tuple[str, NumExpr], ...]
    span: Span


@dataclass(frozen=True)
class AddStmt:
    instance: NamePattern
    primitive: str | None  # optional ".prim" sugar; the frame poses the part
    frame: FrameLiteral
    span: Span


@dataclass(frozen=True)
class ConnectStmt:
    a: tuple[NamePattern, str]
    b: tuple[NamePattern, str]
    alignment: str  # "default" | "flip"
    is_fixed: bool
    span: Span


@dataclass(frozen=True)
class EndWithStmt:
    instance: NamePattern
    primitive: str | None
    frame: FrameLiteral
    span: Span


@dataclass(frozen=True)
class RangeDomain:
    lower: float
    upper: float
    count: int | None = None  # discretization; None = integer range


@dataclass(frozen=True)
class SetDomain:
    values: tuple[str, ...]


@dataclass(frozen=True)
class ParamDecl:
    name: str
    domain: RangeDomain | SetDomain
    span: Span


@dataclass(frozen=True)
class RepeatBlock:
    var: str
    lower: NumExpr
    upper: NumExpr
    body: tuple  # statements
    span: Span


Statement = Union[PartDecl, AddStmt, ConnectStmt, EndWithStmt, ParamDecl, RepeatBlock]


@dataclass
class Program:
    name: str
    statements: list = field(default_factory=list)

    @property
    def params(self) -> list[ParamDecl]:
        return [s for s in self.statements if isinstance(s, ParamDecl)]

    @property
    def is_template(self) -> bool:
        return any(isinstance(s, (ParamDecl, RepeatBlock)) for s in self.statements)

    def counts(self) -> dict[str, int]:
        from collections import Counter

        c = Counter(type(s).__name__ for s in self.statements)
        return dict(c)
