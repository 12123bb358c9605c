"""Executing a parsed program against the assembly API."""

from __future__ import annotations

from fabhal.assembly import Assembly, AssemblyError, Endpoint
from fabhal.connect import connect
from fabhal.dsl.ast import (
    AddStmt,
    ConnectStmt,
    EndWithStmt,
    ParamDecl,
    PartDecl,
    Program,
    RepeatBlock,
    SourceDiagnostic,
)
from fabhal.frames import Frame
from fabhal.parts import PartLibrary, SchemaError
from fabhal.solver.config import SolverConfig

__all__ = ["ElaborationResult", "elaborate"]


class ElaborationResult:
    def __init__(self, assembly: Assembly, diagnostics: list[SourceDiagnostic]):
        self.assembly = assembly
        self.diagnostics = diagnostics

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


def _const(e, diags, span, what: str) -> float | None:
    from fabhal.dsl.template import TemplateError, _eval_expr

    try:
        return _eval_expr(e, {}, what)
    except TemplateError:
        diags.append(
            SourceDiagnostic(
                "error",
                f"{what} must be a constant here",
                span,
                hint="instantiate the template before elaborating",
            )
        )
        return None


def _literal_frame(frame, diags, span) -> Frame | None:
    vals = []
    for e in list(frame.position) + list(frame.orientation):
        v = _const(e, diags, span, "frame value")
        if v is None:
            return None
        vals.append(v)
    return Frame(tuple(vals[:3]), tuple(vals[3:]))


def elaborate(
    program: Program,
    library: PartLibrary,
    config: SolverConfig | None = None,
) -> ElaborationResult:
    """Execute the program's statements in order.

    Connect rejections become diagnostics carrying the solver's typed verdict
    and the statement's source span; the (possibly partial) assembly is
    always returned for inspection.
    """
    config = config or SolverConfig()
    asm = Assembly()
    diags: list[SourceDiagnostic] = []
    declared: dict[str, tuple[str, dict]] = {}

    def resolve_part(decl: PartDecl):
        pid = decl.part_id.text()
        if pid not in library:
            diags.append(
                SourceDiagnostic(
                    "error", f"unknown part {pid!r}", decl.span,
                    hint="not in the loaded part library",
                )
            )
            return None
        overrides = {}
        for key, expr in decl.overrides:
            v = _const(expr, diags, decl.span, f"override {key!r}")
            if v is None:
                return None
            overrides[key] = v
        try:
            return library.instantiate(pid, overrides or None), overrides
        except (SchemaError, Exception) as exc:
            diags.append(SourceDiagnostic("error", str(exc), decl.span))
            return None

    def instance_name(pattern, span) -> str | None:
        if not pattern.is_literal:
            diags.append(
                SourceDiagnostic(
                    "error",
                    f"unresolved parameter in name {pattern.text()!r}",
                    span,
                    hint="instantiate the template before elaborating",
                )
            )
            return None
        return pattern.text()

    for stmt in program.statements:
        if isinstance(stmt, (ParamDecl, RepeatBlock)):
            diags.append(
                SourceDiagnostic(
                    "error",
                    "templates must be instantiated before elaboration",
                    stmt.span,
                )
            )
            return ElaborationResult(asm, diags)
        if isinstance(stmt, PartDecl):
            name = instance_name(stmt.name, stmt.span)
            if name is None:
                continue
            resolved = resolve_part(stmt)
            if resolved is None:
                continue
            part, overrides = resolved
            if name in declared:
                diags.append(
                    SourceDiagnostic("error", f"part name {name!r} already declared", stmt.span)
                )
                continue
            declared[name] = (part, overrides)
            continue
        if isinstance(stmt, AddStmt):
            name = instance_name(stmt.instance, stmt.span)
            if name is None:
                continue
            if name not in declared:
                diags.append(
                    SourceDiagnostic("error", f"unknown part {name!r}", stmt.span)
                )
                continue
            frame = _literal_frame(stmt.frame, diags, stmt.span)
            if frame is None:
                continue
            part, overrides = declared[name]
            if stmt.primitive is not None and not _has_prim(part, stmt.primitive):
                diags.append(
                    SourceDiagnostic(
                        "error",
                        f"part {part.id!r} has no primitive {stmt.primitive!r}",
                        stmt.span,
                    )
                )
                continue
            try:
                asm.add(name, part, frame, overrides)
            except AssemblyError as exc:
                diags.append(SourceDiagnostic("error", str(exc), stmt.span))
            continue
        if isinstance(stmt, ConnectStmt):
            eps = []
            bad = False
            for pattern, prim in (stmt.a, stmt.b):
                name = instance_name(pattern, stmt.span)
                if name is None:
                    bad = True
                    break
                if name not in declared:
                    diags.append(
                        SourceDiagnostic("error", f"unknown part {name!r}", stmt.span)
                    )
                    bad = True
                    break
                part, overrides = declared[name]
                if not _has_prim(part, prim):
                    diags.append(
                        SourceDiagnostic(
                            "error",
                            f"part {part.id!r} has no primitive {prim!r}",
                            stmt.span,
                        )
                    )
                    bad = True
                    break
                if name not in asm.instances:
                    asm.declare(name, part, overrides)
                eps.append(Endpoint(name, prim))
            if bad:
                continue
            res = connect(asm, eps[0], eps[1], stmt.alignment, stmt.is_fixed, config)
            if not res.ok:
                diags.append(
                    SourceDiagnostic(
                        "error",
                        f"connection rejected: {res.verdict.value}",
                        stmt.span,
                        hint=res.detail,
                    )
                )
            continue
        if isinstance(stmt, EndWithStmt):
            name = instance_name(stmt.instance, stmt.span)
            if name is None:
                continue
            if name not in declared:
                diags.append(
                    SourceDiagnostic("error", f"unknown part {name!r}", stmt.span)
                )
                continue
            part, overrides = declared[name]
            if stmt.primitive is not None and not _has_prim(part, stmt.primitive):
                diags.append(
                    SourceDiagnostic(
                        "error",
                        f"part {part.id!r} has no primitive {stmt.primitive!r}",
                        stmt.span,
                    )
                )
                continue
            frame = _literal_frame(stmt.frame, diags, stmt.span)
            if frame is None:
                continue
            try:
                asm.end_with(name, part, frame, overrides)
            except AssemblyError as exc:
                diags.append(SourceDiagnostic("error", str(exc), stmt.span))
            continue
    return ElaborationResult(asm, diags)


def _has_prim(part, prim_id: str) -> bool:
    return any(p.id == prim_id for p in part.primitives)
