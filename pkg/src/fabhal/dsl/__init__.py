"""Textual language: parser, printer, templates, elaboration."""

from fabhal.dsl.ast import Program, SourceDiagnostic
from fabhal.dsl.elaborate import ElaborationResult, elaborate
from fabhal.dsl.parser import ParseResult, parse
from fabhal.dsl.printer import print_program
from fabhal.dsl.template import (
    BindingOutOfRange,
    MissingBinding,
    TemplateError,
    enumerate_grid,
    instantiate_template,
)

__all__ = [
    "Program",
    "SourceDiagnostic",
    "ElaborationResult",
    "elaborate",
    "ParseResult",
    "parse",
    "print_program",
    "TemplateError",
    "MissingBinding",
    "BindingOutOfRange",
    "instantiate_template",
    "enumerate_grid",
]
