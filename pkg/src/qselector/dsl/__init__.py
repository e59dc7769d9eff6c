"""Protocol description language: parser, formatter, validator and interpreter."""
from .ast import ProtocolProgram, SourceSpan
from .formatter import format_expr, format_program
from .interpret import DSLValidationError, EvaluationError, compile_program, device_constants, evaluate, interpret
from .parser import DSLSyntaxError, parse, parse_expression
from .validate import Diagnostic, validate

format = format_program  # noqa: A001

__all__ = [
    "ProtocolProgram",
    "SourceSpan",
    "DSLSyntaxError",
    "DSLValidationError",
    "EvaluationError",
    "Diagnostic",
    "parse",
    "parse_expression",
    "format",
    "format_program",
    "format_expr",
    "validate",
    "evaluate",
    "compile_program",
    "device_constants",
    "interpret",
]
