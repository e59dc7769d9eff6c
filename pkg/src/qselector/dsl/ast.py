"""Syntax tree for ``.qsp`` protocol files.

Spans are excluded from equality so that a program and its reformatted
re-parse compare equal.  Comments take part in equality: the formatter is
expected to keep them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int  # byte offsets into the UTF-8 source
    end: int

    def contains(self, other: "SourceSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def join(self, other: "SourceSpan") -> "SourceSpan":
        first = self if self.start <= other.start else other
        return SourceSpan(first.line, first.column, min(self.start, other.start), max(self.end, other.end))


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Const:
    name: str
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = _span()


Expr = Union[Num, Const, Neg, BinOp]


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class FluxStmt:
    region: str  # e.g. "s01"
    expr: Expr
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class BiasStmt:
    expr: Expr
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class SelectStmt:
    expect: str
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class GateStmt:
    name: str
    qubit: int
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()
    qubit_span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class MeasureStmt:
    qubit: int
    basis: str  # "pm" or "comp"
    binding: str
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()
    qubit_span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class BranchStmt:
    binding: str
    outcome: str
    body: "Stmt"
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class PrepareStmt:
    qubit: int
    ket: str  # "0", "1", "+" or "-"
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()
    qubit_span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class AssertStmt:
    reference: str
    tol: float
    comments: tuple = ()
    span: Optional[SourceSpan] = _span()


Stmt = Union[FluxStmt, BiasStmt, SelectStmt, GateStmt, MeasureStmt, BranchStmt, PrepareStmt, AssertStmt]


@dataclass(frozen=True)
class ProtocolProgram:
    n_qubits: Optional[int]  # None only for an empty program
    statements: tuple = ()
    header_comments: tuple = ()
    trailing_comments: tuple = ()
    span: Optional[SourceSpan] = _span()
    header_span: Optional[SourceSpan] = _span()


def walk_expr(expr: Expr):
    yield expr
    if isinstance(expr, Neg):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, BinOp):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
