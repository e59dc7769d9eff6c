"""Canonical text for protocol programs.

One statement per line, single spaces around binary operators and ``=``,
parentheses only where precedence requires them, comments on their own line
just above the statement they belong to.
"""
from __future__ import annotations

from .ast import (
    AssertStmt,
    BiasStmt,
    BinOp,
    BranchStmt,
    Const,
    FluxStmt,
    GateStmt,
    MeasureStmt,
    Neg,
    Num,
    PrepareStmt,
    ProtocolProgram,
    SelectStmt,
)

__all__ = ["format_program", "format_expr", "format_number"]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY = 3
_ATOM = 4


def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    text = repr(value)
    if "e" in text:
        mantissa, exp = text.split("e")
        text = f"{mantissa}e{int(exp)}"
    return text


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Num) and e.value < 0):
        return _UNARY
    return _ATOM


def format_expr(e) -> str:
    if isinstance(e, Num):
        if e.value < 0:
            return "-" + format_number(-e.value)
        return format_number(e.value)
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        return "-" + (f"({inner})" if _prec(e.operand) < _UNARY else inner)
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = format_expr(e.left)
        if _prec(e.left) < p:
            left = f"({left})"
        right = format_expr(e.right)
        # the tree is left-associative, so an equal-precedence right child keeps its parentheses
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


def _stmt(s) -> str:
    if isinstance(s, FluxStmt):
        return f"flux {s.region} = {format_expr(s.expr)}"
    if isinstance(s, BiasStmt):
        return f"bias = {format_expr(s.expr)}"
    if isinstance(s, SelectStmt):
        return f"select expect {s.expect}"
    if isinstance(s, GateStmt):
        return f"gate {s.name} {s.qubit}"
    if isinstance(s, MeasureStmt):
        return f"measure {s.qubit} in {s.basis} -> {s.binding}"
    if isinstance(s, BranchStmt):
        return f"if {s.binding} == {s.outcome} then {_stmt(s.body)}"
    if isinstance(s, PrepareStmt):
        return f"prepare {s.qubit} |{s.ket}>"
    if isinstance(s, AssertStmt):
        return f'assert_state "{s.reference}" tol {format_number(s.tol)}'
    raise TypeError(f"not a statement node: {s!r}")


def _body_comments(s) -> list:
    # comments on a branch body re-attach to the branch when printed in front of it
    out = []
    while isinstance(s, BranchStmt):
        out.extend(s.body.comments)
        s = s.body
    return out


def format_program(program: ProtocolProgram) -> str:
    lines = list(program.header_comments)
    if program.n_qubits is None:
        if program.statements:
            raise ValueError("a program with statements needs a qubit count")
        lines.extend(program.trailing_comments)
        return "\n".join(lines) + ("\n" if lines else "")
    lines.append(f"qubits {program.n_qubits}")
    for s in program.statements:
        lines.extend(s.comments)
        lines.extend(_body_comments(s))
        lines.append(_stmt(s))
    lines.extend(program.trailing_comments)
    return "\n".join(lines) + "\n"
