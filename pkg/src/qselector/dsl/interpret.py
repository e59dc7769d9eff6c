"""Expression evaluation and compilation of protocol programs to engine steps."""
from __future__ import annotations

import math
import re

from .. import device as dev
from ..protocols import engine as eng
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

__all__ = [
    "EvaluationError",
    "DSLValidationError",
    "device_constants",
    "evaluate",
    "region_index",
    "compile_program",
    "interpret",
]

_REGION = re.compile(r"^s(\d)(\d)$")


class EvaluationError(ValueError):
    def __init__(self, message: str, span=None):
        self.span = span
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)


class DSLValidationError(ValueError):
    """Raised by :func:`interpret` when validation reports errors."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def device_constants(device: dev.DeviceConfig) -> dict[str, float]:
    """``IT0``, ``Ic0``, ``Ic1`` .. ``Ick`` and ``PHI0`` (fluxes are in units of the flux quantum)."""
    consts = {"IT0": device.i_t0, "Ic0": device.i_c0, "PHI0": 1.0}
    for j, ic in enumerate(device.i_c, start=1):
        consts[f"Ic{j}"] = float(ic)
    return consts


def evaluate(expr, constants: dict) -> float:
    if isinstance(expr, Num):
        return float(expr.value)
    if isinstance(expr, Const):
        if expr.name not in constants:
            raise EvaluationError(f"unknown constant {expr.name!r}", expr.span)
        return float(constants[expr.name])
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, constants)
    if isinstance(expr, BinOp):
        a = evaluate(expr.left, constants)
        b = evaluate(expr.right, constants)
        if expr.op == "+":
            out = a + b
        elif expr.op == "-":
            out = a - b
        elif expr.op == "*":
            out = a * b
        elif b == 0:
            raise EvaluationError("division by zero", expr.span)
        else:
            out = a / b
        if not math.isfinite(out):
            raise EvaluationError("expression overflows", expr.span)
        return out
    raise TypeError(f"not an expression node: {expr!r}")


def region_index(region: str) -> int | None:
    """Flux entry for ``s{j-1}{j}``; ``None`` when the two digits are not consecutive."""
    m = _REGION.match(region)
    if not m:
        return None
    a, b = int(m.group(1)), int(m.group(2))
    return b if b == a + 1 else None


def _compile_stmt(s, consts):
    if isinstance(s, FluxStmt):
        idx = region_index(s.region)
        if idx is None:
            raise EvaluationError(f"region {s.region!r} does not join consecutive junctions", s.span)
        return eng.SetFlux(idx, evaluate(s.expr, consts), span=s.span)
    if isinstance(s, BiasStmt):
        return eng.SetBias(evaluate(s.expr, consts), span=s.span)
    if isinstance(s, SelectStmt):
        return eng.Select(s.expect, span=s.span)
    if isinstance(s, GateStmt):
        return eng.Gate(s.name, s.qubit, span=s.span)
    if isinstance(s, MeasureStmt):
        return eng.Measure(s.qubit, s.basis, s.binding, span=s.span)
    if isinstance(s, BranchStmt):
        return eng.Branch(s.binding, s.outcome, _compile_stmt(s.body, consts), span=s.span)
    if isinstance(s, PrepareStmt):
        return eng.Prepare(s.qubit, s.ket, span=s.span)
    if isinstance(s, AssertStmt):
        return eng.AssertState(s.reference, s.tol, span=s.span)
    raise TypeError(f"not a statement node: {s!r}")


def compile_program(program: ProtocolProgram, device: dev.DeviceConfig, name: str = "") -> eng.Program:
    """Evaluate every expression against ``device`` and emit engine steps (spans preserved)."""
    consts = device_constants(device)
    n = device.n_qubits if program.n_qubits is None else program.n_qubits
    return eng.Program(n, [_compile_stmt(s, consts) for s in program.statements], name=name)


def interpret(
    program: ProtocolProgram,
    device: dev.DeviceConfig,
    mode: str = "enumerate",
    shots: int = 1000,
    seed: int = 0,
    model: str = "exact",
    initial=None,
    check: bool = True,
    name: str = "",
):
    """Run a program.

    ``mode="enumerate"`` returns a :class:`~qselector.protocols.engine.ProtocolResult`;
    ``mode="sample"`` returns a :class:`~qselector.protocols.engine.SampleResult`.
    With ``check`` set, validation errors raise :class:`DSLValidationError`
    before anything runs.
    """
    if check:
        from .validate import validate

        errors = [d for d in validate(program, device, model=model) if d.severity == "error"]
        if errors:
            raise DSLValidationError(errors)
    compiled = compile_program(program, device, name=name)
    if mode == "enumerate":
        tree = eng.enumerate_tree(compiled, device, initial=initial, model=model)
        return eng.ProtocolResult(tree, {"program": name or "<dsl>"})
    if mode == "sample":
        return eng.sample(compiled, device, shots=shots, seed=seed, initial=initial, model=model)
    raise ValueError(f"mode must be 'enumerate' or 'sample', not {mode!r}")
