"""Static checks on a parsed program against a device.

Diagnostics are returned, never raised.  Codes:

``qubits``      header count differs from the device
``bounds``      qubit or region index outside the register
``region``      region digits do not name consecutive junctions
``constant``    unknown named constant
``type``        current used where a flux is expected (or the reverse)
``value``       expression cannot be evaluated (division by zero, overflow)
``binding``     branch on a name no earlier measure defines
``outcome``     branch outcome impossible for the measured basis
``reference``   unknown ``assert_state`` reference or qubit list
``degenerate``  a select whose partition has an eigenvalue on the threshold
``bias``        warning: select before any bias statement
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import device as dev
from .. import selector as sel
from ..protocols.references import resolve_reference
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
    SourceSpan,
)
from .interpret import EvaluationError, device_constants, evaluate, region_index

__all__ = ["Diagnostic", "validate", "expr_dimension"]

_OUTCOMES = {"pm": ("+", "-"), "comp": ("0", "1")}

# dimensions are exponent pairs (current, flux); None marks a bare literal,
# which takes whatever dimension its context needs
CURRENT = (1, 0)
FLUX = (0, 1)
DIMENSIONLESS = (0, 0)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None
    severity: str = "error"

    def __str__(self):
        where = f"line {self.span.line}, column {self.span.column}: " if self.span else ""
        return f"{where}{self.severity}: {self.message} [{self.code}]"


class _TypeClash(Exception):
    def __init__(self, message, span):
        self.message, self.span = message, span


def _const_dimension(name: str):
    if name == "PHI0":
        return FLUX
    if name == "IT0" or (name.startswith("Ic") and name[2:].isdigit()):
        return CURRENT
    return None


def _describe(d) -> str:
    return {CURRENT: "a current", FLUX: "a flux", DIMENSIONLESS: "dimensionless"}.get(d, f"current^{d[0]} flux^{d[1]}")


def expr_dimension(expr):
    """Dimension of ``expr`` or ``None`` for a literal-only subexpression; raises on mixed sums."""
    if isinstance(expr, Num):
        return None
    if isinstance(expr, Const):
        return _const_dimension(expr.name)
    if isinstance(expr, Neg):
        return expr_dimension(expr.operand)
    a, b = expr_dimension(expr.left), expr_dimension(expr.right)
    if expr.op in "+-":
        if a is None or b is None or a == b:
            return a if b is None else b
        raise _TypeClash(f"cannot combine {_describe(a)} and {_describe(b)} with {expr.op!r}", expr.span)
    if a is None and b is None:
        return None
    a, b = a or DIMENSIONLESS, b or DIMENSIONLESS
    if expr.op == "*":
        return (a[0] + b[0], a[1] + b[1])
    return (a[0] - b[0], a[1] - b[1])


def _walk_consts(expr):
    if isinstance(expr, Const):
        yield expr
    elif isinstance(expr, Neg):
        yield from _walk_consts(expr.operand)
    elif isinstance(expr, BinOp):
        yield from _walk_consts(expr.left)
        yield from _walk_consts(expr.right)


class _Checker:
    def __init__(self, program: ProtocolProgram, device: dev.DeviceConfig, model: str):
        self.program = program
        self.device = device
        self.model = model
        self.n = device.n_qubits
        self.consts = device_constants(device)
        self.out: list[Diagnostic] = []
        self.fluxes = list(device.fluxes)
        self.bias: Optional[float] = None
        self.bindings: dict[str, str] = {}  # name -> basis
        self.conditional: set[str] = set()

    def emit(self, code, message, span, severity="error"):
        self.out.append(Diagnostic(code, message, span, severity))

    def qubit(self, q, span):
        if not (1 <= q <= self.n):
            self.emit("bounds", f"qubit {q} is outside 1..{self.n}", span)
            return False
        return True

    def value(self, expr, want, what) -> Optional[float]:
        ok = True
        for c in _walk_consts(expr):
            if c.name not in self.consts:
                known = ", ".join(sorted(self.consts))
                self.emit("constant", f"unknown constant {c.name!r} (known: {known})", c.span)
                ok = False
        if not ok:
            return None
        try:
            d = expr_dimension(expr)
        except _TypeClash as exc:
            self.emit("type", exc.message, exc.span)
            return None
        if d is not None and d != want and d != DIMENSIONLESS:
            self.emit("type", f"{what} must be {_describe(want)}, found {_describe(d)}", expr.span)
            return None
        try:
            return evaluate(expr, self.consts)
        except EvaluationError as exc:
            self.emit("value", str(exc).split(": ", 1)[-1], exc.span)
            return None

    def statement(self, s, conditional=False):
        if isinstance(s, FluxStmt):
            idx = region_index(s.region)
            if idx is None:
                self.emit("region", f"region {s.region!r} must join consecutive junctions, like s01 or s12", s.span)
            elif idx > self.n:
                self.emit("bounds", f"region {s.region} needs qubit {idx}, the device has {self.n}", s.span)
                idx = None
            v = self.value(s.expr, FLUX, "a flux setting")
            if idx is not None and v is not None:
                self.fluxes[idx - 1] = v
        elif isinstance(s, BiasStmt):
            v = self.value(s.expr, CURRENT, "the bias")
            if v is not None:
                self.bias = v
        elif isinstance(s, SelectStmt):
            self.preflight(s)
        elif isinstance(s, (GateStmt, PrepareStmt)):
            self.qubit(s.qubit, s.qubit_span or s.span)
        elif isinstance(s, MeasureStmt):
            self.qubit(s.qubit, s.qubit_span or s.span)
            self.bindings[s.binding] = s.basis
            if conditional:
                self.conditional.add(s.binding)
            else:
                self.conditional.discard(s.binding)
        elif isinstance(s, BranchStmt):
            self.branch(s)
        elif isinstance(s, AssertStmt):
            try:
                ref = resolve_reference(s.reference)
            except KeyError as exc:
                self.emit("reference", exc.args[0], s.span)
            else:
                if max(ref.qubits) > self.n:
                    self.emit("reference", f"reference {s.reference!r} needs qubits {ref.qubits}", s.span)
            if not (0 <= s.tol < 1):
                self.emit("value", f"tolerance {s.tol!r} must lie in [0, 1)", s.span)

    def branch(self, s: BranchStmt):
        basis = self.bindings.get(s.binding)
        if basis is None:
            self.emit("binding", f"{s.binding!r} is not defined by an earlier measure", s.span)
        else:
            if s.binding in self.conditional:
                self.emit("binding", f"{s.binding!r} is only defined on some paths", s.span, "warning")
            if s.outcome not in _OUTCOMES[basis]:
                allowed = " or ".join(_OUTCOMES[basis])
                self.emit("outcome", f"{s.binding!r} comes from a {basis} measurement; outcome must be {allowed}", s.span)
        # settings inside a branch body are preflighted but do not leak out
        saved = (list(self.fluxes), self.bias)
        self.statement(s.body, conditional=True)
        self.fluxes, self.bias = saved

    def preflight(self, s: SelectStmt):
        if self.bias is None:
            self.emit("bias", "select runs before any bias statement (bias 0)", s.span, "warning")
        bias = 0.0 if self.bias is None else self.bias
        try:
            cfg = self.device.with_fluxes(np.asarray(self.fluxes, dtype=float))
            sel.partition(cfg, bias, self.model)
        except sel.DegenerateThresholdError as exc:
            self.emit("degenerate", str(exc), s.span)
        except dev.ConfigurationError as exc:
            self.emit("value", str(exc), s.span)

    def run(self) -> list[Diagnostic]:
        p = self.program
        if p.n_qubits is not None and p.n_qubits != self.n:
            self.emit("qubits", f"program declares {p.n_qubits} qubits, the device has {self.n}", p.header_span)
        for s in p.statements:
            self.statement(s)
        return self.out


def validate(program: ProtocolProgram, device: dev.DeviceConfig, model: str = "exact") -> list[Diagnostic]:
    return _Checker(program, device, model).run()
