"""Step programs over the selector and gate primitives, run exhaustively or by sampling.

A program is a flat list of steps.  Flux, bias, gate and prepare steps are
deterministic; ``Select`` and ``Measure`` branch.  :func:`enumerate_tree`
follows every outcome with nonzero probability and records a leaf per path;
:func:`sample` draws one path per shot from a seeded generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence, Union

import numpy as np

from .. import device as dev
from .. import hilbert as hs
from .. import selector as sel
from .references import resolve_reference

__all__ = [
    "SetFlux",
    "SetBias",
    "Select",
    "Gate",
    "Measure",
    "Branch",
    "Prepare",
    "AssertState",
    "Program",
    "Leaf",
    "Edge",
    "BranchNode",
    "BranchTree",
    "AssertionRecord",
    "ProtocolResult",
    "SampleResult",
    "ProtocolRuntimeError",
    "enumerate_tree",
    "sample",
    "trees_equal",
    "select_configurations",
]

PRUNE = hs.ZERO_PROBABILITY


class ProtocolRuntimeError(RuntimeError):
    """A step could not be executed; ``span`` points at the source statement if known."""

    def __init__(self, message: str, span=None):
        self.span = span
        if span is not None:
            message = f"line {span.line}, column {span.column}: {message}"
        super().__init__(message)


# -- steps ------------------------------------------------------------------------

@dataclass(frozen=True)
class SetFlux:
    region: int  # entry j is region s_{j-1,j}
    value: float
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SetBias:
    value: float
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Select:
    expect: str = "quiet"
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Gate:
    name: str
    qubit: int
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Measure:
    qubit: int
    basis: str  # "pm" or "comp"
    binding: str
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Branch:
    binding: str
    outcome: str
    step: "Step"
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Prepare:
    qubit: int
    ket: str
    span: Any = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AssertState:
    reference: str
    tol: float
    span: Any = field(default=None, compare=False, repr=False)


Step = Union[SetFlux, SetBias, Select, Gate, Measure, Branch, Prepare, AssertState]


@dataclass(frozen=True)
class Program:
    n_qubits: int
    steps: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def random_draws(self) -> int:
        """Upper bound on branching steps along any path."""

        def count(step):
            if isinstance(step, (Select, Measure)):
                return 1
            if isinstance(step, Branch):
                return count(step.step)
            return 0

        return sum(count(s) for s in self.steps)


# -- tree ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssertionRecord:
    reference: str
    fidelity: float
    tol: float
    passed: bool


@dataclass(frozen=True, eq=False)
class Leaf:
    path: tuple
    probability: float
    status: str  # "accept", "abort" or "switch"
    state: Optional[hs.QuantumState]
    assertions: tuple = ()

    @property
    def accepted(self) -> bool:
        return self.status == "accept"


@dataclass(frozen=True, eq=False)
class Edge:
    outcome: str
    probability: float  # conditional on reaching the parent node
    child: Union["BranchNode", Leaf]


@dataclass(frozen=True, eq=False)
class BranchNode:
    op: str
    edges: tuple


@dataclass(frozen=True, eq=False)
class BranchTree:
    root_state: hs.QuantumState
    root: Union[BranchNode, Leaf]
    leaves: tuple  # sorted by path

    @property
    def total_probability(self) -> float:
        return float(sum(l.probability for l in self.leaves))

    @property
    def success_probability(self) -> float:
        return float(sum(l.probability for l in self.leaves if l.accepted))

    def accepted_leaves(self) -> list[Leaf]:
        return [l for l in self.leaves if l.accepted]

    def leaf(self, path: Sequence[str]) -> Leaf:
        path = tuple(path)
        for l in self.leaves:
            if l.path == path:
                return l
        raise KeyError(path)


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    tree: BranchTree
    info: dict = field(default_factory=dict)

    @property
    def success_probability(self) -> float:
        return self.tree.success_probability

    @property
    def success_leaf(self) -> Optional[Leaf]:
        acc = self.tree.accepted_leaves()
        if not acc:
            return None
        # highest probability; the first path in sorted order breaks ties
        return min(acc, key=lambda l: (-l.probability, l.path))

    @property
    def canonical_success_state(self) -> Optional[np.ndarray]:
        leaf = self.success_leaf
        return None if leaf is None else hs.canonical_amplitudes(leaf.state)


@dataclass(frozen=True, eq=False)
class SampleResult:
    shots: int
    seed: int
    paths: tuple  # distinct leaf paths, sorted
    transcript: np.ndarray  # per-shot index into ``paths``
    statuses: dict

    @property
    def counts(self) -> dict:
        tally = np.bincount(self.transcript, minlength=len(self.paths))
        return {p: int(c) for p, c in zip(self.paths, tally)}

    @property
    def success_fraction(self) -> float:
        ok = [i for i, p in enumerate(self.paths) if self.statuses[p] == "accept"]
        return float(np.isin(self.transcript, ok).mean()) if self.shots else 0.0


# -- execution --------------------------------------------------------------------

@dataclass(frozen=True)
class _Ctx:
    fluxes: tuple
    bias: float
    bindings: tuple = ()
    assertions: tuple = ()
    path: tuple = ()

    def bound(self, name):
        for k, v in self.bindings:
            if k == name:
                return v
        return None


@dataclass(frozen=True)
class _Options:
    device: dev.DeviceConfig
    model: str
    flux_offsets: np.ndarray
    bias_offset: float


def _deterministic(step, state: hs.QuantumState, ctx: _Ctx, opts: _Options):
    n = state.n
    if isinstance(step, SetFlux):
        if not (1 <= step.region <= n):
            raise ProtocolRuntimeError(f"region index {step.region} outside 1..{n}", step.span)
        fl = list(ctx.fluxes)
        fl[step.region - 1] = float(step.value)
        return state, replace(ctx, fluxes=tuple(fl))
    if isinstance(step, SetBias):
        return state, replace(ctx, bias=float(step.value))
    if isinstance(step, Gate):
        if step.name not in ("H", "X", "Y", "Z", "S"):
            raise ProtocolRuntimeError(f"unknown gate {step.name!r}", step.span)
        if not (1 <= step.qubit <= n):
            raise ProtocolRuntimeError(f"qubit {step.qubit} outside 1..{n}", step.span)
        return hs.apply_gate(state, step.qubit, step.name), ctx
    if isinstance(step, Prepare):
        if not (1 <= step.qubit <= n):
            raise ProtocolRuntimeError(f"qubit {step.qubit} outside 1..{n}", step.span)
        try:
            return hs.replace_qubit(state, step.qubit, step.ket), ctx
        except ValueError as exc:
            raise ProtocolRuntimeError(f"cannot prepare qubit {step.qubit}: {exc}", step.span) from exc
    if isinstance(step, AssertState):
        try:
            ref = resolve_reference(step.reference)
        except KeyError as exc:
            raise ProtocolRuntimeError(str(exc), step.span) from None
        try:
            f = ref.fidelity(state)
        except (ValueError, IndexError) as exc:
            raise ProtocolRuntimeError(f"assert_state {step.reference!r}: {exc}", step.span) from exc
        rec = AssertionRecord(step.reference, f, step.tol, f >= 1 - step.tol)
        return state, replace(ctx, assertions=ctx.assertions + (rec,))
    raise TypeError(f"not a deterministic step: {step!r}")


def _partition(ctx: _Ctx, step, opts: _Options) -> sel.SwitchPartition:
    fluxes = np.asarray(ctx.fluxes) + opts.flux_offsets
    cfg = opts.device.with_fluxes(fluxes)
    try:
        return sel.partition(cfg, ctx.bias + opts.bias_offset, opts.model)
    except sel.DegenerateThresholdError as exc:
        raise ProtocolRuntimeError(str(exc), step.span) from exc


def _advance(pending: tuple, state, ctx: _Ctx, opts: _Options):
    """Run deterministic steps; stop at the first branching step or the end.

    Returns ``("leaf", state, ctx)`` or ``("choice", op_label, outcomes)`` where
    each outcome is ``(label, probability, pending, state, ctx, terminal_status)``.
    """
    while pending:
        step, rest = pending[0], pending[1:]
        if isinstance(step, Branch):
            value = ctx.bound(step.binding)
            if value is None:
                raise ProtocolRuntimeError(f"binding {step.binding!r} used before any measure", step.span)
            pending = ((step.step,) + rest) if value == step.outcome else rest
            continue
        if isinstance(step, Select):
            out = sel.measure(state, _partition(ctx, step, opts))
            outs = []
            if out.quiet_probability >= PRUNE:
                outs.append(("quiet", out.quiet_probability, rest, out.quiet_state, None))
            if out.switch_probability >= PRUNE:
                outs.append(("switch", out.switch_probability, rest, None, "abort" if step.expect == "quiet" else "switch"))
            return ("choice", "select", [(lab, p, r, s, replace(ctx, path=ctx.path + (f"select:{lab}",)), t) for lab, p, r, s, t in outs])
        if isinstance(step, Measure):
            if not (1 <= step.qubit <= state.n):
                raise ProtocolRuntimeError(f"qubit {step.qubit} outside 1..{state.n}", step.span)
            basis = "plus_minus" if step.basis == "pm" else "computational"
            outs = []
            for o in hs.measure_qubit(state, step.qubit, basis):
                if o.probability < PRUNE:
                    continue
                c = replace(
                    ctx,
                    bindings=tuple(b for b in ctx.bindings if b[0] != step.binding) + ((step.binding, o.label),),
                    path=ctx.path + (f"measure[{step.qubit}]:{o.label}",),
                )
                outs.append((o.label, o.probability, rest, o.post_state, c, None))
            return ("choice", f"measure[{step.qubit}]", outs)
        state, ctx = _deterministic(step, state, ctx, opts)
        pending = rest
    return ("leaf", state, ctx)


def _options(program: Program, device, model, flux_offsets, bias_offset) -> _Options:
    if device.n_qubits != program.n_qubits:
        raise ProtocolRuntimeError(
            f"program declares {program.n_qubits} qubits but the device has {device.n_qubits}"
        )
    offsets = np.zeros(device.n_qubits) if flux_offsets is None else np.asarray(flux_offsets, dtype=float)
    return _Options(device, model, offsets, float(bias_offset))


def _initial(program: Program, initial):
    if initial is None:
        return hs.prepare_product(["0"] * program.n_qubits)
    if initial.n != program.n_qubits:
        raise ProtocolRuntimeError(f"initial state has {initial.n} qubits, program needs {program.n_qubits}")
    return initial


def enumerate_tree(
    program: Program,
    device: dev.DeviceConfig,
    initial: hs.QuantumState | None = None,
    model: str = "exact",
    flux_offsets=None,
    bias_offset: float = 0.0,
) -> BranchTree:
    """Explore every outcome edge with probability at least ``PRUNE``."""
    opts = _options(program, device, model, flux_offsets, bias_offset)
    root_state = _initial(program, initial)
    ctx0 = _Ctx(fluxes=tuple(device.fluxes), bias=0.0)
    leaves = []

    def walk(pending, state, ctx, prob, terminal=None):
        if terminal is not None:
            leaf = Leaf(ctx.path, prob, terminal, None, ctx.assertions)
            leaves.append(leaf)
            return leaf
        kind, *payload = _advance(pending, state, ctx, opts)
        if kind == "leaf":
            state, ctx = payload
            leaf = Leaf(ctx.path, prob, "accept", state, ctx.assertions)
            leaves.append(leaf)
            return leaf
        label, outs = payload
        edges = tuple(
            Edge(lab, p, walk(rest, s, c, prob * p, t)) for lab, p, rest, s, c, t in outs
        )
        return BranchNode(label, edges)

    root = walk(program.steps, root_state, ctx0, 1.0)
    return BranchTree(root_state, root, tuple(sorted(leaves, key=lambda l: l.path)))


def sample(
    program: Program,
    device: dev.DeviceConfig,
    shots: int,
    seed: int,
    initial: hs.QuantumState | None = None,
    model: str = "exact",
    flux_offsets=None,
    bias_offset: float = 0.0,
) -> SampleResult:
    """Draw ``shots`` outcome paths.

    Shot ``k`` consumes row ``k`` of a ``(shots, draws)`` block of uniforms from
    ``numpy.random.default_rng(seed)``, so a shot's outcome never depends on
    how other shots were scheduled.  Branch expansions are memoized by path.
    """
    if shots < 0:
        raise ValueError("shots must be non-negative")
    opts = _options(program, device, model, flux_offsets, bias_offset)
    root_state = _initial(program, initial)
    draws = max(1, program.random_draws())
    u = np.random.default_rng(seed).random((shots, draws))
    cache: dict = {}

    def expand(key, pending, state, ctx, terminal):
        if key not in cache:
            if terminal is not None:
                cache[key] = ("leaf", terminal)
            else:
                kind, *payload = _advance(pending, state, ctx, opts)
                if kind == "leaf":
                    cache[key] = ("leaf", "accept")
                else:
                    _, outs = payload
                    cum = np.cumsum([o[1] for o in outs])
                    cache[key] = ("choice", outs, cum / cum[-1])
        return cache[key]

    paths: dict = {}
    statuses: dict = {}
    transcript = np.empty(shots, dtype=np.int64)
    ctx0 = _Ctx(fluxes=tuple(device.fluxes), bias=0.0)
    for k in range(shots):
        key, pending, state, ctx, terminal = (), program.steps, root_state, ctx0, None
        depth = 0
        while True:
            node = expand(key, pending, state, ctx, terminal)
            if node[0] == "leaf":
                break
            _, outs, cum = node
            pick = int(np.searchsorted(cum, u[k, depth], side="right"))
            pick = min(pick, len(outs) - 1)
            lab, _, pending, state, ctx, terminal = outs[pick]
            key = key + (ctx.path[-1],)
            depth += 1
        if key not in paths:
            paths[key] = len(paths)
            statuses[key] = node[1]
        transcript[k] = paths[key]
    ordered = tuple(sorted(paths))
    remap = np.array([ordered.index(p) for p in paths], dtype=np.int64) if paths else np.zeros(0, dtype=np.int64)
    return SampleResult(shots, seed, ordered, remap[transcript] if shots else transcript, statuses)


def trees_equal(a: BranchTree, b: BranchTree, tol: float = 1e-12) -> bool:
    """Same leaf paths and statuses, probabilities within ``tol``, equal canonical states."""
    if [l.path for l in a.leaves] != [l.path for l in b.leaves]:
        return False
    for x, y in zip(a.leaves, b.leaves):
        if x.status != y.status or abs(x.probability - y.probability) > tol:
            return False
        if (x.state is None) != (y.state is None):
            return False
        if x.state is not None and not hs.states_equal(x.state, y.state, tol):
            return False
    return True


def select_configurations(program: Program, device: dev.DeviceConfig) -> list[tuple[dev.DeviceConfig, float]]:
    """The (device, bias) pair in force at every top-level ``Select``, in order."""
    fluxes, bias = list(device.fluxes), 0.0
    found = []
    for step in program.steps:
        if isinstance(step, SetFlux):
            fluxes[step.region - 1] = step.value
        elif isinstance(step, SetBias):
            bias = step.value
        elif isinstance(step, Select):
            found.append((device.with_fluxes(fluxes), bias))
    return found
