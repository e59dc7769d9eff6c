"""Built-in selector protocols: pair selection, parity measurements, CNOT, cluster.

Each protocol is assembled as a :class:`~qselector.protocols.engine.Program`
and run through :func:`~qselector.protocols.engine.enumerate_tree`, so the
shipped ``.qsp`` files can be checked against these builders leaf for leaf.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .. import device as dev
from .. import hilbert as hs
from .engine import (
    AssertState,
    Branch,
    Gate,
    Measure,
    Prepare,
    Program,
    ProtocolResult,
    Select,
    SetBias,
    SetFlux,
    enumerate_tree,
)
from .references import BELL_FRAME, PSI_MINUS

__all__ = [
    "REVERSALS",
    "CNOT_FLIP_OUTCOME",
    "CNOT_PHASE_CORRECTION",
    "STATED_BELL_SUCCESS",
    "InternalAssertionError",
    "odd_pair_steps",
    "parity_01_steps",
    "cnot_steps",
    "bell_program",
    "cnot_program",
    "cluster4_program",
    "select_odd_pair",
    "run_bell_prep",
    "run_parity_01",
    "run_parity_pm",
    "run_cnot",
    "run_cluster4",
]

REVERSALS = ("flux_only", "bias_only", "both")

# Derived by matching every accepted leaf against the dense CNOT on basis and
# superposition inputs (see tests/test_protocols.py::test_cnot_corrections_rederived).
# With the ancilla read after the Hadamard, outcome "+" leaves the target inverted.
CNOT_FLIP_OUTCOME = "+"
# Both outcomes carry a relative sign between the control's |0> and |1> branches.
CNOT_PHASE_CORRECTION = ("Z", "control")

STATED_BELL_SUCCESS = Fraction(1, 3)


class InternalAssertionError(AssertionError):
    """A built-in protocol violated one of its own postconditions."""


def _bias_for_pair(device: dev.DeviceConfig, i: int, j: int) -> float:
    return device.i_t0 - (device.i_c[i - 1] + device.i_c[j - 1]) / 2


def odd_pair_steps(device: dev.DeviceConfig, i: int, j: int, reversal: str = "flux_only") -> list:
    """Two selector rounds projecting qubits ``i, j`` onto {|+->, |-+>}.

    Round one couples only ``i`` and ``j`` and biases so that ``++`` switches.
    Round two re-tunes per ``reversal`` so that ``--`` switches; with
    ``"both"`` the partition is unchanged and ``--`` survives.
    """
    if reversal not in REVERSALS:
        raise ValueError(f"reversal must be one of {REVERSALS}")
    fluxes = dev.pair_pattern(device.n_qubits, i, j)
    bias = _bias_for_pair(device, i, j)
    steps = [SetFlux(r, f) for r, f in enumerate(fluxes, start=1)]
    steps += [SetBias(bias), Select("quiet")]
    flip_flux = reversal in ("flux_only", "both")
    flip_bias = reversal in ("bias_only", "both")
    if flip_flux:
        steps += [SetFlux(r, -f) for r, f in enumerate(fluxes, start=1) if f != 0]
    if flip_bias:
        steps.append(SetBias(-bias))
    steps.append(Select("quiet"))
    return steps


def parity_01_steps(device: dev.DeviceConfig, control: int, ancilla: int, reversal: str = "flux_only") -> list:
    sandwich = [Gate("H", control), Gate("H", ancilla)]
    return sandwich + odd_pair_steps(device, control, ancilla, reversal) + list(sandwich)


def cnot_steps(device: dev.DeviceConfig, control: int, ancilla: int, target: int, binding: str = "anc") -> list:
    phase_gate = CNOT_PHASE_CORRECTION[0]
    return (
        parity_01_steps(device, control, ancilla)
        + odd_pair_steps(device, ancilla, target)
        + [
            Gate("H", ancilla),
            Measure(ancilla, "pm", binding),
            Branch(binding, CNOT_FLIP_OUTCOME, Gate("X", target)),
            Gate(phase_gate, control),
        ]
    )


def bell_program(device: dev.DeviceConfig, initial: str = "00", reversal: str = "flux_only", pair=(1, 2)) -> Program:
    i, j = pair
    steps = [Prepare(i, initial[0]), Prepare(j, initial[1])]
    return Program(device.n_qubits, steps + odd_pair_steps(device, i, j, reversal), name="bell")


def cnot_program(device: dev.DeviceConfig, control=1, ancilla=2, target=3, kets=("+", "+", "0")) -> Program:
    prep = [Prepare(q, k) for q, k in zip((control, ancilla, target), kets)]
    return Program(device.n_qubits, prep + cnot_steps(device, control, ancilla, target), name="cnot")


def cluster4_program(device: dev.DeviceConfig) -> Program:
    if device.n_qubits != 5:
        raise dev.ConfigurationError("the cluster pipeline runs on a five-qubit device")
    steps = (
        odd_pair_steps(device, 1, 2)
        + odd_pair_steps(device, 4, 5)
        + [Prepare(3, "+")]
        + parity_01_steps(device, 2, 3)
        + odd_pair_steps(device, 3, 4)
        + [Gate("H", 3), AssertState("cluster5", 1e-9)]
        + [
            Measure(3, "pm", "anc"),
            Branch("anc", CNOT_FLIP_OUTCOME, Gate("X", 4)),
            Gate(CNOT_PHASE_CORRECTION[0], 2),
            AssertState("cluster4", 1e-9),
        ]
    )
    return Program(5, steps, name="cluster4")


# -- runners -------------------------------------------------------------------

def _run(steps, device, state, model="exact", name="") -> ProtocolResult:
    program = Program(device.n_qubits, steps, name=name)
    return ProtocolResult(enumerate_tree(program, device, initial=state, model=model))


def select_odd_pair(state: hs.QuantumState, device: dev.DeviceConfig, i: int, j: int,
                    reversal: str = "flux_only", model: str = "exact") -> ProtocolResult:
    return _run(odd_pair_steps(device, i, j, reversal), device, state, model, "odd_pair")


def _check_decoupled(device, qubits, decouple):
    if not decouple:
        return
    coeffs = dev.coefficients(device.with_fluxes(dev.pair_pattern(device.n_qubits, *qubits)))
    overlap = dev.coupled_set(coeffs) & set(decouple)
    if overlap:
        raise dev.ConfigurationError(f"qubits {sorted(overlap)} are not decoupled by the pair pattern")


def run_parity_01(state, device, control: int, ancilla: int, decouple=(), model: str = "exact") -> ProtocolResult:
    """Projection onto odd computational parity of (control, ancilla)."""
    _check_decoupled(device, (control, ancilla), decouple)
    return _run(parity_01_steps(device, control, ancilla), device, state, model, "parity_01")


def run_parity_pm(state, device, a: int, b: int, model: str = "exact") -> ProtocolResult:
    return _run(odd_pair_steps(device, a, b), device, state, model, "parity_pm")


def run_bell_prep(initial: str = "00", reversal: str = "flux_only", device: dev.DeviceConfig | None = None,
                  model: str = "exact") -> ProtocolResult:
    if initial not in ("00", "01"):
        raise ValueError("initial must be '00' or '01'")
    device = device or dev.default_device(2)
    program = bell_program(device, initial, reversal)
    result = ProtocolResult(enumerate_tree(program, device, model=model))
    leaf = result.success_leaf
    info = {
        "stated_success_probability": float(STATED_BELL_SUCCESS),
        "enumerated_success_probability": result.success_probability,
        "note": (
            "enumeration gives {:.6g}; the stated value is 1/3".format(result.success_probability)
        ),
    }
    if leaf is not None:
        entropy = hs.entanglement_entropy(leaf.state, [1])
        # |00> lands one Pauli away from psi-; |01> lands on it directly
        witness = hs.local_clifford_equivalent(leaf.state, PSI_MINUS)
        frame = hs.pauli_frame(leaf.state, PSI_MINUS)
        info.update(entropy=entropy, clifford_witness=witness, pauli_frame=frame, target="psi_minus")
        if reversal != "both" and abs(entropy - 1.0) > 1e-9:
            raise InternalAssertionError(f"Bell preparation produced entropy {entropy!r}, expected 1 ebit")
    result.info.update(info)
    return result


def _ancilla_is_plus(state: hs.QuantumState, ancilla: int) -> bool:
    plus = hs.from_amplitudes(hs.KETS["+"])
    return hs.subsystem_fidelity(state, [ancilla], plus) >= 1 - 1e-9


def run_cnot(state: hs.QuantumState, device: dev.DeviceConfig, control: int, ancilla: int, target: int,
             model: str = "exact") -> ProtocolResult:
    result = _run(cnot_steps(device, control, ancilla, target), device, state, model, "cnot")
    if not _ancilla_is_plus(state, ancilla):
        result.info["warning"] = f"ancilla qubit {ancilla} is not in |+>; the CNOT postcondition does not apply"
    return result


def run_cluster4(device: dev.DeviceConfig | None = None, model: str = "exact") -> ProtocolResult:
    """Pairs on (1,2) and (4,5), then a selector CNOT 2 -> 4 through ancilla 3."""
    device = device or dev.default_device(5)
    result = ProtocolResult(enumerate_tree(cluster4_program(device), device, model=model))
    # stage probabilities from the component protocols
    bell = select_odd_pair(hs.prepare_product("00000"), device, 1, 2, model=model)
    pair_state = bell.success_leaf.state
    bell_frame = hs.pauli_frame(hs.from_amplitudes(_pair_amplitudes(pair_state, (1, 2))), PSI_MINUS)
    info = {
        "bell_frame": bell_frame,
        "recorded_bell_frame": dict(BELL_FRAME),
        "stage_probabilities": {"pair_12": bell.success_probability},
    }
    for leaf in result.tree.accepted_leaves():
        info.setdefault("assertions", {})[leaf.path[-1]] = [
            (a.reference, a.fidelity, a.passed) for a in leaf.assertions
        ]
    result.info.update(info)
    return result


def _pair_amplitudes(state: hs.QuantumState, qubits) -> np.ndarray:
    rho = hs.reduced_density_matrix(state, list(qubits))
    w, v = np.linalg.eigh(rho)
    if w[-1] < 1 - 1e-9:
        raise InternalAssertionError(f"qubits {qubits} are entangled with the rest of the register")
    return v[:, -1]
