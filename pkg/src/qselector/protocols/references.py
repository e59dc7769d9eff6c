"""Named target states for ``assert_state``.

A reference string is ``name`` or ``name@q1,q2,...``; the optional suffix
overrides the qubits the reference is compared against.  Each reference may
carry a Pauli frame, given per position within the reference, that is applied
to the simulated register before the overlap is taken.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import hilbert as hs

__all__ = ["Reference", "REFERENCES", "resolve_reference", "BELL_FRAME", "CLUSTER_FRAME_4", "CLUSTER_FRAME_5"]

def _vec(terms: dict[str, complex]) -> hs.QuantumState:
    n = len(next(iter(terms)))
    amps = np.zeros(2**n, dtype=complex)
    for bits, c in terms.items():
        amps[int(bits, 2)] += c
    return hs.from_amplitudes(amps, normalize=True)


def _kron(*states: hs.QuantumState) -> hs.QuantumState:
    amps = np.array([1], dtype=complex)
    for s in states:
        amps = np.kron(amps, s.amps)
    return hs.from_amplitudes(amps)


# two-qubit Bell states; psi- = (|01> - |10>)/sqrt2 as written for the cluster construction
PSI_MINUS = _vec({"01": 1, "10": -1})
PSI_PLUS = _vec({"01": 1, "10": 1})
PHI_MINUS = _vec({"00": 1, "11": -1})
PHI_PLUS = _vec({"00": 1, "11": 1})

BELL_COLLAPSE = hs.from_amplitudes(
    hs.prepare_product("+-").amps + hs.prepare_product("-+").amps + hs.prepare_product("--").amps,
    normalize=True,
)


def _cluster4() -> hs.QuantumState:
    # (|01>|phi-> - |10>|psi->)/sqrt2 on qubits (1, 2, 4, 5)
    a = _kron(_vec({"01": 1}), PHI_MINUS).amps
    b = _kron(_vec({"10": 1}), PSI_MINUS).amps
    return hs.from_amplitudes(a - b, normalize=True)


def _cluster5() -> hs.QuantumState:
    # ancilla (qubit 3) in |+> pairs with the cluster form, |-> with its target-flipped partner
    def on_1245(q12: str, pair45: hs.QuantumState, anc: str) -> np.ndarray:
        psi = np.kron(np.kron(_vec({q12: 1}).amps, hs.KETS[anc]), pair45.amps)
        return psi

    amps = (
        on_1245("01", PHI_MINUS, "+") - on_1245("10", PSI_MINUS, "+")
        + on_1245("01", PSI_MINUS, "-") - on_1245("10", PHI_MINUS, "-")
    )
    return hs.from_amplitudes(amps, normalize=True)


CLUSTER4 = _cluster4()
CLUSTER5 = _cluster5()
CLUSTER_CANONICAL = _vec({"0000": 1, "0011": 1, "1100": 1, "1111": -1})

# Pauli frames mapping the simulated register onto the reference conventions.
# BELL_FRAME: the selector pair comes out as |phi->; X on its first qubit gives |psi->.
BELL_FRAME = {1: "X"}
# Cluster frames (positions within the reference) start from the Bell frame on both pairs.
# Four-qubit form: plus Z on the CNOT control, the relative phase the exact CNOT
# correction removes but the cluster form keeps.
# Five-qubit form (before any correction): plus Z on the ancilla, which swaps its
# |+>/|-> labels; this is the same swap that puts the target flip on outcome "+".
CLUSTER_FRAME_4 = {1: "X", 2: "Z", 3: "X"}
CLUSTER_FRAME_5 = {1: "X", 3: "Z", 4: "X"}


@dataclass(frozen=True)
class Reference:
    name: str
    qubits: tuple
    state: hs.QuantumState
    frame: dict = field(default_factory=dict)

    def fidelity(self, register: hs.QuantumState) -> float:
        if max(self.qubits) > register.n:
            raise ValueError(f"reference {self.name!r} needs qubits {self.qubits}, register has {register.n}")
        framed = hs.apply_frame(register, {self.qubits[pos - 1]: p for pos, p in self.frame.items()})
        return hs.subsystem_fidelity(framed, self.qubits, self.state)


REFERENCES: dict[str, Reference] = {
    "psi_minus": Reference("psi_minus", (1, 2), PSI_MINUS),
    "psi_plus": Reference("psi_plus", (1, 2), PSI_PLUS),
    "phi_minus": Reference("phi_minus", (1, 2), PHI_MINUS),
    "phi_plus": Reference("phi_plus", (1, 2), PHI_PLUS),
    "bell_collapse": Reference("bell_collapse", (1, 2), BELL_COLLAPSE),
    "cluster4": Reference("cluster4", (1, 2, 4, 5), CLUSTER4, CLUSTER_FRAME_4),
    "cluster5": Reference("cluster5", (1, 2, 3, 4, 5), CLUSTER5, CLUSTER_FRAME_5),
    "cluster_canonical": Reference("cluster_canonical", (1, 2, 4, 5), CLUSTER_CANONICAL),
}


def resolve_reference(text: str) -> Reference:
    name, _, where = text.partition("@")
    name = name.strip()
    if name not in REFERENCES:
        raise KeyError(f"unknown reference state {name!r}")
    ref = REFERENCES[name]
    if not where:
        return ref
    try:
        qubits = tuple(int(q) for q in where.split(","))
    except ValueError:
        raise KeyError(f"bad qubit list in reference {text!r}") from None
    if len(qubits) != ref.state.n or len(set(qubits)) != len(qubits) or min(qubits) < 1:
        raise KeyError(f"reference {name!r} needs {ref.state.n} distinct qubits, got {where!r}")
    return Reference(name, qubits, ref.state, ref.frame)
