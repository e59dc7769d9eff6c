"""Dense state vectors for small qubit registers.

Qubit 1 is the most significant bit of the basis index, so amplitudes read
off in the same left-to-right order as kets are written.  States are
immutable: every operation returns a new :class:`QuantumState`.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "QuantumState",
    "MeasurementOutcome",
    "BranchImpossibleError",
    "CapabilityError",
    "GATES",
    "KETS",
    "ZERO_PROBABILITY",
    "from_amplitudes",
    "prepare_product",
    "apply_gate",
    "apply_all",
    "measure_qubit",
    "fidelity",
    "subsystem_fidelity",
    "reduced_density_matrix",
    "entanglement_entropy",
    "canonical_amplitudes",
    "states_equal",
    "single_qubit_cliffords",
    "local_clifford_equivalent",
    "pauli_frame",
    "apply_frame",
    "factor_qubit",
    "replace_qubit",
    "state_to_json",
    "state_from_json",
]

NORM_TOL = 1e-12
ZERO_PROBABILITY = 1e-14
SOFT_QUBIT_LIMIT = 20
CLIFFORD_SEARCH_LIMIT = 6

_S2 = 1 / np.sqrt(2)

GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}

KETS: dict[str, np.ndarray] = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) * _S2,
    "-": np.array([1, -1], dtype=complex) * _S2,
}

PAULIS = ("I", "X", "Y", "Z")


class BranchImpossibleError(RuntimeError):
    """The requested branch has (numerically) zero probability."""


class CapabilityError(RuntimeError):
    """The request exceeds what the dense representation can handle."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if self.n < 1 or amps.size != 2**self.n:
            raise ValueError(f"{amps.size} amplitudes do not describe {self.n} qubits")
        if self.n > SOFT_QUBIT_LIMIT:
            warnings.warn(f"dense state on {self.n} qubits is expensive", RuntimeWarning, stacklevel=3)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n)

    def __repr__(self):
        return f"QuantumState(n={self.n}, amps={np.round(self.amps, 6).tolist()})"


def from_amplitudes(amps, normalize: bool = False) -> QuantumState:
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    n = int(round(np.log2(amps.size))) if amps.size else 0
    if normalize:
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        amps = amps / norm
    return QuantumState(n, amps)


def _ket(k) -> np.ndarray:
    if isinstance(k, str):
        key = k.strip("|>⟩").replace("−", "-")
        if key not in KETS:
            raise ValueError(f"unknown ket {k!r}")
        return KETS[key]
    return np.asarray(k, dtype=complex)


def prepare_product(kets: Sequence) -> QuantumState:
    """Tensor product of single-qubit kets, qubit 1 first."""
    if len(kets) == 0:
        raise ValueError("need at least one ket")
    amps = np.array([1], dtype=complex)
    for k in kets:
        amps = np.kron(amps, _ket(k))
    return from_amplitudes(amps)


def _check_qubit(state: QuantumState, q: int) -> None:
    if not (1 <= q <= state.n):
        raise IndexError(f"qubit {q} out of range 1..{state.n}")


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=NORM_TOL, rtol=0):
        raise ValueError("gate must be a 2x2 unitary")
    return u


def _apply_tensor(psi: np.ndarray, q: int, u: np.ndarray) -> np.ndarray:
    out = np.tensordot(u, psi, axes=([1], [q - 1]))
    return np.moveaxis(out, 0, q - 1)


def apply_gate(state: QuantumState, q: int, u) -> QuantumState:
    if isinstance(u, str):
        u = GATES[u]
    u = _check_unitary(u)
    _check_qubit(state, q)
    out = _apply_tensor(state.tensor(), q, u)
    # renormalize away rounding drift so long gate sequences stay within NORM_TOL
    out = out.reshape(-1)
    return QuantumState(state.n, out / np.linalg.norm(out))


def apply_all(state: QuantumState, gates: Mapping[int, object]) -> QuantumState:
    for q, u in sorted(gates.items()):
        state = apply_gate(state, q, u)
    return state


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    label: str
    probability: float
    _state: QuantumState | None = None

    @property
    def possible(self) -> bool:
        return self.probability >= ZERO_PROBABILITY and self._state is not None

    @property
    def post_state(self) -> QuantumState:
        if not self.possible:
            raise BranchImpossibleError(f"outcome {self.label!r} has probability {self.probability:.3g}")
        return self._state


def measure_qubit(state: QuantumState, q: int, basis: str = "computational") -> list[MeasurementOutcome]:
    """Two-outcome projective measurement of one qubit.

    ``basis`` is ``"computational"`` (labels ``"0"``, ``"1"``) or
    ``"plus_minus"`` (labels ``"+"``, ``"-"``).
    """
    _check_qubit(state, q)
    basis = {"comp": "computational", "pm": "plus_minus"}.get(basis, basis)
    if basis == "computational":
        labels, vecs = ("0", "1"), (KETS["0"], KETS["1"])
    elif basis == "plus_minus":
        labels, vecs = ("+", "-"), (KETS["+"], KETS["-"])
    else:
        raise ValueError(f"unknown basis {basis!r}")
    psi = state.tensor()
    outcomes = []
    for label, v in zip(labels, vecs):
        proj = np.outer(v, v.conj())
        branch = _apply_tensor(psi, q, proj).reshape(-1)
        p = float(np.vdot(branch, branch).real)
        post = None
        if p >= ZERO_PROBABILITY:
            post = QuantumState(state.n, branch / np.sqrt(p))
        outcomes.append(MeasurementOutcome(label, min(p, 1.0), post))
    return outcomes


def _same_n(a: QuantumState, b: QuantumState) -> None:
    if a.n != b.n:
        raise ValueError(f"qubit count mismatch: {a.n} vs {b.n}")


def fidelity(a: QuantumState, b: QuantumState) -> float:
    _same_n(a, b)
    return float(min(1.0, abs(np.vdot(a.amps, b.amps)) ** 2))


def _move_to_front(state: QuantumState, qubits: Sequence[int]) -> np.ndarray:
    qubits = list(qubits)
    for q in qubits:
        _check_qubit(state, q)
    if len(set(qubits)) != len(qubits):
        raise ValueError("repeated qubit in subset")
    rest = [q for q in range(1, state.n + 1) if q not in qubits]
    psi = np.transpose(state.tensor(), [q - 1 for q in qubits + rest])
    return psi.reshape(2 ** len(qubits), -1)


def reduced_density_matrix(state: QuantumState, qubits: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``qubits``, in the listed order."""
    m = _move_to_front(state, qubits)
    return m @ m.conj().T


def subsystem_fidelity(state: QuantumState, qubits: Sequence[int], ref: QuantumState) -> float:
    """``<ref| rho_qubits |ref>``; equals the pure-state fidelity when the rest factors out."""
    if ref.n != len(qubits):
        raise ValueError("reference size does not match the qubit subset")
    rho = reduced_density_matrix(state, qubits)
    return float(min(1.0, np.vdot(ref.amps, rho @ ref.amps).real))


def entanglement_entropy(state: QuantumState, cut: Iterable[int]) -> float:
    cut = sorted(set(cut))
    if not cut or len(cut) >= state.n:
        raise ValueError("cut must be a proper nonempty subset of the qubits")
    sv = np.linalg.svd(_move_to_front(state, cut), compute_uv=False)
    p = sv**2
    p = p[p > 1e-15]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def canonical_amplitudes(state: QuantumState, tol: float = 1e-12) -> np.ndarray:
    """Amplitudes with the global phase fixed: first nonzero entry real positive."""
    amps = state.amps
    nz = np.flatnonzero(np.abs(amps) > tol)
    if nz.size == 0:
        return amps.copy()
    lead = amps[nz[0]]
    return amps * (abs(lead) / lead)


def states_equal(a: QuantumState, b: QuantumState, tol: float = 1e-12) -> bool:
    if a.n != b.n:
        return False
    return bool(np.allclose(canonical_amplitudes(a), canonical_amplitudes(b), atol=tol, rtol=0))


def factor_qubit(state: QuantumState, q: int, tol: float = 1e-9) -> tuple[np.ndarray, QuantumState | None]:
    """Split off qubit ``q`` when it is unentangled.

    Returns ``(ket, rest)``; ``rest`` is ``None`` for a one-qubit register.
    Raises ``ValueError`` if the qubit is entangled with the others.
    """
    _check_qubit(state, q)
    if state.n == 1:
        return state.amps.copy(), None
    u, sv, vh = np.linalg.svd(_move_to_front(state, [q]), full_matrices=False)
    if sv[1] > tol:
        raise ValueError(f"qubit {q} is entangled with the rest of the register")
    rest = vh[0]
    return u[:, 0], QuantumState(state.n - 1, rest / np.linalg.norm(rest))


def replace_qubit(state: QuantumState, q: int, ket) -> QuantumState:
    """Reset an unentangled qubit to ``ket``; other qubits are untouched."""
    _check_qubit(state, q)
    ket = _ket(ket)
    ket = ket / np.linalg.norm(ket)
    _, rest = factor_qubit(state, q)
    if rest is None:
        return from_amplitudes(ket)
    psi = np.tensordot(ket, rest.tensor(), axes=0)
    psi = np.moveaxis(psi, 0, q - 1)
    return QuantumState(state.n, psi.reshape(-1))


# -- local equivalence -------------------------------------------------------

def _canonical_matrix(u: np.ndarray) -> np.ndarray:
    flat = u.reshape(-1)
    lead = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
    v = u * (abs(lead) / lead)
    # "+ 0.0" folds -0.0 into 0.0 so byte keys compare equal
    return np.stack([np.round(v.real, 9) + 0.0, np.round(v.imag, 9) + 0.0])


def _generate_cliffords() -> tuple[np.ndarray, ...]:
    # breadth-first closure of {H, S}, modulo global phase
    found = [np.eye(2, dtype=complex)]
    keys = {_canonical_matrix(found[0]).tobytes()}
    frontier = list(found)
    while frontier:
        nxt = []
        for u in frontier:
            for g in (GATES["H"], GATES["S"]):
                v = g @ u
                key = _canonical_matrix(v).tobytes()
                if key not in keys:
                    keys.add(key)
                    found.append(v)
                    nxt.append(v)
        frontier = nxt
    return tuple(found)


_CLIFFORDS = _generate_cliffords()


def single_qubit_cliffords() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Clifford unitaries (mod phase), identity first."""
    return _CLIFFORDS


def _overlap_table(a: QuantumState, b: QuantumState, gate_sets: Sequence[np.ndarray]) -> np.ndarray:
    """``|<b| U_1 x ... x U_n |a>|^2`` over every choice of per-qubit gate.

    ``gate_sets[k]`` has shape ``(m_k, 2, 2)``; the result has shape
    ``(m_1, ..., m_n)``.
    """
    n = a.n
    # W[(i1,i1'), (i2,i2'), ...] = conj(b)_{i1 i2 ...} a_{i1' i2' ...}
    w = np.multiply.outer(b.tensor().conj(), a.tensor())
    order = [ax for k in range(n) for ax in (k, n + k)]
    w = np.transpose(w, order).reshape((4,) * n)
    for gates in gate_sets:
        # contract the leading (i, i') axis; the gate-choice axis goes to the back
        w = np.tensordot(w, gates.reshape(len(gates), 4), axes=([0], [1]))
    return np.abs(w) ** 2


def local_clifford_equivalent(a: QuantumState, b: QuantumState, tol: float = 1e-9):
    """Exhaustive search for single-qubit Cliffords mapping ``a`` to ``b``.

    Returns a list of ``n`` 2x2 unitaries ``[U_1, ..., U_n]`` with
    ``(U_1 x ... x U_n)|a>`` equal to ``|b>`` up to global phase, or ``None``.
    The first hit in lexicographic order (qubit 1 slowest) is returned.
    """
    _same_n(a, b)
    if a.n > CLIFFORD_SEARCH_LIMIT:
        raise CapabilityError(f"exhaustive Clifford search is limited to {CLIFFORD_SEARCH_LIMIT} qubits")
    gates = np.stack(_CLIFFORDS)
    # enumerate the leading qubits in Python to keep each table at 24**4 entries
    outer = max(0, a.n - 4)
    for head in itertools.product(range(len(gates)), repeat=outer):
        sets = [gates[i : i + 1] for i in head] + [gates] * (a.n - outer)
        table = _overlap_table(a, b, sets)
        hits = np.flatnonzero(table.reshape(-1) >= 1 - tol)
        if hits.size:
            tail = np.unravel_index(hits[0], table.shape)[outer:]
            return [gates[i].copy() for i in tuple(head) + tuple(tail)]
    return None


def pauli_frame(a: QuantumState, b: QuantumState, tol: float = 1e-9) -> dict[int, str] | None:
    """Lowest-weight Pauli string ``P`` with ``P|a>`` equal to ``|b>`` up to phase.

    Ties are broken lexicographically (qubit 1 first, then I < X < Y < Z).
    The result maps qubit index to ``"X"``, ``"Y"`` or ``"Z"``, omitting identities.
    """
    _same_n(a, b)
    for weight in range(a.n + 1):
        for qubits in itertools.combinations(range(1, a.n + 1), weight):
            for ops in itertools.product("XYZ", repeat=weight):
                frame = dict(zip(qubits, ops))
                if fidelity(apply_frame(a, frame), b) >= 1 - tol:
                    return frame
    return None


def apply_frame(state: QuantumState, frame: Mapping[int, str]) -> QuantumState:
    return apply_all(state, {q: GATES[p] for q, p in frame.items()})


# -- serialization -------------------------------------------------------------

def state_to_json(state: QuantumState, digits: int | None = None) -> dict:
    amps = state.amps
    pairs = [[float(z.real), float(z.imag)] for z in amps]
    if digits is not None:
        pairs = [[round(re, digits) + 0.0, round(im, digits) + 0.0] for re, im in pairs]
    return {"n": state.n, "amps": pairs}


def state_from_json(obj: Mapping) -> QuantumState:
    amps = np.array([complex(re, im) for re, im in obj["amps"]])
    state = from_amplitudes(amps, normalize=True)
    if state.n != int(obj["n"]):
        raise ValueError("qubit count does not match the amplitude list")
    return state
