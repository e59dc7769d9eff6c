import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qselector import hilbert as hs
from qselector import oracles
from qselector.protocols import references as refs


def random_state(rng, n):
    return hs.from_amplitudes(rng.normal(size=2**n) + 1j * rng.normal(size=2**n), normalize=True)


def test_qubit_one_is_most_significant():
    s = hs.prepare_product("10")
    assert s.amps[2] == 1


def test_norm_enforced():
    with pytest.raises(ValueError):
        hs.QuantumState(1, np.array([1, 1]))
    with pytest.raises(ValueError):
        hs.from_amplitudes([0, 0], normalize=True)


def test_gate_matches_kron():
    rng = np.random.default_rng(1)
    psi = random_state(rng, 3)
    out = hs.apply_gate(psi, 2, "H")
    dense = oracles.kron_operator(3, {2: hs.GATES["H"]}) @ psi.amps
    np.testing.assert_allclose(out.amps, dense, atol=1e-14)


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        hs.apply_gate(hs.prepare_product("0"), 1, np.array([[1, 1], [0, 1]]))


def test_measure_probabilities_and_post_states():
    psi = hs.prepare_product(["+", "0"])
    comp = hs.measure_qubit(psi, 1, "comp")
    assert [o.label for o in comp] == ["0", "1"]
    assert comp[0].probability == pytest.approx(0.5)
    assert hs.fidelity(comp[1].post_state, hs.prepare_product("10")) == pytest.approx(1)
    pm = hs.measure_qubit(psi, 1, "pm")
    assert pm[0].probability == pytest.approx(1) and not pm[1].possible
    with pytest.raises(hs.BranchImpossibleError):
        pm[1].post_state


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1), basis=st.sampled_from(["comp", "pm"]))
def test_measurement_probabilities_sum_to_one(n, seed, basis):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    q = int(rng.integers(1, n + 1))
    outs = hs.measure_qubit(psi, q, basis)
    assert sum(o.probability for o in outs) == pytest.approx(1, abs=1e-12)


def test_entropy_of_bell_and_product():
    assert hs.entanglement_entropy(refs.PSI_MINUS, [1]) == pytest.approx(1.0, abs=1e-12)
    assert hs.entanglement_entropy(hs.prepare_product("+0"), [1]) == pytest.approx(0.0, abs=1e-12)


def test_subsystem_fidelity_ignores_factored_qubits():
    psi = hs.from_amplitudes(np.kron(refs.PSI_MINUS.amps, hs.KETS["+"]))
    assert hs.subsystem_fidelity(psi, [1, 2], refs.PSI_MINUS) == pytest.approx(1)


def test_states_equal_modulo_phase():
    a = hs.prepare_product("+1")
    b = hs.from_amplitudes(a.amps * np.exp(0.7j))
    assert hs.states_equal(a, b)
    assert not hs.states_equal(a, hs.prepare_product("-1"))


def test_replace_qubit_and_factor():
    psi = hs.prepare_product("0+1")
    out = hs.replace_qubit(psi, 2, "0")
    assert hs.states_equal(out, hs.prepare_product("001"))
    with pytest.raises(ValueError):
        hs.replace_qubit(hs.from_amplitudes(np.kron(refs.PSI_MINUS.amps, [1, 0])), 1, "0")


def test_twenty_four_cliffords():
    cl = hs.single_qubit_cliffords()
    assert len(cl) == 24
    np.testing.assert_allclose(cl[0], np.eye(2))
    # closed under conjugating Paulis to Paulis (up to sign)
    paulis = [hs.GATES[p] for p in "XYZ"]
    for u in cl:
        for p in paulis:
            m = u @ p @ u.conj().T
            assert any(np.allclose(m, s * q) for q in paulis for s in (1, -1))


def test_pauli_frame_bell():
    assert hs.pauli_frame(refs.PHI_MINUS, refs.PSI_MINUS) == {1: "X"}
    assert hs.pauli_frame(refs.PSI_MINUS, refs.PSI_MINUS) == {}


def test_local_clifford_search_negative():
    # a product state is never locally equivalent to an entangled one
    assert hs.local_clifford_equivalent(hs.prepare_product("00"), refs.PSI_MINUS) is None


def test_cluster_witness_within_budget():
    t0 = time.perf_counter()
    witness = hs.local_clifford_equivalent(refs.CLUSTER4, refs.CLUSTER_CANONICAL)
    assert time.perf_counter() - t0 < 60
    assert witness is not None
    u = witness[0]
    for g in witness[1:]:
        u = np.kron(u, g)
    assert hs.fidelity(hs.from_amplitudes(u @ refs.CLUSTER4.amps), refs.CLUSTER_CANONICAL) >= 1 - 1e-9


def test_clifford_search_limit():
    big = hs.prepare_product("0" * 7)
    with pytest.raises(hs.CapabilityError):
        hs.local_clifford_equivalent(big, big)


def test_json_round_trip():
    rng = np.random.default_rng(4)
    psi = random_state(rng, 3)
    assert hs.states_equal(hs.state_from_json(hs.state_to_json(psi)), psi)
