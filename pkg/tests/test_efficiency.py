import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qselector import efficiency as eff

HALF = eff.GrowthModel(0.5)


def test_joint_probability_examples():
    assert eff.joint_success_probability(16, HALF) == 1 / 16
    assert eff.joint_success_probability(1000, eff.GrowthModel(1.0)) == 1.0
    # starting from pairs needs one success fewer
    assert eff.joint_success_probability(16, HALF, base_size=2) == 1 / 8


@pytest.mark.parametrize("k", range(2, 11))
def test_inverse_linear_for_half(k):
    N = 2**k
    assert eff.joint_success_probability(N, HALF) * N == 1.0


def test_non_power_of_two_uses_ceiling():
    assert eff.joint_success_probability(5, HALF) == 0.5**3
    assert eff.joint_success_probability(3, HALF, base_size=2) == 0.5


def test_domain_guards():
    with pytest.raises(ValueError):
        eff.joint_success_probability(1, HALF)
    with pytest.raises(ValueError):
        eff.postselection_probability(0)
    with pytest.raises(ValueError):
        eff.GrowthModel(0.0)
    with pytest.raises(ValueError):
        eff.GrowthModel(1.2)
    with pytest.raises(ValueError):
        eff.expected_pair_cost(12, HALF)


def test_postselection():
    assert eff.postselection_probability(10) == 2.0**-10


def test_ratio_monotone_increasing():
    logs = [eff.log_probability_ratio(2**k, HALF) for k in range(1, 40)]
    assert all(b > a for a, b in zip(logs, logs[1:]))
    # between powers of two the ratio never drops
    logs = [eff.log_probability_ratio(N, HALF) for N in range(2, 2000)]
    assert all(b >= a - 1e-12 for a, b in zip(logs, logs[1:]))


@given(k=st.integers(1, 20), a=st.floats(0.01, 1.0), b=st.floats(0.01, 1.0))
def test_monotone_in_N_and_p(k, a, b):
    lo, hi = sorted((a, b))
    N = 2**k
    assert eff.joint_success_probability(2 * N, eff.GrowthModel(lo)) <= eff.joint_success_probability(N, eff.GrowthModel(lo))
    assert eff.joint_success_probability(N, eff.GrowthModel(lo)) <= eff.joint_success_probability(N, eff.GrowthModel(hi))


def test_polynomial_order():
    for p in (0.25, 0.5, 0.9):
        N = 2**20
        P = eff.joint_success_probability(N, eff.GrowthModel(p))
        assert math.log(P) / math.log(N) == pytest.approx(math.log2(p), rel=1e-12)


def test_expected_cost_recurrence():
    assert eff.expected_pair_cost(8, eff.GrowthModel(1.0)) == 4
    assert eff.expected_pair_cost(8, HALF) == 16
    assert eff.expected_pair_cost(2, HALF) == 1
    # unrolled recurrence E_k = (2/p) E_{k-1}
    E = 1.0
    for k in range(2, 8):
        E *= 2 / 0.3
        assert eff.expected_pair_cost(2**k, eff.GrowthModel(0.3)) == pytest.approx(E)


def test_monte_carlo_matches_closed_form():
    mc = eff.monte_carlo_growth(64, HALF, trials=10_000, seed=1)
    assert abs(mc.mean - 1024) / 1024 < 0.05


def test_monte_carlo_lossless_and_deterministic():
    mc = eff.monte_carlo_growth(16, eff.GrowthModel(1.0), trials=50)
    assert mc.variance == 0.0 and mc.histogram == {8.0: 50}
    a = eff.monte_carlo_growth(32, HALF, trials=200, seed=5)
    b = eff.monte_carlo_growth(32, HALF, trials=200, seed=5)
    assert a.histogram == b.histogram
    np.testing.assert_array_equal(a.costs, b.costs)


def test_costs_are_even_pair_counts():
    mc = eff.monte_carlo_growth(16, HALF, trials=300, seed=2)
    assert np.all(mc.costs % 2 == 0) and mc.costs.min() == 8


def test_scaling_table_tsv():
    rows = eff.scaling_table([4, 16, 64, 256], HALF)
    assert [r.joint_times_n for r in rows] == [1.0] * 4
    tsv = eff.scaling_tsv(rows).splitlines()
    assert tsv[0].split("\t")[:3] == ["N", "joint_probability", "joint_times_N"]
    assert len(tsv) == 5


def test_model_from_protocol():
    from qselector.protocols import library as lib
    from qselector import device as dev, hilbert as hs

    res = lib.run_cnot(hs.prepare_product("++0"), dev.default_device(3), 1, 2, 3)
    assert eff.GrowthModel.from_protocol(res).p == pytest.approx(0.25)
