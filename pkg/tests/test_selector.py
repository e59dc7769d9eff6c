import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qselector import device as dev
from qselector import hilbert as hs
from qselector import oracles
from qselector import selector as sel
from qselector.protocols import references as refs


def pair_config(n, i, j):
    d = dev.default_device(n)
    return d.with_fluxes(dev.pair_pattern(n, i, j)), d.i_t0 - (d.i_c[i - 1] + d.i_c[j - 1]) / 2


def test_pair_bias_switches_only_plus_plus():
    cfg, bias = pair_config(2, 1, 2)
    p = sel.partition(cfg, bias)
    assert p.switch == {"++"}
    assert p.quiet == {"+-", "-+", "--"}


def test_collapse_from_zero_zero():
    # |00> = (|++> + |+-> + |-+> + |-->)/2; removing ++ keeps 3/4
    cfg, bias = pair_config(2, 1, 2)
    out = sel.measure(hs.prepare_product("00"), sel.partition(cfg, bias))
    assert out.quiet_probability == pytest.approx(0.75, abs=1e-12)
    assert out.switch_probability == pytest.approx(0.25, abs=1e-12)
    assert hs.fidelity(out.quiet_state, refs.BELL_COLLAPSE) >= 1 - 1e-12
    assert out.switch_state is None


def test_threshold_tie_raises_naming_sign():
    cfg = dev.default_device(2)  # zero flux: every eigenvalue is 0
    with pytest.raises(sel.DegenerateThresholdError) as info:
        sel.partition(cfg, cfg.i_t0)
    assert info.value.sign == "++"


def test_reverse_both_gives_identical_partition():
    cfg, bias = pair_config(2, 1, 2)
    flipped = cfg.with_fluxes([-f for f in cfg.fluxes])
    assert sel.partition(flipped, -bias) == sel.partition(cfg, bias)
    assert sel.partition(flipped, bias).switch == {"--"}
    assert sel.partition(cfg, -bias).switch == {"--"}


def test_no_measurement_regime_is_trivial():
    cfg, _ = pair_config(3, 1, 2)
    p = sel.partition(cfg, 0.01 * cfg.i_t0)
    assert sel.is_trivial(p)
    rng = np.random.default_rng(2)
    psi = hs.from_amplitudes(rng.normal(size=8) + 1j * rng.normal(size=8), normalize=True)
    out = sel.measure(psi, p)
    assert out.quiet_probability == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(out.quiet_state.amps, psi.amps, atol=1e-12)


def test_impossible_quiet_branch():
    cfg, bias = pair_config(2, 1, 2)
    out = sel.measure(hs.prepare_product("++"), sel.partition(cfg, bias))
    assert out.quiet_probability == pytest.approx(0, abs=1e-14)
    with pytest.raises(hs.BranchImpossibleError):
        out.quiet_state


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_projection_matches_dense_projector(n, seed):
    rng = np.random.default_rng(seed)
    cfg = dev.DeviceConfig(n, rng.uniform(0.5, 1.5, n), 100.0, 50.0, rng.uniform(-1, 1, n))
    p = sel.partition(cfg, float(rng.uniform(45, 55)))
    psi = hs.from_amplitudes(rng.normal(size=2**n) + 1j * rng.normal(size=2**n), normalize=True)
    out = sel.measure(psi, p)
    expected = oracles.projector_from_signs(p.quiet) @ psi.amps if p.quiet else np.zeros(2**n)
    got = out.quiet_state.amps * np.sqrt(out.quiet_probability) if out.quiet_probability > 0 else 0 * expected
    np.testing.assert_allclose(got, expected, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_measure_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    cfg, bias = pair_config(3, 1, 3)
    p = sel.partition(cfg, bias)
    psi = hs.from_amplitudes(rng.normal(size=8) + 1j * rng.normal(size=8), normalize=True)
    once = sel.measure(psi, p)
    if once.quiet_probability > 1e-9:
        twice = sel.measure(once.quiet_state, p)
        assert twice.quiet_probability == pytest.approx(1, abs=1e-12)


def test_exact_and_ideal_agree_in_decoupling_regime():
    for n in (2, 3, 5):
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                cfg, bias = pair_config(n, i, j)
                assert sel.partition(cfg, bias, "exact") == sel.partition(cfg, bias, "ideal")


def test_perturbation_invariance_and_detection():
    cfg, bias = pair_config(2, 1, 2)
    rep = sel.perturb_invariance(cfg, bias, 0.01, 0.4, trials=500, seed=1)
    assert rep.invariant and rep.violations == 0
    assert rep.worst_margin > 0
    # the nominal margin is 1, so a bias wobble of 1.5 must be caught
    assert rep.nominal_margin == pytest.approx(1.0)
    bad = sel.perturb_invariance(cfg, bias, 0.0, 1.5, trials=500, seed=1)
    assert not bad.invariant


def test_partition_tsv_sorted():
    cfg, bias = pair_config(2, 1, 2)
    lines = sel.partition(cfg, bias).dump_tsv().splitlines()
    assert lines[0] == "sign\teigenvalue\tclass"
    assert [l.split("\t")[0] for l in lines[1:]] == ["++", "+-", "-+", "--"]
    assert lines[1].endswith("switch")


def test_unknown_model():
    cfg, bias = pair_config(2, 1, 2)
    with pytest.raises(ValueError):
        sel.partition(cfg, bias, "approximate")
