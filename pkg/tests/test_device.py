import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qselector import device as dev
from qselector import oracles


def random_config(rng, n, i_c0=100.0):
    return dev.DeviceConfig(n, rng.uniform(0.5, 1.5, n), i_c0, 50.0, rng.uniform(-1, 1, n))


def test_cumulative_flux_sums_regions():
    cfg = dev.default_device(4, fluxes=(0.5, -0.25, 0.1, 0.0))
    assert dev.cumulative_flux(cfg, 1) == pytest.approx(0.5)
    assert dev.cumulative_flux(cfg, 3) == pytest.approx(0.35)
    np.testing.assert_allclose(dev.cumulative_fluxes(cfg), [0.5, 0.25, 0.35, 0.35])


def test_cumulative_flux_bounds():
    cfg = dev.default_device(2)
    with pytest.raises(IndexError):
        dev.cumulative_flux(cfg, 3)
    with pytest.raises(IndexError):
        dev.cumulative_flux(cfg, 0)


def test_fluxes_for_cumulative_inverts():
    target = [0.5, 0.5, 0.0, 0.5]
    cfg = dev.default_device(4, fluxes=dev.fluxes_for_cumulative(target))
    np.testing.assert_allclose(dev.cumulative_fluxes(cfg), target)


def test_pair_pattern_couples_only_the_pair():
    for n, i, j in [(2, 1, 2), (5, 1, 2), (5, 2, 3), (5, 1, 4), (3, 1, 3)]:
        cfg = dev.default_device(n, fluxes=dev.pair_pattern(n, i, j))
        assert dev.coupled_set(dev.coefficients(cfg)) == {i, j}


def test_pair_pattern_rejects_bad_pairs():
    with pytest.raises(dev.ConfigurationError):
        dev.pair_pattern(3, 2, 2)
    with pytest.raises(dev.ConfigurationError):
        dev.pair_pattern(3, 1, 4)


def test_coefficients_pair_pattern_values():
    # F = (1/2, 1/2): a_j = I_c, C = 0 (sin pi = 0), b_12 = sin(pi) ... = 0
    cfg = dev.default_device(2, fluxes=dev.pair_pattern(2, 1, 2))
    c = dev.coefficients(cfg)
    np.testing.assert_allclose(c.linear, [1.0, 1.0])
    assert c.offset == 0.0
    assert c.pair[0, 1] == 0.0


def test_eigenvalue_bell_configuration():
    cfg = dev.default_device(2, fluxes=dev.pair_pattern(2, 1, 2))
    c = dev.coefficients(cfg)
    assert dev.eigenvalue(c, "++") == pytest.approx(2.0)
    assert dev.eigenvalue(c, "+-") == pytest.approx(0.0)
    assert dev.eigenvalue(c, (-1, -1)) == pytest.approx(-2.0)


def test_decoupled_qubit_enters_only_through_pair_terms():
    # qubit 3 has F = 0; its pair terms with the coupled qubits are I_c^2 / (2 I_c0)
    cfg = dev.default_device(3, fluxes=dev.pair_pattern(3, 1, 2))
    c = dev.coefficients(cfg)
    assert c.linear[2] == 0.0
    assert c.pair[0, 2] == pytest.approx(1 / 200)
    assert c.pair[1, 2] == pytest.approx(1 / 200)


def test_eigenvalues_match_scalar_eigenvalue():
    rng = np.random.default_rng(0)
    cfg = random_config(rng, 4)
    c = dev.coefficients(cfg)
    vec = dev.eigenvalues(c)
    for b, row in enumerate(dev.sign_strings(4)):
        assert vec[b] == pytest.approx(dev.eigenvalue(c, row), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_eigenvalues_match_dense_operator(n, seed):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng, n, i_c0=float(rng.uniform(50, 200)))
    op = oracles.current_operator_matrix(n, cfg.i_c, cfg.i_c0, dev.cumulative_fluxes(cfg))
    H = oracles.hadamard_on(n, range(1, n + 1))
    rotated = H @ op @ H
    np.testing.assert_allclose(rotated, np.diag(np.diag(rotated)), atol=1e-12)
    np.testing.assert_allclose(np.diag(rotated).real, dev.eigenvalues(dev.coefficients(cfg)), atol=1e-12)


def test_negated_fluxes_negate_operator():
    rng = np.random.default_rng(3)
    cfg = random_config(rng, 3)
    neg = cfg.with_fluxes([-f for f in cfg.fluxes])
    np.testing.assert_allclose(dev.eigenvalues(dev.coefficients(neg)), dev.eigenvalues(-dev.coefficients(cfg)), atol=1e-14)


def test_ideal_drops_offset_and_pairs():
    cfg = dev.default_device(2, fluxes=(0.25, 0.0))
    c = dev.coefficients(cfg).ideal()
    assert c.offset == 0.0 and not c.pair.any()


def test_config_validation():
    with pytest.raises(dev.ConfigurationError):
        dev.DeviceConfig(2, (1.0,), 100.0, 50.0)
    with pytest.raises(dev.ConfigurationError):
        dev.DeviceConfig(2, (1.0, -1.0), 100.0, 50.0)
    with pytest.raises(dev.ConfigurationError):
        dev.DeviceConfig(2, (1.0, 1.0), 100.0, 150.0)
    with pytest.raises(dev.ConfigurationError):
        dev.DeviceConfig(2, (1.0, 1.0), 100.0, 50.0, (np.nan, 0.0))


def test_weak_large_junction_warning():
    assert dev.validate(dev.default_device(2)) == []
    assert dev.validate(dev.default_device(2, i_c0=5.0, i_t0=2.0))


def test_device_file_round_trip(tmp_path):
    cfg = dev.default_device(3, fluxes=(0.5, 0.0, -0.5))
    path = tmp_path / "d.toml"
    path.write_text(dev.dump_device(cfg))
    assert dev.load_device(path) == cfg


def test_device_file_expressions_and_errors():
    text = "n_qubits = 2  # two\ni_c = [1, 2/2]\ni_c0 = 10 * 10\ni_t0 = 50\nfluxes = [PHI0 / 2, 0]\n"
    with pytest.raises(dev.ConfigurationError):
        dev.parse_device(text)  # PHI0 is not a plain number in device files
    cfg = dev.parse_device(text.replace("PHI0 / 2", "0.5"))
    assert cfg.i_c == (1.0, 1.0) and cfg.i_c0 == 100.0 and cfg.fluxes == (0.5, 0.0)
    with pytest.raises(dev.ConfigurationError, match="unknown key"):
        dev.parse_device("qubits = 2\n")
    with pytest.raises(dev.ConfigurationError, match="missing"):
        dev.parse_device("n_qubits = 2\n")


def test_shipped_device_files_are_the_fixture(programs_dir):
    for n, name in [(2, "two"), (3, "three"), (5, "five")]:
        assert dev.load_device(programs_dir / f"{name}_qubit.toml") == dev.default_device(n)
