"""The acceptance suite: eleven end-to-end checks with fixed tolerances.

Each ``check_*`` function returns a :class:`CheckResult`; :func:`run_all`
runs them in order.  ``qselector check`` and ``tests/test_acceptance.py``
both call into this module.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import stats

from . import device as dev
from . import dsl
from . import efficiency as eff
from . import hilbert as hs
from . import oracles
from . import selector as sel
from .protocols import engine as eng
from .protocols import library as lib
from .protocols import references as refs

__all__ = [
    "CheckResult",
    "CHECKS",
    "run_all",
    "cnot_inputs",
    "cnot_fidelity_table",
    "protocol_programs",
    "shipped_programs",
    "load_shipped_device",
]


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.details.items())
        return f"[{status}] {self.number:>2}. {self.title}: {shown}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


# -- shared fixtures -------------------------------------------------------------

def shipped_programs() -> dict[str, str]:
    """Source text of every ``.qsp`` file shipped with the package."""
    root = resources.files("qselector") / "programs"
    return {p.name: p.read_text(encoding="utf-8") for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".qsp")}


def load_shipped_device(n_qubits: int) -> dev.DeviceConfig:
    name = {2: "two_qubit.toml", 3: "three_qubit.toml", 5: "five_qubit.toml"}[n_qubits]
    return dev.parse_device((resources.files("qselector") / "programs" / name).read_text(encoding="utf-8"))


def protocol_programs() -> dict[str, tuple[eng.Program, dev.DeviceConfig]]:
    """Every built-in protocol as a step program on its fixture device."""
    d2, d3, d5 = dev.default_device(2), dev.default_device(3), dev.default_device(5)
    return {
        "bell": (lib.bell_program(d2), d2),
        "bell_01": (lib.bell_program(d2, "01"), d2),
        "parity_pm": (eng.Program(3, lib.odd_pair_steps(d3, 1, 2)), d3),
        "parity_01": (eng.Program(2, lib.parity_01_steps(d2, 1, 2)), d2),
        "cnot": (lib.cnot_program(d3), d3),
        "cluster4": (lib.cluster4_program(d5), d5),
    }


def cnot_inputs() -> dict[str, tuple[str, str]]:
    """(control, target) kets: the four basis inputs and two superpositions."""
    out = {c + t: (c, t) for c in "01" for t in "01"}
    out["+0"] = ("+", "0")
    out["-1"] = ("-", "1")
    return out


def cnot_fidelity_table(device: dev.DeviceConfig | None = None) -> list[dict]:
    """Fidelity of every accepted CNOT leaf against the dense CNOT on (control, target)."""
    device = device or dev.default_device(3)
    U = oracles.cnot_matrix(2, 1, 2)
    rows = []
    for label, (c, t) in cnot_inputs().items():
        register = hs.prepare_product([c, "+", t])
        expected = hs.from_amplitudes(U @ hs.prepare_product([c, t]).amps)
        result = lib.run_cnot(register, device, 1, 2, 3)
        for leaf in result.tree.accepted_leaves():
            f = hs.subsystem_fidelity(leaf.state, [1, 3], expected)
            rows.append({"input": label, "leaf": leaf.path[-1], "probability": leaf.probability, "fidelity": f})
    return rows


def _timed(fn):
    def wrapper():
        t0 = time.perf_counter()
        res = fn()
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _pair_config(n, i, j):
    d = dev.default_device(n)
    return d.with_fluxes(dev.pair_pattern(n, i, j)), d.i_t0 - (d.i_c[i - 1] + d.i_c[j - 1]) / 2


# -- the checks ------------------------------------------------------------------

@_timed
def check_bell_collapse() -> CheckResult:
    cfg, bias = _pair_config(2, 1, 2)
    psi = hs.prepare_product("00")
    out = sel.measure(psi, sel.partition(cfg, bias))
    # brute force: current operator built term by term, projected onto every sign string
    op = oracles.current_operator_matrix(2, cfg.i_c, cfg.i_c0, dev.cumulative_fluxes(cfg))
    quiet = []
    for s in ("++", "+-", "-+", "--"):
        v = oracles.pm_product_ket(s)
        if abs(bias + np.vdot(v, op @ v).real) < cfg.i_t0:
            quiet.append(s)
    P = oracles.projector_from_signs(quiet)
    brute_p = float(np.vdot(psi.amps, P @ psi.amps).real)
    f = hs.fidelity(out.quiet_state, refs.BELL_COLLAPSE)
    ok = abs(out.quiet_probability - 0.75) <= 1e-12 and abs(brute_p - 0.75) <= 1e-12 and f >= 1 - 1e-12
    return CheckResult(1, "Bell collapse", ok, {"quiet_probability": out.quiet_probability,
                                                "brute_force_probability": brute_p, "fidelity": f})


@_timed
def check_bell_output(shots: int = 100_000, seed: int = 2024) -> CheckResult:
    res = lib.run_bell_prep("00", "flux_only")
    info = res.info
    program, device = protocol_programs()["bell"]
    sampled = eng.sample(program, device, shots, seed)
    leaves = res.tree.leaves
    expected = np.array([l.probability for l in leaves]) * shots
    counts = sampled.counts
    observed = np.array([counts.get(l.path, 0) for l in leaves])
    chi = stats.chisquare(observed, expected)
    ok = (abs(info["entropy"] - 1.0) <= 1e-9 and info["clifford_witness"] is not None
          and chi.pvalue > 1e-3 and set(counts) <= {l.path for l in leaves})
    return CheckResult(2, "Bell output", ok, {
        "entropy": info["entropy"],
        "pauli_frame": info["pauli_frame"],
        "enumerated_success": res.success_probability,
        "stated_success": info["stated_success_probability"],
        "sampled_success": sampled.success_fraction,
        "chi2_p": float(chi.pvalue),
        "note": info["note"],
    })


@_timed
def check_reversal() -> CheckResult:
    cfg, bias = _pair_config(2, 1, 2)
    round1 = sel.partition(cfg, bias)
    flipped = cfg.with_fluxes([-f for f in cfg.fluxes])
    both = sel.partition(flipped, -bias)
    flux_only = sel.partition(flipped, bias)
    ok = both == round1 and flux_only != round1
    return CheckResult(3, "Reversal semantics", ok, {
        "round1_switch": sorted(round1.switch), "both_switch": sorted(both.switch),
        "flux_only_switch": sorted(flux_only.switch),
    })


@_timed
def check_cnot() -> CheckResult:
    rows = cnot_fidelity_table()
    worst = min(r["fidelity"] for r in rows)
    inputs = {r["input"] for r in rows}
    ok = worst >= 1 - 1e-9 and len(inputs) == 6
    return CheckResult(4, "CNOT", ok, {"accepted_leaves": len(rows), "worst_fidelity": worst,
                                       "flip_on": lib.CNOT_FLIP_OUTCOME, "phase": "Z on control"})


@_timed
def check_cluster() -> CheckResult:
    res = lib.run_cluster4()
    records = [a for leaf in res.tree.accepted_leaves() for a in leaf.assertions]
    f5 = min(a.fidelity for a in records if a.reference == "cluster5")
    f4 = min(a.fidelity for a in records if a.reference == "cluster4")
    t0 = time.perf_counter()
    witness = hs.local_clifford_equivalent(refs.CLUSTER4, refs.CLUSTER_CANONICAL)
    search_s = time.perf_counter() - t0
    ok = f5 >= 1 - 1e-9 and f4 >= 1 - 1e-9 and witness is not None and search_s < 60
    return CheckResult(5, "Cluster pipeline", ok, {
        "success_probability": res.success_probability, "cluster5_fidelity": f5, "cluster4_fidelity": f4,
        "frame_cluster4": refs.CLUSTER_FRAME_4, "witness_found": witness is not None, "search_seconds": round(search_s, 3),
    })


@_timed
def check_robustness(trials: int = 1000, seed: int = 11, tree_trials: int = 5) -> CheckResult:
    flux_eps, bias_eps = 0.01, 0.4
    violations, configs, worst = 0, 0, np.inf
    for k, (name, (program, device)) in enumerate(protocol_programs().items()):
        for m, (cfg, bias) in enumerate(eng.select_configurations(program, device)):
            rep = sel.perturb_invariance(cfg, bias, flux_eps, bias_eps, trials, seed=seed + 100 * k + m)
            violations += rep.violations
            worst = min(worst, rep.worst_margin)
            configs += 1
    # branch probabilities: whole trees under a shared offset, compared bit for bit
    rng = np.random.default_rng(seed)
    tree_mismatch = 0
    for name, (program, device) in protocol_programs().items():
        nominal = eng.enumerate_tree(program, device)
        for _ in range(tree_trials):
            off = rng.uniform(-flux_eps, flux_eps, device.n_qubits)
            db = rng.uniform(-bias_eps, bias_eps)
            pert = eng.enumerate_tree(program, device, flux_offsets=off, bias_offset=db)
            if not eng.trees_equal(nominal, pert, tol=0.0):
                tree_mismatch += 1
    ok = violations == 0 and tree_mismatch == 0
    return CheckResult(6, "Robustness", ok, {"select_configs": configs, "trials": trials, "violations": violations,
                                             "worst_margin": float(worst), "tree_mismatches": tree_mismatch})


@_timed
def check_decoupling() -> CheckResult:
    mismatches, configs, worst_excess = 0, 0, -np.inf
    for name, (program, device) in protocol_programs().items():
        for cfg, bias in eng.select_configurations(program, device):
            configs += 1
            if sel.partition(cfg, bias, "exact") != sel.partition(cfg, bias, "ideal"):
                mismatches += 1
            n = cfg.n_qubits
            coeffs = dev.coefficients(cfg)
            values = dev.eigenvalues(coeffs)
            bound = (n - 1) * max(cfg.i_c) ** 2 / (2 * cfg.i_c0)
            for q in set(range(1, n + 1)) - dev.coupled_set(coeffs):
                flipped = np.arange(2**n) ^ (1 << (n - q))
                contribution = np.max(np.abs(values - values[flipped])) / 2
                worst_excess = max(worst_excess, contribution - bound)
    ok = mismatches == 0 and worst_excess <= 1e-12
    return CheckResult(7, "Decoupling regime", ok, {"configs": configs, "mismatches": mismatches,
                                                    "max_contribution_minus_bound": float(worst_excess)})


@_timed
def check_no_measurement(seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_p, worst_d = 0.0, 0.0
    for n, (i, j) in ((2, (1, 2)), (3, (1, 2)), (3, (2, 3)), (5, (3, 4))):
        cfg, _ = _pair_config(n, i, j)
        part = sel.partition(cfg, 0.01 * cfg.i_t0)
        for _ in range(5):
            z = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            psi = hs.from_amplitudes(z, normalize=True)
            out = sel.measure(psi, part)
            worst_p = max(worst_p, abs(out.quiet_probability - 1))
            worst_d = max(worst_d, float(np.max(np.abs(out.quiet_state.amps - psi.amps))))
    ok = worst_p <= 1e-12 and worst_d <= 1e-12
    return CheckResult(8, "No-measurement regime", ok, {"max_probability_error": worst_p, "max_amplitude_error": worst_d})


@_timed
def check_scaling(trials: int = 10_000, seed: int = 1) -> CheckResult:
    model = eff.GrowthModel(0.5)
    Ns = [2**k for k in range(2, 11)]
    exact = all(eff.joint_success_probability(N, model) * N == 1.0 for N in Ns)
    ratios = [eff.log_probability_ratio(N, model) for N in Ns]
    monotone = all(b > a for a, b in zip(ratios, ratios[1:]))
    mc = eff.monte_carlo_growth(64, model, trials, seed)
    analytic = eff.expected_pair_cost(64, model)
    rel = abs(mc.mean - analytic) / analytic
    ok = exact and monotone and rel <= 0.05
    return CheckResult(9, "Scaling", ok, {"P_times_N_is_1": exact, "ratio_monotone": monotone,
                                          "mc_mean": mc.mean, "analytic": analytic, "relative_error": rel})


@_timed
def check_dsl(fuzz_cases: int = 3000, seed: int = 9) -> CheckResult:
    progs = shipped_programs()
    fixed = 0
    for text in progs.values():
        once = dsl.format(dsl.parse(text))
        if dsl.format(dsl.parse(once)) == once and dsl.parse(once) == dsl.parse(text):
            fixed += 1
    program = dsl.parse(progs["cluster4.qsp"])
    interpreted = dsl.interpret(program, load_shipped_device(5))
    builtin = lib.run_cluster4()
    same_tree = eng.trees_equal(interpreted.tree, builtin.tree, tol=1e-12)
    rng = np.random.default_rng(seed)
    crashes = 0
    for _ in range(fuzz_cases):
        blob = rng.integers(0, 256, size=int(rng.integers(0, 64)), dtype=np.uint8).tobytes()
        try:
            dsl.parse(blob)
        except dsl.DSLSyntaxError:
            pass
        except Exception:  # noqa: BLE001 - any other exception is a parser crash
            crashes += 1
    ok = len(progs) >= 5 and fixed == len(progs) and same_tree and crashes == 0
    return CheckResult(10, "DSL", ok, {"programs": len(progs), "fixed_points": fixed,
                                       "cluster4_tree_equal": same_tree, "fuzz_cases": fuzz_cases, "crashes": crashes})


@_timed
def check_oracles(seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    proj_err = 0.0
    for n in range(1, 5):
        for _ in range(6):
            cfg = dev.DeviceConfig(n, rng.uniform(0.5, 1.5, n), 100.0, 50.0, rng.uniform(-1, 1, n))
            bias = float(rng.uniform(40.0, 60.0))
            part = sel.partition(cfg, bias)
            psi = hs.from_amplitudes(rng.normal(size=2**n) + 1j * rng.normal(size=2**n), normalize=True)
            out = sel.measure(psi, part)
            kept = (oracles.projector_from_signs(part.quiet) @ psi.amps) if part.quiet else np.zeros(2**n)
            got = out.quiet_state.amps * np.sqrt(out.quiet_probability) if out.quiet_probability > 0 else 0 * kept
            proj_err = max(proj_err, float(np.max(np.abs(got - kept))))
    # parity operators against explicit projectors
    parity_err = 0.0
    for n, (i, j) in ((2, (1, 2)), (3, (1, 3)), (4, (2, 4)), (4, (1, 2))):
        d = dev.default_device(n)
        psi = hs.from_amplitudes(rng.normal(size=2**n) + 1j * rng.normal(size=2**n), normalize=True)
        for result, P in ((lib.run_parity_pm(psi, d, i, j), oracles.odd_pm_projector(n, i, j)),
                          (lib.run_parity_01(psi, d, i, j), oracles.odd_comp_projector(n, i, j))):
            leaf = result.success_leaf
            expected = P @ psi.amps
            parity_err = max(parity_err, abs(result.success_probability - np.vdot(expected, expected).real))
            parity_err = max(parity_err, 1 - hs.fidelity(leaf.state, hs.from_amplitudes(expected, normalize=True)))
    # eigenvalues against the dense operator
    eig_err = 0.0
    for n in range(1, 7):
        cfg = dev.DeviceConfig(n, rng.uniform(0.5, 1.5, n), 100.0, 50.0, rng.uniform(-1, 1, n))
        op = oracles.current_operator_matrix(n, cfg.i_c, cfg.i_c0, dev.cumulative_fluxes(cfg))
        H = oracles.hadamard_on(n, range(1, n + 1))
        rotated = H @ op @ H
        diag = rotated.diagonal().real
        off = rotated - np.diag(rotated.diagonal())
        ours = dev.eigenvalues(dev.coefficients(cfg))
        eig_err = max(eig_err, float(np.max(np.abs(diag - ours))), float(np.max(np.abs(off))),
                      float(np.max(np.abs(np.sort(np.linalg.eigvalsh(op)) - np.sort(ours)))))
    ok = proj_err <= 1e-12 and parity_err <= 1e-12 and eig_err <= 1e-12
    return CheckResult(11, "Oracle equivalence", ok, {"projection_error": proj_err, "parity_error": parity_err,
                                                      "eigenvalue_error": eig_err})


CHECKS = (
    check_bell_collapse,
    check_bell_output,
    check_reversal,
    check_cnot,
    check_cluster,
    check_robustness,
    check_decoupling,
    check_no_measurement,
    check_scaling,
    check_dsl,
    check_oracles,
)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
