"""The voltage-monitoring state selector.

Biasing the large junction splits the product eigenbasis of the current
operator in two: sign strings with ``|I_b + I(s)| < I_T0`` keep the junction
superconducting (``quiet``, V = 0) and the rest drive it resistive
(``switch``).  Watching the voltage is then a two-outcome projective
measurement onto the span of each set.  The switch outcome destroys the
register.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import device as dev
from .hilbert import GATES, ZERO_PROBABILITY, BranchImpossibleError, QuantumState, _apply_tensor

__all__ = [
    "SwitchPartition",
    "SelectorOutcome",
    "PerturbationReport",
    "DegenerateThresholdError",
    "THRESHOLD_TOL",
    "partition",
    "is_trivial",
    "measure",
    "perturb_invariance",
    "to_pm_basis",
    "from_pm_basis",
]

THRESHOLD_TOL = 1e-12
MODELS = ("exact", "ideal")


class DegenerateThresholdError(ValueError):
    """A sign string sits on the switching threshold."""

    def __init__(self, sign: str, value: float, threshold: float):
        self.sign = sign
        self.value = value
        super().__init__(
            f"sign string {sign} gives |I_b + I(s)| = {value!r}, "
            f"within {THRESHOLD_TOL:g} of the threshold {threshold!r}"
        )


def sign_label(row) -> str:
    return "".join("+" if x > 0 else "-" for x in row)


@dataclass(frozen=True, eq=False)
class SwitchPartition:
    n: int
    quiet: frozenset
    switch: frozenset
    bias: float
    model: str
    i_t0: float
    eigenvalues: np.ndarray = field(repr=False)
    quiet_mask: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, SwitchPartition):
            return NotImplemented
        return self.n == other.n and self.quiet == other.quiet and self.switch == other.switch

    def __hash__(self):
        return hash((self.n, self.quiet, self.switch))

    @property
    def margins(self) -> np.ndarray:
        """``| |I_b + I(s)| - I_T0 |`` per sign string, index order."""
        return np.abs(np.abs(self.bias + self.eigenvalues) - self.i_t0)

    @property
    def margin(self) -> float:
        return float(self.margins.min())

    def dump_tsv(self) -> str:
        """Sorted sign strings with eigenvalue and classification."""
        rows = ["sign\teigenvalue\tclass"]
        signs = dev.sign_strings(self.n)
        entries = sorted(
            (sign_label(signs[b]), float(self.eigenvalues[b]), "quiet" if self.quiet_mask[b] else "switch")
            for b in range(2**self.n)
        )
        rows += [f"{s}\t{v!r}\t{c}" for s, v, c in entries]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True, eq=False)
class SelectorOutcome:
    quiet_probability: float
    switch_probability: float
    _quiet_state: QuantumState | None = None

    @property
    def quiet_state(self) -> QuantumState:
        if self._quiet_state is None:
            raise BranchImpossibleError(f"quiet outcome has probability {self.quiet_probability:.3g}")
        return self._quiet_state

    @property
    def switch_state(self):
        # the junction went resistive; nothing usable is left
        return None


def _model_eigenvalues(config: dev.DeviceConfig, model: str) -> np.ndarray:
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    coeffs = dev.coefficients(config)
    if model == "ideal":
        coeffs = coeffs.ideal()
    return dev.eigenvalues(coeffs)


def partition(config: dev.DeviceConfig, bias: float, model: str = "exact") -> SwitchPartition:
    if not np.isfinite(bias):
        raise ValueError("bias must be finite")
    values = _model_eigenvalues(config, model)
    totals = np.abs(bias + values)
    ties = np.flatnonzero(np.abs(totals - config.i_t0) <= THRESHOLD_TOL)
    if ties.size:
        b = ties[0]
        raise DegenerateThresholdError(sign_label(dev.sign_strings(config.n_qubits)[b]), float(totals[b]), config.i_t0)
    mask = totals < config.i_t0
    labels = [sign_label(r) for r in dev.sign_strings(config.n_qubits)]
    values = values.copy()
    values.setflags(write=False)
    mask.setflags(write=False)
    return SwitchPartition(
        n=config.n_qubits,
        quiet=frozenset(l for l, m in zip(labels, mask) if m),
        switch=frozenset(l for l, m in zip(labels, mask) if not m),
        bias=float(bias),
        model=model,
        i_t0=config.i_t0,
        eigenvalues=values,
        quiet_mask=mask,
    )


def is_trivial(p: SwitchPartition) -> bool:
    return not p.switch


def to_pm_basis(amps: np.ndarray, n: int) -> np.ndarray:
    """Amplitudes in the product ``|+->`` basis (H on every qubit)."""
    psi = np.asarray(amps).reshape((2,) * n)
    for q in range(1, n + 1):
        psi = _apply_tensor(psi, q, GATES["H"])
    return psi.reshape(-1)


from_pm_basis = to_pm_basis  # H is self-inverse


def measure(state: QuantumState, p: SwitchPartition) -> SelectorOutcome:
    if state.n != p.n:
        raise ValueError(f"state has {state.n} qubits, partition covers {p.n}")
    coeffs = to_pm_basis(state.amps, state.n)
    kept = np.where(p.quiet_mask, coeffs, 0)
    q_prob = float(np.vdot(kept, kept).real)
    q_prob = min(max(q_prob, 0.0), 1.0)
    quiet_state = None
    if q_prob >= ZERO_PROBABILITY:
        back = from_pm_basis(kept, state.n)
        quiet_state = QuantumState(state.n, back / np.linalg.norm(back))
    return SelectorOutcome(q_prob, 1.0 - q_prob, quiet_state)


@dataclass(frozen=True)
class PerturbationReport:
    invariant: bool
    trials: int
    violations: int
    nominal_margin: float
    worst_margin: float


def perturb_invariance(
    config: dev.DeviceConfig,
    bias: float,
    flux_eps: float,
    bias_eps: float,
    trials: int,
    seed: int = 0,
    model: str = "exact",
) -> PerturbationReport:
    """Check that bounded random miscalibration leaves the partition unchanged.

    Every region flux and the bias receive independent uniform offsets in
    ``[-eps, eps]``.  Threshold ties count as violations.
    """
    if flux_eps < 0 or bias_eps < 0:
        raise ValueError("perturbation sizes must be non-negative")
    nominal = partition(config, bias, model)
    rng = np.random.default_rng(seed)
    df = rng.uniform(-flux_eps, flux_eps, size=(trials, config.n_qubits))
    db = rng.uniform(-bias_eps, bias_eps, size=trials)
    violations = 0
    worst = nominal.margin
    for k in range(trials):
        cfg = config.with_fluxes(np.asarray(config.fluxes) + df[k])
        try:
            p = partition(cfg, bias + db[k], model)
        except DegenerateThresholdError:
            violations += 1
            worst = 0.0
            continue
        worst = min(worst, p.margin)
        if p != nominal:
            violations += 1
    return PerturbationReport(violations == 0, trials, violations, nominal.margin, worst)
