"""Circuit parameters and the current operator of the parallel charge-qubit circuit.

Fluxes are dimensionless (units of the flux quantum); currents are in any
consistent unit.  Entry ``j`` of :attr:`DeviceConfig.fluxes` is the flux
threading region ``s_{j-1,j}``; the cumulative flux seen by qubit ``j`` is the
partial sum of the first ``j`` entries.

The total current operator is diagonal in the product eigenbasis of the
``sigma_x`` operators, so everything downstream works with sign strings
``s in {+1, -1}^k``::

    I(s) = sum_j a_j s_j - C - sum_{i<j} b_ij s_i s_j
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "DeviceConfig",
    "CurrentCoefficients",
    "ConfigurationError",
    "validate",
    "cumulative_flux",
    "cumulative_fluxes",
    "coefficients",
    "eigenvalue",
    "eigenvalues",
    "sign_strings",
    "coupled_set",
    "fluxes_for_cumulative",
    "pair_pattern",
    "default_device",
    "load_device",
    "dump_device",
]

DEFAULT_COUPLED_TOL = 1e-9
WEAK_JUNCTION_RATIO = 10.0


class ConfigurationError(ValueError):
    """Raised for invalid device parameters or unrealizable flux settings."""


@dataclass(frozen=True)
class DeviceConfig:
    n_qubits: int
    i_c: tuple[float, ...]
    i_c0: float
    i_t0: float
    fluxes: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "i_c", tuple(float(x) for x in self.i_c))
        fluxes = tuple(self.fluxes) if len(self.fluxes) else (0.0,) * self.n_qubits
        object.__setattr__(self, "fluxes", tuple(float(x) for x in fluxes))
        object.__setattr__(self, "i_c0", float(self.i_c0))
        object.__setattr__(self, "i_t0", float(self.i_t0))
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ConfigurationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        if len(self.i_c) != self.n_qubits:
            raise ConfigurationError(f"expected {self.n_qubits} critical currents, got {len(self.i_c)}")
        if len(self.fluxes) != self.n_qubits:
            raise ConfigurationError(f"expected {self.n_qubits} region fluxes, got {len(self.fluxes)}")
        if not all(np.isfinite(self.fluxes)):
            raise ConfigurationError("region fluxes must be finite")
        if any(not (x > 0) for x in self.i_c):
            raise ConfigurationError("qubit critical currents must be positive")
        if not self.i_c0 > 0:
            raise ConfigurationError("i_c0 must be positive")
        if not (0 < self.i_t0 <= self.i_c0):
            raise ConfigurationError("switching threshold must satisfy 0 < i_t0 <= i_c0")

    def with_fluxes(self, fluxes: Sequence[float]) -> "DeviceConfig":
        return replace(self, fluxes=tuple(fluxes))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "i_c": list(self.i_c),
            "i_c0": self.i_c0,
            "i_t0": self.i_t0,
            "fluxes": list(self.fluxes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceConfig":
        return cls(
            n_qubits=int(d["n_qubits"]),
            i_c=tuple(d["i_c"]),
            i_c0=d["i_c0"],
            i_t0=d["i_t0"],
            fluxes=tuple(d.get("fluxes", ())),
        )


@dataclass(frozen=True)
class CurrentCoefficients:
    """Coefficients of the current operator.

    ``pair`` is a full symmetric ``k x k`` array with a zero diagonal; only the
    strict upper triangle carries meaning.
    """

    linear: np.ndarray
    offset: float
    pair: np.ndarray
    scale: float = 1.0  # max qubit critical current, the reference for coupled_set

    @property
    def n_qubits(self) -> int:
        return len(self.linear)

    def __neg__(self) -> "CurrentCoefficients":
        return CurrentCoefficients(-self.linear, -self.offset, -self.pair, self.scale)

    def ideal(self) -> "CurrentCoefficients":
        """Drop the offset and the pair terms (both are O(I_c^2 / I_c0))."""
        k = self.n_qubits
        return CurrentCoefficients(self.linear.copy(), 0.0, np.zeros((k, k)), self.scale)


def validate(config: DeviceConfig) -> list[str]:
    """Return modeling-regime warnings. Hard violations raise at construction."""
    warnings = []
    if config.i_c0 < WEAK_JUNCTION_RATIO * max(config.i_c):
        warnings.append(
            f"i_c0={config.i_c0:g} is below {WEAK_JUNCTION_RATIO:g} x max(i_c); "
            "the large-junction expansion may not hold"
        )
    return warnings


def _check_index(config: DeviceConfig, j: int) -> None:
    if not (1 <= j <= config.n_qubits):
        raise IndexError(f"qubit index {j} out of range 1..{config.n_qubits}")


def cumulative_flux(config: DeviceConfig, j: int) -> float:
    _check_index(config, j)
    return float(sum(config.fluxes[:j]))


def cumulative_fluxes(config: DeviceConfig) -> np.ndarray:
    return np.cumsum(np.asarray(config.fluxes, dtype=float))


def fluxes_for_cumulative(targets: Sequence[float]) -> tuple[float, ...]:
    """Region fluxes that realize the given cumulative fluxes."""
    targets = [float(t) for t in targets]
    return tuple(t - prev for t, prev in zip(targets, [0.0] + targets[:-1]))


def _sin_pi(x) -> np.ndarray:
    # sin(k*pi) evaluates to ~1e-16; snap so decoupled terms vanish exactly.
    out = np.sin(np.pi * np.asarray(x, dtype=float))
    out[np.abs(out) < 1e-14] = 0.0
    return out


def coefficients(config: DeviceConfig) -> CurrentCoefficients:
    F = cumulative_fluxes(config)
    ic = np.asarray(config.i_c)
    linear = _sin_pi(F) * ic
    offset = float(np.sum(_sin_pi(2 * F) * ic**2) / (4 * config.i_c0))
    pair = _sin_pi(F[:, None] + F[None, :]) * np.outer(ic, ic) / (2 * config.i_c0)
    np.fill_diagonal(pair, 0.0)
    return CurrentCoefficients(linear, offset, pair, float(ic.max()))


def _signs(s) -> np.ndarray:
    if isinstance(s, str):
        s = [{"+": 1, "-": -1}[c] for c in s]
    arr = np.asarray(s, dtype=float)
    if not np.all(np.abs(arr) == 1):
        raise ValueError("sign strings may only contain +1 and -1")
    return arr


def eigenvalue(coeffs: CurrentCoefficients, s: Sequence[int]) -> float:
    """Eigenvalue of the current operator on the product state ``|s>``."""
    arr = _signs(s)
    if arr.shape != (coeffs.n_qubits,):
        raise ValueError(f"sign string has length {arr.size}, device has {coeffs.n_qubits} qubits")
    # pair is symmetric with zero diagonal, so the quadratic form double counts.
    return float(arr @ coeffs.linear - coeffs.offset - 0.5 * arr @ coeffs.pair @ arr)


def sign_strings(n: int) -> np.ndarray:
    """All ``2**n`` sign strings, row ``b`` matching basis index ``b``.

    Bit value 0 of qubit ``q`` (``q=1`` most significant) maps to ``+1``.
    """
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return 1 - 2 * bits


def eigenvalues(coeffs: CurrentCoefficients) -> np.ndarray:
    """Vectorized :func:`eigenvalue` over every sign string, in index order."""
    S = sign_strings(coeffs.n_qubits).astype(float)
    quad = np.einsum("bi,ij,bj->b", S, coeffs.pair, S)
    return S @ coeffs.linear - coeffs.offset - 0.5 * quad


def coupled_set(coeffs: CurrentCoefficients, tol: float = DEFAULT_COUPLED_TOL) -> set[int]:
    """Qubits with ``|a_j| > tol * max(I_c)``.

    Qubits outside the set can still enter the pair terms at O(I_c^2 / I_c0).
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return {j + 1 for j, a in enumerate(coeffs.linear) if abs(a) > tol * coeffs.scale}


def default_device(n_qubits: int, **overrides) -> DeviceConfig:
    """Test fixture: unit qubit junctions, I_c0 = 100, I_T0 = 50, zero flux."""
    params = dict(n_qubits=n_qubits, i_c=(1.0,) * n_qubits, i_c0=100.0, i_t0=50.0)
    params.update(overrides)
    return DeviceConfig(**params)


# -- key/value config files ---------------------------------------------------

_KEYS = ("n_qubits", "i_c", "i_c0", "i_t0", "fluxes")


def _eval_value(text: str, line_no: int):
    from .dsl.parser import parse_expression
    from .dsl.interpret import evaluate

    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigurationError(f"line {line_no}: unterminated list")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [evaluate(parse_expression(part), {}) for part in inner.split(",")]
    return evaluate(parse_expression(text), {})


def parse_device(text: str) -> DeviceConfig:
    """Parse the ``key = value`` device format.

    Values are DSL expressions (``PHI0`` is available) or bracketed lists of
    them.  ``#`` starts a comment.
    """
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigurationError(f"line {line_no}: unknown key {key!r}")
        try:
            values[key] = _eval_value(value, line_no)
        except ConfigurationError:
            raise
        except Exception as exc:  # DSL syntax/eval errors
            raise ConfigurationError(f"line {line_no}: {exc}") from exc
    missing = [k for k in ("n_qubits", "i_c", "i_c0", "i_t0") if k not in values]
    if missing:
        raise ConfigurationError(f"missing keys: {', '.join(missing)}")
    n = values["n_qubits"]
    if n != int(n):
        raise ConfigurationError("n_qubits must be an integer")
    values["n_qubits"] = int(n)
    ic = values["i_c"]
    if not isinstance(ic, list):
        ic = [ic] * values["n_qubits"]
    values["i_c"] = tuple(ic)
    values["fluxes"] = tuple(values.get("fluxes", ()))
    return DeviceConfig(**values)


def load_device(path) -> DeviceConfig:
    return parse_device(Path(path).read_text(encoding="utf-8"))


def dump_device(config: DeviceConfig) -> str:
    def fmt(x):
        return repr(float(x))

    return (
        f"n_qubits = {config.n_qubits}\n"
        f"i_c = [{', '.join(fmt(x) for x in config.i_c)}]\n"
        f"i_c0 = {fmt(config.i_c0)}\n"
        f"i_t0 = {fmt(config.i_t0)}\n"
        f"fluxes = [{', '.join(fmt(x) for x in config.fluxes)}]\n"
    )


def pair_pattern(n_qubits: int, i: int, j: int) -> tuple[float, ...]:
    """Region fluxes coupling exactly qubits ``i`` and ``j`` at half a flux quantum."""
    if i == j:
        raise ConfigurationError("a pair needs two distinct qubits")
    for q in (i, j):
        if not (1 <= q <= n_qubits):
            raise ConfigurationError(f"qubit {q} not on a {n_qubits}-qubit device")
    F = [0.0] * n_qubits
    F[i - 1] = F[j - 1] = 0.5
    return fluxes_for_cumulative(F)

