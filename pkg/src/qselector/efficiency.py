"""Resource scaling for growing cluster states by repeated block doubling.

Two blocks of size ``m`` are combined into one of size ``2m`` with
probability ``p``; a failed combination destroys both inputs.  Along a single
lineage, reaching size ``N`` from blocks of size ``base_size`` takes
``ceil(log2(N / base_size))`` successes, so the joint probability is
polynomial in ``N``, against ``2**-N`` for post-selecting the whole state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GrowthModel",
    "MonteCarloResult",
    "joint_success_probability",
    "postselection_probability",
    "log_probability_ratio",
    "probability_ratio",
    "expected_pair_cost",
    "monte_carlo_growth",
    "ScalingRow",
    "scaling_table",
    "scaling_tsv",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 0
POLICIES = ("discard_both",)


@dataclass(frozen=True)
class GrowthModel:
    p: float
    pair_cost: float = 1.0
    policy: str = "discard_both"

    def __post_init__(self):
        p = float(self.p)
        if not (0.0 < p <= 1.0) or math.isnan(p):
            raise ValueError(f"combination success probability must lie in (0, 1], got {self.p!r}")
        if not self.pair_cost > 0:
            raise ValueError("pair_cost must be positive")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_protocol(cls, result, pair_cost: float = 1.0) -> "GrowthModel":
        """Use a protocol's enumerated success probability as ``p``."""
        return cls(result.success_probability, pair_cost)


def _levels(N: int, base_size: int) -> int:
    if base_size not in (1, 2):
        raise ValueError("base_size must be 1 or 2")
    if N < 2 or N != int(N):
        raise ValueError(f"target size must be an integer >= 2, got {N!r}")
    if N <= base_size:
        return 0
    # exact integer ceil(log2(N / base_size))
    blocks = -(-int(N) // base_size)
    return (blocks - 1).bit_length()


def joint_success_probability(N: int, model: GrowthModel, base_size: int = 1) -> float:
    """``p ** ceil(log2(N / base_size))``.

    ``base_size=1`` counts doublings from single qubits (``n = log2 N``);
    ``base_size=2`` starts from verified pairs and needs one fewer success.
    """
    return model.p ** _levels(N, base_size)


def postselection_probability(N: int) -> float:
    if N < 1 or N != int(N):
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return 2.0 ** -int(N)


def log_probability_ratio(N: int, model: GrowthModel, base_size: int = 1) -> float:
    """Natural log of ``joint / postselection``, safe for large ``N``."""
    postselection_probability(N)  # domain check
    return _levels(N, base_size) * math.log(model.p) + int(N) * math.log(2.0)


def probability_ratio(N: int, model: GrowthModel, base_size: int = 1) -> float:
    return math.exp(log_probability_ratio(N, model, base_size))


def _log2_exact(N: int) -> int:
    if N < 2 or N != int(N) or int(N) & (int(N) - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N!r}")
    return int(N).bit_length() - 1


def expected_pair_cost(N: int, model: GrowthModel) -> float:
    """Expected verified pairs consumed: ``pair_cost * (2/p) ** (log2 N - 1)``."""
    k = _log2_exact(N)
    return model.pair_cost * (2.0 / model.p) ** (k - 1)


@dataclass(frozen=True)
class MonteCarloResult:
    N: int
    trials: int
    seed: int
    costs: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(self.costs.mean())

    @property
    def variance(self) -> float:
        return float(self.costs.var())

    @property
    def std(self) -> float:
        return float(self.costs.std())

    @property
    def histogram(self) -> dict[float, int]:
        values, counts = np.unique(self.costs, return_counts=True)
        return {float(v): int(c) for v, c in zip(values, counts)}


def monte_carlo_growth(N: int, model: GrowthModel, trials: int = 10_000, seed: int = DEFAULT_SEED) -> MonteCarloResult:
    """Simulate the doubling process with geometric retries.

    Each trial builds one block of size ``N`` top down.  A level-``k`` block
    needs ``G ~ Geometric(p)`` attempts and each attempt consumes two
    level-``(k-1)`` blocks, so the count of blocks needed one level down is
    ``2 * sum(G)``, drawn in one go as ``m + NegBinomial(m, p)``.  Level-1
    blocks are verified pairs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    levels = _log2_exact(N)
    rng = np.random.default_rng(seed)
    need = np.ones(trials, dtype=np.int64)
    for _ in range(levels - 1):
        if model.p == 1.0:
            attempts = need
        else:
            attempts = need + rng.negative_binomial(need, model.p)
        need = 2 * attempts
    return MonteCarloResult(int(N), int(trials), int(seed), need.astype(float) * model.pair_cost)


@dataclass(frozen=True)
class ScalingRow:
    N: int
    joint: float
    postselection: float
    log_ratio: float
    expected_cost: float
    mc_mean: float = float("nan")
    mc_std: float = float("nan")

    @property
    def joint_times_n(self) -> float:
        return self.joint * self.N


def scaling_table(Ns, model: GrowthModel, trials: int = 0, seed: int = DEFAULT_SEED, base_size: int = 1) -> list[ScalingRow]:
    rows = []
    for N in Ns:
        N = int(N)
        is_pow2 = N >= 2 and not N & (N - 1)
        cost = expected_pair_cost(N, model) if is_pow2 else float("nan")
        mc_mean = mc_std = float("nan")
        if trials and is_pow2:
            mc = monte_carlo_growth(N, model, trials, seed)
            mc_mean, mc_std = mc.mean, mc.std
        rows.append(ScalingRow(
            N, joint_success_probability(N, model, base_size), postselection_probability(N),
            log_probability_ratio(N, model, base_size), cost, mc_mean, mc_std,
        ))
    return rows


_COLUMNS = ("N", "joint_probability", "joint_times_N", "postselection_probability",
            "log_ratio", "expected_pair_cost", "mc_mean", "mc_std")


def scaling_tsv(rows) -> str:
    lines = ["\t".join(_COLUMNS)]
    for r in rows:
        vals = (r.N, r.joint, r.joint_times_n, r.postselection, r.log_ratio, r.expected_cost, r.mc_mean, r.mc_std)
        lines.append("\t".join(str(v) if isinstance(v, int) else repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
