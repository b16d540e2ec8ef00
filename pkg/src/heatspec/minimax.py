"""Lower-bound machinery: packing codes, hard alternatives, divergence audits.

A randomized greedy search builds a binary code whose strings stay pairwise
far apart in Hamming distance.  Each string is lifted to a function on the
manifold, supported on one block of eigenmodes and scaled so the chosen
power norm turns Hamming separation into an exact packing identity.  The
audit then checks the two statistical conditions a two-point/Fano argument
needs: a norm budget on every alternative and a cap on the pairwise KL
divergence relative to the code size.  The information-theoretic step that
quantifies over all estimators is not executable; only its hypotheses are
audited here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CodeConstructionError
from .heat_kernel import HeatKernelParams, mercer_weights
from .manifolds import SpectralBasis, WeylEnvelope
from .power_space import PowerCoefficients, error_norm, power_norm

_DRAW_BUDGET = 10**6


@dataclass(frozen=True)
class BinaryCode:
    """Binary strings of length k, pairwise Hamming distance at least k/8.

    The first string is always all-zero.  Total count must reach 2^(k/8).
    """

    k: int
    strings: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.strings, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[1] != self.k:
            raise ValueError(f"strings must be a (count, {self.k}) array")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("strings must be binary")
        if np.any(arr[0] != 0):
            raise ValueError("first string must be all-zero")
        if arr.shape[0] < 2.0 ** (self.k / 8.0):
            raise ValueError(
                f"{arr.shape[0]} strings fall short of the required 2^(k/8) "
                f"= {2.0 ** (self.k / 8.0):.2f}"
            )
        dist = self.pairwise_hamming(arr)
        off = dist[np.triu_indices(arr.shape[0], k=1)]
        if off.size and off.min() < self.k / 8.0:
            raise ValueError(
                f"minimum pairwise Hamming distance {off.min()} is below k/8 = {self.k / 8.0}"
            )
        object.__setattr__(self, "strings", arr)

    @staticmethod
    def pairwise_hamming(arr: np.ndarray) -> np.ndarray:
        return (arr[:, None, :] != arr[None, :, :]).sum(axis=2)

    @property
    def count(self) -> int:
        return self.strings.shape[0]


def gilbert_varshamov(k: int, seed: int, draw_budget: int = _DRAW_BUDGET) -> BinaryCode:
    """Greedy randomized packing code: 2^ceil(k/8) strings at distance >= k/8.

    Draws uniform strings one at a time, keeping each that stays at Hamming
    distance >= k/8 from everything kept so far, the all-zero string first.
    Deterministic given seed.

    Raises
    ------
    CodeConstructionError
        If the draw budget runs out before the target count is reached
        (cannot happen at moderate k; the packing bound guarantees room).
    """
    if k < 8:
        raise ValueError(f"k must be at least 8, got {k}")
    target = 2 ** math.ceil(k / 8)
    min_dist = k / 8.0
    rng = np.random.default_rng(seed)
    kept = np.zeros((1, k), dtype=np.uint8)
    draws = 0
    batch = 1024
    while kept.shape[0] < target:
        if draws >= draw_budget:
            raise CodeConstructionError(kept.shape[0], target, draw_budget)
        take = min(batch, draw_budget - draws)
        cands = rng.integers(0, 2, size=(take, k), dtype=np.uint8)
        draws += take
        for row in cands:
            if (kept != row).sum(axis=1).min() >= min_dist:
                kept = np.vstack([kept, row])
                if kept.shape[0] == target:
                    break
    return BinaryCode(k, kept)


@dataclass(frozen=True)
class HardFamily:
    """Hard alternatives indexed by code strings, supported on modes k+1..2k."""

    eps: float
    k: int
    power: float
    members: tuple

    @property
    def count(self) -> int:
        return len(self.members)


def build_hard_family(
    basis: SpectralBasis,
    params: HeatKernelParams,
    power: float,
    eps: float,
    code: BinaryCode,
) -> HardFamily:
    """Lift each code string to coefficients a_{k+j} = sqrt(eps) w_j s_{k+j}^(power/2).

    The power-norm of any member is then eps times its number of ones, and
    pairwise squared power-distances equal eps times Hamming distances.
    """
    if not (eps > 0 and np.isfinite(eps)):
        raise ValueError(f"eps must be positive and finite, got {eps!r}")
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power!r}")
    k = code.k
    if basis.size < 2 * k:
        raise ValueError(
            f"basis holds {basis.size} modes but the family needs 2k = {2 * k}; "
            "rebuild the basis larger"
        )
    s_block = mercer_weights(basis, params)[k : 2 * k]
    profile = math.sqrt(eps) * s_block ** (power / 2.0)
    members = []
    for row in code.strings:
        vals = np.zeros(2 * k)
        vals[k:] = row * profile
        members.append(PowerCoefficients(basis, params.t, vals))
    return HardFamily(float(eps), k, float(power), tuple(members))


def kl_divergence(
    f: PowerCoefficients, f2: PowerCoefficients, n: int, noise_scale: float
) -> float:
    """KL divergence of the two n-sample Gaussian regression laws.

    noise_scale is the effective deviation, the smaller of the Gaussian
    sigma and the signal bound.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not (noise_scale > 0 and np.isfinite(noise_scale)):
        raise ValueError(f"noise_scale must be positive and finite, got {noise_scale!r}")
    return n / (2.0 * noise_scale**2) * error_norm(f, f2, 0.0) ** 2


def verify_packing(family: HardFamily) -> float:
    """Minimum pairwise squared power-distance across the family (>= eps*k/8)."""
    best = math.inf
    members = family.members
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            d = error_norm(members[i], members[j], family.power) ** 2
            best = min(best, d)
    return best


@dataclass(frozen=True)
class ConditionReport:
    """Audit of the hypotheses behind the lower-bound argument.

    The two load-bearing conditions are the norm budget (source_worst_sq
    against source_limit_sq) and the KL cap (kl_worst against kl_limit).
    The exponent margins restate the asymptotic admissibility inequalities
    with the empirical spectral-growth envelope standing in for the unknown
    true constants; they are indicative, not a proof.
    """

    source_worst_sq: float
    source_limit_sq: float
    kl_worst: float
    kl_limit: float
    source_exponent_margin: float
    kl_exponent_margin: float
    eps_coeff: float
    eps_coeff_cap: float

    @property
    def source_ok(self) -> bool:
        return self.source_worst_sq <= self.source_limit_sq * (1 + 1e-12)

    @property
    def kl_ok(self) -> bool:
        return self.kl_worst <= self.kl_limit * (1 + 1e-12)

    @property
    def conditions_ok(self) -> bool:
        return self.source_ok and self.kl_ok

    @property
    def exponents_ok(self) -> bool:
        return self.source_exponent_margin < 0 and self.kl_exponent_margin <= 0

    @property
    def eps_coeff_ok(self) -> bool:
        return self.eps_coeff <= self.eps_coeff_cap * (1 + 1e-12)


def check_conditions(
    family: HardFamily,
    n: int,
    noise_scale: float,
    kl_fraction: float,
    radius: float,
    smoothness: float,
    weyl: WeylEnvelope,
    rate_exponent: float,
    mode_coeff: float,
    eps_coeff: float,
) -> ConditionReport:
    """Evaluate the norm budget, the KL cap, and the exponent inequalities.

    kl_fraction is the fraction of log(code size) allowed to the worst KL
    divergence and must sit in (0, 1/8).  mode_coeff ties the block size to
    (log n)^(m/2), rate_exponent is the rate in eps = eps_coeff * n^(-rate),
    and both enter only the indicative exponent margins.
    """
    if not 0 < kl_fraction < 0.125:
        raise ValueError(f"kl_fraction must lie in (0, 1/8), got {kl_fraction}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if smoothness <= family.power:
        raise ValueError(
            f"smoothness {smoothness} must exceed the family power {family.power}"
        )
    for name, val in [
        ("noise_scale", noise_scale),
        ("radius", radius),
        ("rate_exponent", rate_exponent),
        ("mode_coeff", mode_coeff),
        ("eps_coeff", eps_coeff),
    ]:
        if not np.isfinite(val):
            raise ValueError(f"{name} must be finite, got {val!r}")
    base = family.members[0]
    man = base.basis.manifold
    if weyl.m != man.dim:
        raise ValueError(
            f"spectral envelope is for dimension {weyl.m}, family lives in {man.dim}"
        )
    t = base.t
    p = man.density
    gamma = family.power

    source_worst_sq = max(power_norm(f, smoothness) ** 2 for f in family.members)
    kl_worst = max(
        kl_divergence(f, base, n, noise_scale) for f in family.members[1:]
    )
    kl_limit = kl_fraction * math.log(family.count - 1)

    two_over_m = 2.0 / weyl.m
    source_exponent_margin = (
        (smoothness - gamma) * t * weyl.c_up * (2.0 * mode_coeff) ** two_over_m
        - rate_exponent
    )
    kl_exponent_margin = (1.0 - rate_exponent) - gamma * t * weyl.c_low * mode_coeff**two_over_m

    eps_coeff_cap = min(
        kl_fraction * p ** (-gamma) * noise_scale**2 * math.log(2.0) / 4.0,
        p ** (smoothness - gamma) * radius**2 / mode_coeff,
    )
    return ConditionReport(
        source_worst_sq=float(source_worst_sq),
        source_limit_sq=float(radius**2),
        kl_worst=float(kl_worst),
        kl_limit=float(kl_limit),
        source_exponent_margin=float(source_exponent_margin),
        kl_exponent_margin=float(kl_exponent_margin),
        eps_coeff=float(eps_coeff),
        eps_coeff_cap=float(eps_coeff_cap),
    )
