"""Power-space norms, smooth random targets, and spectral diagnostics.

Coefficient sequences live in the Laplacian eigenbasis of a manifold.
For diffusion time t and uniform density p, mode k carries the kernel
weight s_k = p * exp(-t * lam_k), and the power-space norm with exponent
r is

    ||a||_r^2 = sum_k a_k^2 * s_k^(-r)

so r = 0 recovers the L2 norm of the expansion and larger r demands
faster coefficient decay.  Smooth targets are drawn with Rademacher
signs and the mode profile s_k^(beta/2), each mode contributing equally
to the smoothness-beta norm, then rescaled so that norm equals the
requested radius exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import SpectralEstimate, empirical_covariance_in_basis
from .exceptions import QualificationError
from .filters import FilterFamily, filter_eval, residual_eval
from .heat_kernel import HeatKernelParams, mercer_weights
from .manifolds import SpectralBasis, level_iterator, validate_points

# Largest tolerable first omitted kernel weight, relative to lam, when
# summing the effective dimension over a finite basis.
_EFFDIM_TAIL_RTOL = 1e-12


@dataclass(frozen=True)
class PowerCoefficients:
    """Coefficients of a function in the eigenbasis of a given manifold."""

    basis: SpectralBasis
    t: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("coefficient array must be one-dimensional and non-empty")
        if vals.size > self.basis.size:
            raise ValueError(
                f"{vals.size} coefficients exceed the basis size {self.basis.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients contain non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.values.size

    def mode_weights(self) -> np.ndarray:
        """Kernel weights s_k = p * exp(-t * lam_k) for the held modes."""
        p = self.basis.manifold.density
        return p * np.exp(-self.t * self.basis.eigenvalues[: self.size])


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise: Gaussian with deviation sigma, signal bounded by signal_bound.

    Divergence and noise calculations use the effective scale
    min(sigma, signal_bound), the tighter of the two model constants.
    sigma = 0 degenerates to noiseless observations; divergence formulas
    reject a zero scale at their own boundary.
    """

    sigma: float
    signal_bound: float

    def __post_init__(self):
        if not (self.sigma >= 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be nonnegative and finite, got {self.sigma!r}")
        if not (self.signal_bound > 0 and np.isfinite(self.signal_bound)):
            raise ValueError(
                f"signal_bound must be positive and finite, got {self.signal_bound!r}"
            )

    @property
    def effective_sigma(self) -> float:
        return min(self.sigma, self.signal_bound)


@dataclass(frozen=True)
class TargetSpec:
    """Recipe for a random smooth target: norm exponent, radius, mode count, seed."""

    smoothness: float
    radius: float
    size: int = 200
    seed: int = 0

    def __post_init__(self):
        if not (self.smoothness > 0 and np.isfinite(self.smoothness)):
            raise ValueError(f"smoothness must be positive, got {self.smoothness!r}")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        if self.size < 1:
            raise ValueError(f"size must be at least 1, got {self.size}")


def make_source_target(
    basis: SpectralBasis, params: HeatKernelParams, spec: TargetSpec
) -> PowerCoefficients:
    """Draw a random target with smoothness-beta norm exactly spec.radius."""
    if spec.size > basis.size:
        raise ValueError(
            f"target needs {spec.size} modes but the basis holds {basis.size}; "
            "rebuild the basis larger"
        )
    rng = np.random.default_rng(spec.seed)
    signs = rng.integers(0, 2, size=spec.size) * 2.0 - 1.0
    s = mercer_weights(basis, params)[: spec.size]
    vals = signs * s ** (spec.smoothness / 2.0)
    coeffs = PowerCoefficients(basis, params.t, vals)
    achieved = power_norm(coeffs, spec.smoothness)
    return PowerCoefficients(basis, params.t, vals * (spec.radius / achieved))


def power_norm(coeffs: PowerCoefficients, power: float) -> float:
    """Norm with weights s_k^(-power); power=0 is the L2 norm."""
    if not np.isfinite(power):
        raise ValueError(f"power must be finite, got {power!r}")
    s = coeffs.mode_weights()
    return float(np.sqrt(np.sum(coeffs.values**2 * s ** (-power))))


def evaluate_coefficients(coeffs: PowerCoefficients, points) -> np.ndarray:
    """Pointwise values sum_k a_k f_k(x) of the expansion."""
    pts = validate_points(coeffs.basis.manifold, points)
    return coeffs.basis.evaluate(pts)[:, : coeffs.size] @ coeffs.values


def apply_population_filter(
    coeffs: PowerCoefficients, family: FilterFamily, lam: float
) -> PowerCoefficients:
    """Noise-free infinite-sample action of the filter: a_k -> g(s_k) s_k a_k."""
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    s = coeffs.mode_weights()
    vals = filter_eval(family, lam, s) * s * coeffs.values
    return PowerCoefficients(coeffs.basis, coeffs.t, vals)


@dataclass(frozen=True)
class ApproximationBound:
    """Squared population bias against the source-condition bound."""

    error_sq: float
    bound: float

    def passes(self, rtol: float = 1e-9) -> bool:
        return self.error_sq <= self.bound * (1.0 + rtol)


def approximation_error_check(
    target: PowerCoefficients,
    family: FilterFamily,
    lam: float,
    smoothness: float,
    power: float,
) -> ApproximationBound:
    """Check the bias bound ||(I - g(S)S) f||_power^2 <= ||f||_beta^2 * lam^(beta-power).

    The bound is valid when half the exponent gap is covered by the
    filter's qualification; outside that range the inequality is not
    claimed and QualificationError is raised.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    if not 0 <= power <= smoothness:
        raise ValueError(
            f"need 0 <= power <= smoothness, got power={power}, smoothness={smoothness}"
        )
    gap = (smoothness - power) / 2.0
    if gap > family.qualification:
        raise QualificationError(
            f"exponent gap {gap} exceeds the {family.label} qualification "
            f"{family.qualification}"
        )
    s = target.mode_weights()
    resid = residual_eval(family, lam, s)
    error_sq = float(np.sum((resid * target.values) ** 2 * s ** (-power)))
    radius_sq = power_norm(target, smoothness) ** 2
    return ApproximationBound(error_sq, radius_sq * lam ** (smoothness - power))


def project_estimate(
    estimate: SpectralEstimate,
    basis: SpectralBasis,
    params: HeatKernelParams,
    size: int | None = None,
) -> PowerCoefficients:
    """Eigenbasis coefficients of the fitted function sum_i c_i H_t(x_i, .).

    Exact, quadrature-free: b_k = s_k * sum_i c_i f_k(x_i).  size limits the
    projection to the leading modes (default: the whole basis, on which the
    representer expansion is exact).
    """
    if abs(params.t - estimate.t) > 1e-12:
        raise ValueError(
            f"params.t={params.t} does not match the estimate's t={estimate.t}"
        )
    if size is None:
        size = basis.size
    if not 1 <= size <= basis.size:
        raise ValueError(f"size must be in [1, {basis.size}], got {size}")
    F = basis.evaluate(estimate.points)[:, :size]
    s = mercer_weights(basis, params)[:size]
    return PowerCoefficients(basis, estimate.t, s * (F.T @ estimate.coefficients))


def error_norm(a: PowerCoefficients, b: PowerCoefficients, power: float) -> float:
    """Power-space norm of the difference, aligning lengths by zero padding."""
    if a.basis.manifold.kind != b.basis.manifold.kind:
        raise ValueError(
            f"coefficients live on different manifolds: "
            f"{a.basis.manifold.kind} vs {b.basis.manifold.kind}"
        )
    if abs(a.t - b.t) > 1e-12:
        raise ValueError(f"diffusion times differ: {a.t} vs {b.t}")
    k = min(a.size, b.size)
    if not np.array_equal(a.basis.eigenvalues[:k], b.basis.eigenvalues[:k]):
        raise ValueError("bases disagree on the shared eigenvalue prefix")
    longer, shorter = (a, b) if a.size >= b.size else (b, a)
    diff = longer.values.copy()
    diff[: shorter.size] -= shorter.values
    return power_norm(PowerCoefficients(longer.basis, longer.t, diff), power)


def effective_dimension(
    basis: SpectralBasis, params: HeatKernelParams, lam: float
) -> float:
    """Trace sum_k s_k / (lam + s_k) over the full spectrum.

    The sum runs over the held basis; the first omitted weight must be
    below _EFFDIM_TAIL_RTOL * lam so the discarded tail cannot move the
    value at reporting precision.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    s = mercer_weights(basis, params)
    man = basis.manifold
    seen = 0
    next_eig = None
    for eig, mult in level_iterator(man):
        if seen >= basis.size:
            next_eig = eig
            break
        seen += mult
    if next_eig is None:  # pragma: no cover - level_iterator is unbounded
        raise RuntimeError("level iterator terminated unexpectedly")
    s_next = man.density * np.exp(-params.t * next_eig)
    if s_next > _EFFDIM_TAIL_RTOL * lam:
        raise ValueError(
            f"first omitted kernel weight {s_next:.3e} is too large for lam={lam:.3e}; "
            "rebuild the basis with a smaller tail_tol"
        )
    return float(np.sum(s / (lam + s)))


def whitened_deviation_norm(
    M: np.ndarray, basis: SpectralBasis, params: HeatKernelParams, lam: float
) -> float:
    """Spectral norm of (D_pop + lam)^(-1/2) (D_pop - M) (D_pop + lam)^(-1/2).

    M is a sample second-moment matrix of the weighted eigenfeatures (from
    empirical_covariance_in_basis) and D_pop = diag(s_k) its population
    value on the same leading modes; regularized whitening measures the
    perturbation at the resolution a filter at lam can see.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    size = M.shape[0]
    if not 1 <= size <= basis.size:
        raise ValueError(
            f"M spans {size} modes but the basis holds {basis.size}"
        )
    s = mercer_weights(basis, params)[:size]
    scale = np.sqrt(s + lam)
    W = (np.diag(s) - M) / np.outer(scale, scale)
    return float(np.abs(np.linalg.eigvalsh(W)).max())
