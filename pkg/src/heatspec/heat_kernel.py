"""Heat kernels on the supported manifolds, in Mercer form and closed form.

The working representation is the truncated Mercer expansion

    H_t(x, z) = sum_k  p * exp(-t * lam_k) * f_k(x) * f_k(z),

where p is the uniform density, lam_k the Laplacian eigenvalues and f_k the
eigenbasis normalized in L2 of the uniform probability measure.  On the
homogeneous spaces handled here the per-level sum of f_k(x)^2 equals the
level multiplicity, which turns the diagonal tail into a computable
sup-norm bound for the truncation error.

Two independent closed forms are provided for cross-checking: the wrapped
Gaussian on the circle (Poisson summation) and the Legendre addition series
on the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import TruncationOverflowError
from .manifolds import MAX_FLATTENED_MODES, Manifold, SpectralBasis, level_iterator, validate_points


@dataclass(frozen=True)
class HeatKernelParams:
    """Diffusion time and relative sup-norm truncation tolerance."""

    t: float = 0.5
    tail_tol: float = 1e-12

    def __post_init__(self):
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError(f"diffusion time t must be positive and finite, got {self.t!r}")
        if not (0 < self.tail_tol < 1):
            raise ValueError(f"tail_tol must lie in (0, 1), got {self.tail_tol!r}")


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric Gram matrix of the heat kernel on a point cloud.

    `kappa_sq` is the largest diagonal entry, i.e. the squared feature-space
    norm bound used by the estimator.  The points and diffusion time ride
    along so a fit can later be evaluated at new locations.
    """

    values: np.ndarray
    kappa_sq: float
    points: np.ndarray
    t: float

    @property
    def n(self) -> int:
        return self.values.shape[0]


@lru_cache(maxsize=256)
def _truncation_cached(kind: str, t: float, tail_tol: float) -> int:
    from .manifolds import get_manifold

    manifold = get_manifold(kind)
    # Enumerate spectral levels until the remaining tail is provably below
    # tolerance.  Terms are relative to the leading level exp(0) = 1; the
    # shared 1/volume factor cancels.  Level terms eventually decay faster
    # than geometrically, so stopping once a term clears tol by eight orders
    # (or underflows) is safe at double precision.
    lams, mults, terms = [], [], []
    flattened = 0
    below = 0
    for lam, mult in level_iterator(manifold):
        term = mult * math.exp(-t * lam)
        lams.append(lam)
        mults.append(mult)
        terms.append(term)
        flattened += mult
        # Multiplicities fluctuate level to level (lattice counts on the
        # torus), so require a run of negligible terms before stopping.
        below = below + 1 if term < tail_tol * 1e-8 else 0
        if below >= 3 or t * lam > 750.0:
            break
        if flattened > MAX_FLATTENED_MODES:
            raise TruncationOverflowError(flattened, MAX_FLATTENED_MODES)
    tail = 0.0
    cut = len(terms)
    # Walk backwards accumulating the tail; keep the smallest prefix whose
    # tail stays below tolerance.
    for i in range(len(terms) - 1, 0, -1):
        if tail + terms[i] >= tail_tol:
            break
        tail += terms[i]
        cut = i
    needed = int(sum(mults[:cut]))
    if needed > MAX_FLATTENED_MODES:
        raise TruncationOverflowError(needed, MAX_FLATTENED_MODES)
    return needed


def truncation_for_tolerance(manifold: Manifold, params: HeatKernelParams) -> int:
    """Smallest flattened mode count whose dropped tail stays below tolerance.

    The bound is the addition-theorem diagonal one: the dropped part of the
    kernel is at most `density * tail_tol` in sup norm.

    Raises
    ------
    TruncationOverflowError
        If more than the hard cap of flattened modes would be required.
    """
    return _truncation_cached(manifold.kind, params.t, params.tail_tol)


def basis_for_kernel(manifold: Manifold, params: HeatKernelParams, min_size: int = 1) -> SpectralBasis:
    """Build a spectral basis large enough for kernel evaluation under params."""
    from .manifolds import build_spectral_basis

    need = max(truncation_for_tolerance(manifold, params), min_size)
    return build_spectral_basis(manifold, need)


def _check_basis_covers(basis: SpectralBasis, params: HeatKernelParams):
    need = truncation_for_tolerance(basis.manifold, params)
    if basis.size < need:
        raise ValueError(
            f"basis has {basis.size} modes but tolerance {params.tail_tol} at "
            f"t={params.t} needs {need}; rebuild the basis larger"
        )


def mercer_weights(basis: SpectralBasis, params: HeatKernelParams) -> np.ndarray:
    """Mercer coefficients p * exp(-t * lam_k) for each basis mode."""
    return basis.manifold.density * np.exp(-params.t * basis.eigenvalues)


def kernel_eval(basis: SpectralBasis, params: HeatKernelParams, x, z) -> np.ndarray:
    """Evaluate the truncated Mercer sum H_t(x_i, z_i) row-wise.

    `x` and `z` are point arrays in the manifold's representation; a single
    point broadcasts against an array.  Returns a scalar for two single
    points, else a 1-d array.
    """
    _check_basis_covers(basis, params)
    xs = validate_points(basis.manifold, x)
    zs = validate_points(basis.manifold, z)
    if xs.shape[0] != zs.shape[0]:
        if xs.shape[0] == 1:
            xs = np.broadcast_to(xs, zs.shape)
        elif zs.shape[0] == 1:
            zs = np.broadcast_to(zs, xs.shape)
        else:
            raise ValueError(f"point counts {xs.shape[0]} and {zs.shape[0]} do not broadcast")
    w = mercer_weights(basis, params)
    # Group as w * (f(x) * f(z)) so that swapping x and z is bitwise exact.
    vals = (w * (basis.evaluate(xs) * basis.evaluate(zs))).sum(axis=1)
    if np.ndim(x) == 1 and np.ndim(z) == 1:
        return float(vals[0])
    return vals


def kernel_matrix(basis: SpectralBasis, params: HeatKernelParams, points) -> KernelMatrix:
    """Assemble the heat-kernel Gram matrix on a point cloud.

    The result is exactly symmetric (symmetrized after assembly) and
    positive semi-definite up to roundoff.
    """
    _check_basis_covers(basis, params)
    pts = validate_points(basis.manifold, points)
    if pts.shape[0] < 1:
        raise ValueError("need at least one point")
    F = basis.evaluate(pts)
    w = mercer_weights(basis, params)
    G = (F * w) @ F.T
    G = (G + G.T) / 2.0
    return KernelMatrix(values=G, kappa_sq=float(np.max(np.diag(G))), points=pts, t=params.t)


# =============================================================
# closed forms
# =============================================================


def circle_kernel_closed_form(t: float, x, z, j_max: int | None = None):
    """Wrapped-Gaussian heat kernel on the circle, from angles x and z.

    Poisson summation of the Gaussian over winding numbers:

        sum_{|j| <= j_max} exp(-(x - z + 2*pi*j)^2 / (4*t)) / sqrt(4*pi*t)

    With the default j_max the dropped windings are below double precision
    for the angle range [-2*pi, 2*pi].
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if j_max is None:
        j_max = int(math.ceil(1.5 + math.sqrt(45.0 * t) / math.pi))
    d = np.asarray(x, dtype=float) - np.asarray(z, dtype=float)
    total = np.zeros_like(d)
    for j in range(-j_max, j_max + 1):
        total += np.exp(-((d + 2.0 * math.pi * j) ** 2) / (4.0 * t))
    out = total / math.sqrt(4.0 * math.pi * t)
    return float(out) if np.ndim(out) == 0 else out


def sphere_kernel_addition(t: float, cos_gamma, l_max: int | None = None):
    """Heat kernel on the 2-sphere from the cosine of the geodesic angle.

    Legendre addition series sum_l exp(-l(l+1)t) (2l+1)/(4*pi) P_l(cos),
    with P_l computed by the three-term recurrence.  The default l_max
    truncates once terms fall below double precision.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.clip(np.asarray(cos_gamma, dtype=float), -1.0, 1.0)
    if l_max is None:
        l_max = int(math.ceil(math.sqrt(90.0 / t) + 4))
    p_prev = np.ones_like(x)
    p_curr = x.copy()
    total = np.full_like(x, 1.0 / (4.0 * math.pi))
    if l_max >= 1:
        total += math.exp(-2.0 * t) * 3.0 / (4.0 * math.pi) * p_curr
    for l in range(2, l_max + 1):
        p_next = ((2 * l - 1) * x * p_curr - (l - 1) * p_prev) / l
        coeff = math.exp(-l * (l + 1) * t) * (2 * l + 1) / (4.0 * math.pi)
        total += coeff * p_next
        p_prev, p_curr = p_curr, p_next
    return float(total) if np.ndim(total) == 0 else total


def torus_kernel_product(t: float, x, z):
    """Heat kernel on the 2-torus from angle pairs x and z.

    The Laplacian separates over the two angle coordinates, so the kernel
    is the product of one wrapped Gaussian per coordinate.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != 2 or z.shape[-1] != 2:
        raise ValueError("torus points are angle pairs")
    out = circle_kernel_closed_form(t, x[..., 0], z[..., 0]) * circle_kernel_closed_form(t, x[..., 1], z[..., 1])
    return float(out) if np.ndim(out) == 0 else out
