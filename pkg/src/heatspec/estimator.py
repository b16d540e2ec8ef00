"""Spectral-filter regression with heat-kernel Gram matrices.

The estimator applies a regularization filter to the spectrum of the
normalized Gram matrix K/n and returns representer coefficients

    c = (1/n) * U g_lam(Lam) U^T y,        K/n = U Lam U^T,

so the fitted function is x -> sum_i c_i H_t(x_i, x).  Negative eigenvalues
within roundoff of zero are clamped to zero before the filter is applied;
the cutoff filter treats those clamped values as excluded.

Two computational routes are provided: `fit_coefficients` eigendecomposes
the dense n x n Gram, and `fit_from_features` evaluates the same spectral
function through the rank-K factor Gram of the truncated Mercer features
(the kernel has rank at most K by construction, so the routes agree to
machine precision while the factor route stays cheap for large n).
A plain linear solve `fit_tikhonov_direct` serves as an independent oracle
for the Tikhonov member.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .filters import FilterFamily, filter_eval
from .heat_kernel import HeatKernelParams, KernelMatrix, kernel_matrix, mercer_weights
from .manifolds import SpectralBasis, validate_points

# Relative scale below which factor-route eigenvalues count as the clamped
# zeros of the dense route.
_ZERO_RTOL = 1e-12

# Hard ceiling on the dense n x n eigendecomposition and solve paths.
_DENSE_N_CAP = 16384

# How far below zero a Gram eigenvalue may fall before the matrix is
# rejected as not positive semi-definite.
_PSD_RTOL = 1e-10


@dataclass(frozen=True)
class SpectralEstimate:
    """Representer coefficients of a fitted spectral estimator."""

    points: np.ndarray
    coefficients: np.ndarray
    lam: float
    family: FilterFamily
    t: float

    @property
    def n(self) -> int:
        return len(self.coefficients)


def _check_fit_inputs(values: np.ndarray, targets, dense: bool = False) -> np.ndarray:
    y = np.asarray(targets, dtype=float).ravel()
    if y.shape[0] != values.shape[0]:
        raise ValueError(f"target length {y.shape[0]} does not match {values.shape[0]} points")
    if y.size == 0:
        raise ValueError("need at least one sample")
    if dense and y.size > _DENSE_N_CAP:
        raise ValueError(
            f"dense solver is capped at n = {_DENSE_N_CAP}, got {y.size}"
        )
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain non-finite values")
    return y


def _filter_on_spectrum(family: FilterFamily, lam: float, eigs: np.ndarray, kappa_sq: float):
    # Landweber needs spectrum <= 1; rescale by kappa_sq (unit-step gradient
    # descent on the rescaled problem) when the kernel scale exceeds it.
    if family.kind == "landweber" and kappa_sq > 1.0:
        return filter_eval(family, lam, eigs / kappa_sq) / kappa_sq
    return filter_eval(family, lam, eigs)


def fit_coefficients(
    gram: KernelMatrix, targets, family: FilterFamily, lam: float
) -> SpectralEstimate:
    """Fit representer coefficients by dense eigendecomposition of K/n.

    Raises
    ------
    ValueError
        On shape or finiteness violations, non-positive lam, n beyond the
        dense cap, or a Gram matrix with eigenvalues materially below zero.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    y = _check_fit_inputs(gram.values, targets, dense=True)
    n = gram.n
    eigs, U = np.linalg.eigh(gram.values / n)
    if eigs.min() < -_PSD_RTOL * max(gram.kappa_sq, 1e-300):
        raise ValueError(
            f"gram matrix is not positive semi-definite (min eigenvalue {eigs.min():.3e})"
        )
    eigs = np.maximum(eigs, 0.0)
    g = _filter_on_spectrum(family, lam, eigs, gram.kappa_sq)
    coef = U @ (g * (U.T @ y)) / n
    return SpectralEstimate(gram.points, coef, float(lam), family, gram.t)


def fit_tikhonov_direct(gram: KernelMatrix, targets, lam: float) -> SpectralEstimate:
    """Solve (K/n + lam*I) c = y/n directly; oracle for the Tikhonov member."""
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    y = _check_fit_inputs(gram.values, targets, dense=True)
    n = gram.n
    coef = scipy.linalg.solve(
        gram.values / n + lam * np.eye(n), y / n, assume_a="pos"
    )
    return SpectralEstimate(gram.points, coef, float(lam), FilterFamily("tikhonov"), gram.t)


def fit_from_features(
    basis: SpectralBasis,
    params: HeatKernelParams,
    points,
    targets,
    family: FilterFamily,
    lam: float,
) -> SpectralEstimate:
    """Fit the same spectral estimator through the rank-K factor Gram.

    Writing the truncated kernel Gram as K/n = A A^T with A the weighted
    feature matrix, the nonzero spectrum lives in A^T A (K x K), and

        g(K/n) y = V (g(S) - g(0)) V^T y + g(0) y

    over the nonzero eigenpairs (S, V).  Equivalent to `fit_coefficients`
    up to roundoff, without forming the n x n Gram.
    """
    if not (lam > 0 and np.isfinite(lam)):
        raise ValueError(f"lam must be positive and finite, got {lam!r}")
    pts = validate_points(basis.manifold, points)
    F = basis.evaluate(pts)
    y = _check_fit_inputs(F, targets)
    n = pts.shape[0]
    w = mercer_weights(basis, params)
    kappa_sq = float(((F * F) * w).sum(axis=1).max())
    A = F * np.sqrt(w / n)
    S, U = np.linalg.eigh(A.T @ A)
    keep = S > _ZERO_RTOL * max(kappa_sq, S.max() if S.size else 0.0)
    V = A @ (U[:, keep] / np.sqrt(S[keep]))
    g_pos = _filter_on_spectrum(family, lam, S[keep], kappa_sq)
    g_zero = _filter_on_spectrum(family, lam, np.zeros(1), kappa_sq)[0]
    coef = (V @ ((g_pos - g_zero) * (V.T @ y)) + g_zero * y) / n
    return SpectralEstimate(pts, coef, float(lam), family, params.t)


def predict(estimate: SpectralEstimate, basis: SpectralBasis, params: HeatKernelParams, x):
    """Evaluate the fitted function sum_i c_i H_t(x_i, .) at new points."""
    if abs(params.t - estimate.t) > 1e-12:
        raise ValueError(
            f"params.t={params.t} does not match the estimate's t={estimate.t}"
        )
    xs = validate_points(basis.manifold, x)
    w = mercer_weights(basis, params)
    F_train = basis.evaluate(estimate.points)
    F_new = basis.evaluate(xs)
    return (F_new * w) @ (F_train.T @ estimate.coefficients)


def empirical_covariance_in_basis(
    basis: SpectralBasis, params: HeatKernelParams, points, size: int
) -> np.ndarray:
    """Sample second-moment matrix of the weighted eigenfeatures.

    Entry (k, l) is the average over points of phi_k * phi_l with
    phi_k = sqrt(p * exp(-t*lam_k)) * f_k, the orthonormal feature map of
    the kernel.  Converges to diag(p * exp(-t*lam_k)) under uniform
    sampling.
    """
    if not 1 <= size <= basis.size:
        raise ValueError(f"size must be in [1, {basis.size}], got {size}")
    pts = validate_points(basis.manifold, points)
    w = mercer_weights(basis, params)[:size]
    psi = basis.evaluate(pts)[:, :size] * np.sqrt(w)
    return psi.T @ psi / pts.shape[0]


# =============================================================
# sklearn-style front end
# =============================================================

from sklearn.base import BaseEstimator, RegressorMixin  # noqa: E402
from sklearn.exceptions import NotFittedError  # noqa: E402

from .filters import parse_filter  # noqa: E402
from .heat_kernel import basis_for_kernel  # noqa: E402
from .manifolds import get_manifold  # noqa: E402


class SpectralFilterRegressor(RegressorMixin, BaseEstimator):
    """Heat-kernel regression on a manifold with a spectral filter.

    Parameters
    ----------
    manifold : str, default="circle"
        One of ``"circle"``, ``"torus2"``, ``"sphere2"``.
    t : float, default=0.5
        Diffusion time of the heat kernel.
    filter_family : str or FilterFamily, default="tikhonov"
        ``"tikhonov"``, ``"cutoff"``, ``"landweber"`` or ``"landweber:<k>"``.
    lam : float, default=1e-3
        Regularization parameter.
    tail_tol : float, default=1e-12
        Relative sup-norm tolerance of the kernel truncation.
    solver : {"dense", "lowrank"}, default="dense"
        Dense Gram eigendecomposition, or the equivalent rank-K factor
        route (preferable for large n).

    Attributes
    ----------
    estimate_ : SpectralEstimate
        Fitted representer coefficients.
    basis_ : SpectralBasis
        Eigenbasis backing the kernel truncation.
    kappa_sq_ : float
        Largest Gram diagonal entry seen during fit.

    Examples
    --------
    >>> import numpy as np
    >>> from heatspec.estimator import SpectralFilterRegressor
    >>> theta = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    >>> X = np.column_stack([np.cos(theta), np.sin(theta)])
    >>> reg = SpectralFilterRegressor(lam=1e-4).fit(X, np.cos(theta))
    >>> float(np.round(reg.score(X, np.cos(theta)), 3))
    1.0
    """

    def __init__(
        self,
        manifold="circle",
        t=0.5,
        filter_family="tikhonov",
        lam=1e-3,
        tail_tol=1e-12,
        solver="dense",
    ):
        self.manifold = manifold
        self.t = t
        self.filter_family = filter_family
        self.lam = lam
        self.tail_tol = tail_tol
        self.solver = solver

    def _resolved_family(self) -> FilterFamily:
        if isinstance(self.filter_family, FilterFamily):
            return self.filter_family
        return parse_filter(self.filter_family)

    def fit(self, X, y):
        """Fit representer coefficients on manifold points X and targets y."""
        man = get_manifold(self.manifold)
        params = HeatKernelParams(t=self.t, tail_tol=self.tail_tol)
        family = self._resolved_family()
        if self.solver not in ("dense", "lowrank"):
            raise ValueError(f"solver must be 'dense' or 'lowrank', got {self.solver!r}")
        basis = basis_for_kernel(man, params)
        if self.solver == "dense":
            gram = kernel_matrix(basis, params, X)
            self.estimate_ = fit_coefficients(gram, y, family, self.lam)
            self.kappa_sq_ = gram.kappa_sq
        else:
            self.estimate_ = fit_from_features(basis, params, X, y, family, self.lam)
            w = mercer_weights(basis, params)
            self.kappa_sq_ = float(w.sum())
        self.basis_ = basis
        self.params_ = params
        self.n_features_in_ = man.point_width()
        return self

    def predict(self, X):
        """Predict at new manifold points."""
        if not hasattr(self, "estimate_"):
            raise NotFittedError(
                "This SpectralFilterRegressor instance is not fitted yet; call fit first."
            )
        return predict(self.estimate_, self.basis_, self.params_, X)
