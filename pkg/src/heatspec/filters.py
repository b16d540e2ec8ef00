"""Spectral regularization filters and their audit machinery.

A filter family is a function g_lam(s) of a regularization parameter
lam in (0, 1] and a spectral value s >= 0.  Three families are provided:

* ``tikhonov``:  g_lam(s) = 1 / (lam + s)
* ``cutoff``:    g_lam(s) = 1/s for s >= lam, else 0 (boundary included)
* ``landweber``: g_lam(s) = sum_{i < nu} (1 - s)^i, the output of nu
  gradient-descent iterations with unit step.

For Landweber the iteration count is tied to the regularization strength by
nu = max(1, floor(1/lam)); the floor (rather than ceiling) keeps the
uniform bound g_lam <= 1/lam true for every lam, not just reciprocals of
integers.  A family may instead pin an explicit iteration count, in which
case lam does not alter the filter shape and the uniform bound only holds
for lam <= 1/steps.  Landweber values are meaningful for s <= 1; callers
with larger spectra must rescale first.

The audit helpers check the three defining bounds

    0 <= s * g_lam(s) <= 1,   |1 - s * g_lam(s)| <= 1,   g_lam(s) <= 1/lam

on log grids, and measure qualification margins
sup_s |1 - s*g_lam(s)| * s^alpha / lam^alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FILTER_KINDS = ("tikhonov", "cutoff", "landweber")


@dataclass(frozen=True)
class FilterFamily:
    """A named spectral filter, optionally with a pinned iteration count."""

    kind: str
    steps: int | None = None

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}; expected one of {FILTER_KINDS}")
        if self.steps is not None:
            if self.kind != "landweber":
                raise ValueError(f"steps only applies to landweber, not {self.kind!r}")
            if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
                raise ValueError(f"steps must be a positive integer, got {self.steps!r}")

    @property
    def qualification(self) -> float:
        """Highest saturation order: 1, +inf, or the pinned iteration count.

        For lam-driven Landweber the classical qualification is unbounded;
        the constant-one margin audited by `qualification_margin` is the
        operational check and is stricter.
        """
        if self.kind == "tikhonov":
            return 1.0
        if self.kind == "cutoff":
            return math.inf
        return math.inf if self.steps is None else float(self.steps)

    @property
    def label(self) -> str:
        if self.kind == "landweber" and self.steps is not None:
            return f"landweber:{self.steps}"
        return self.kind


def tikhonov() -> FilterFamily:
    return FilterFamily("tikhonov")


def cutoff() -> FilterFamily:
    return FilterFamily("cutoff")


def landweber(steps: int | None = None) -> FilterFamily:
    return FilterFamily("landweber", steps)


def parse_filter(text: str) -> FilterFamily:
    """Parse ``tikhonov``, ``cutoff``, ``landweber`` or ``landweber:<steps>``."""
    name, sep, arg = text.strip().partition(":")
    if name == "landweber" and sep:
        try:
            steps = int(arg)
        except ValueError:
            raise ValueError(f"bad landweber step count {arg!r}") from None
        return FilterFamily("landweber", steps)
    if sep:
        raise ValueError(f"only landweber takes a :<steps> suffix, got {text!r}")
    return FilterFamily(name)


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"regularization parameter must be positive and finite, got {lam!r}")
    return lam


def effective_steps(family: FilterFamily, lam: float) -> int:
    """Iteration count used by a Landweber family at parameter lam."""
    if family.kind != "landweber":
        raise ValueError("effective_steps is only defined for landweber")
    if family.steps is not None:
        return int(family.steps)
    return max(1, math.floor(1.0 / _check_lam(lam)))


def _as_spectrum(s) -> np.ndarray:
    arr = np.asarray(s, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0):
        raise ValueError("spectral values must be finite and >= 0")
    return arr


def _landweber_g(nu: int, s: np.ndarray) -> np.ndarray:
    # sum_{i<nu} (1-s)^i = (1 - (1-s)^nu) / s, with stable branches at the
    # endpoints: the limit nu at s=0, and -expm1(nu*log1p(-s))/s inside (0,1)
    # to avoid cancellation.
    out = np.empty_like(s)
    zero = s == 0.0
    inner = (s > 0.0) & (s < 1.0)
    rest = ~zero & ~inner
    out[zero] = float(nu)
    out[inner] = -np.expm1(nu * np.log1p(-s[inner])) / s[inner]
    out[rest] = (1.0 - (1.0 - s[rest]) ** nu) / s[rest]
    return out


def filter_eval(family: FilterFamily, lam: float, s):
    """Evaluate g_lam at spectral values s (scalar or array)."""
    lam = _check_lam(lam)
    arr = _as_spectrum(s)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if family.kind == "tikhonov":
        out = 1.0 / (lam + arr)
    elif family.kind == "cutoff":
        out = np.zeros_like(arr)
        keep = arr >= lam
        out[keep] = 1.0 / arr[keep]
    else:
        out = _landweber_g(effective_steps(family, lam), arr)
    return float(out[0]) if scalar else out


def residual_eval(family: FilterFamily, lam: float, s):
    """Evaluate the residual 1 - s * g_lam(s) in a cancellation-free form."""
    lam = _check_lam(lam)
    arr = _as_spectrum(s)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if family.kind == "tikhonov":
        out = lam / (lam + arr)
    elif family.kind == "cutoff":
        out = np.where(arr >= lam, 0.0, 1.0)
    else:
        out = (1.0 - arr) ** effective_steps(family, lam)
    return float(out[0]) if scalar else out


# =============================================================
# audits
# =============================================================


def default_lambda_grid(num: int = 100) -> np.ndarray:
    """Log grid of `num` points in (1e-6, 1], endpoint included."""
    return np.logspace(-6, 0, num + 1)[1:]


def default_spectrum_grid(s_max: float = 1.0, num: int = 100) -> np.ndarray:
    """Log grid of `num` points in (1e-9, s_max], endpoint included."""
    if not (s_max > 1e-9):
        raise ValueError("s_max must exceed the 1e-9 grid floor")
    return np.logspace(-9, math.log10(s_max), num + 1)[1:]


@dataclass(frozen=True)
class AxiomAudit:
    """Worst signed violations of the three filter bounds over a grid.

    Each field is (quantity - bound), so a non-positive value means the
    bound holds; `passes` allows a small floating tolerance.
    """

    family_label: str
    sg_below_zero: float  # max of (0 - s*g)
    sg_above_one: float  # max of (s*g - 1)
    residual_above_one: float  # max of (|1 - s*g| - 1)
    g_above_inv_lambda: float  # max of (lam*g - 1)

    def worst(self) -> float:
        return max(
            self.sg_below_zero,
            self.sg_above_one,
            self.residual_above_one,
            self.g_above_inv_lambda,
        )

    def passes(self, tol: float = 1e-12) -> bool:
        return self.worst() <= tol


def audit_axioms(family: FilterFamily, lam_grid=None, s_grid=None) -> AxiomAudit:
    """Evaluate the three filter bounds on a (lam, s) grid."""
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    s_grid = default_spectrum_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    if lam_grid.size == 0 or s_grid.size == 0:
        raise ValueError("audit grids must be non-empty")
    below = above = res = gbound = -math.inf
    for lam in lam_grid:
        g = filter_eval(family, lam, s_grid)
        sg = s_grid * g
        h = residual_eval(family, lam, s_grid)
        below = max(below, float((-sg).max()))
        above = max(above, float((sg - 1.0).max()))
        res = max(res, float((np.abs(h) - 1.0).max()))
        gbound = max(gbound, float((lam * g - 1.0).max()))
    return AxiomAudit(family.label, below, above, res, gbound)


def qualification_margin(family: FilterFamily, alpha: float, lam_grid=None, s_grid=None) -> float:
    """Worst ratio sup_s |1 - s*g_lam(s)| * s^alpha / lam^alpha over the grid.

    A margin <= 1 certifies saturation order alpha with constant one on the
    audited grid.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, dtype=float)
    s_grid = default_spectrum_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    if lam_grid.size == 0 or s_grid.size == 0:
        raise ValueError("audit grids must be non-empty")
    powered = s_grid**alpha
    worst = 0.0
    for lam in lam_grid:
        h = residual_eval(family, lam, s_grid)
        worst = max(worst, float((np.abs(h) * powered).max()) / lam**alpha)
    return worst
