"""Closed manifolds with explicit Laplace-Beltrami eigensystems.

Three homogeneous spaces are supported: the unit circle, the flat square
torus with side 2*pi, and the unit 2-sphere.  For each one we can enumerate
the Laplacian spectrum in closed form and evaluate an eigenbasis that is
orthonormal in L2 of the uniform *probability* measure.  The first basis
function is always the constant 1 with eigenvalue 0.

Points are represented concretely: unit vectors in R^2 for the circle,
angle pairs in [0, 2*pi)^2 for the torus, unit vectors in R^3 for the
sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_FLATTENED_MODES = 10**6

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Manifold:
    """Static description of one of the supported spaces.

    Attributes
    ----------
    kind : str
        One of ``"circle"``, ``"torus2"``, ``"sphere2"``.
    dim : int
        Intrinsic dimension.
    volume : float
        Riemannian volume (2*pi, 4*pi^2 and 4*pi respectively).
    ambient_dim : int
        Dimension of the embedding space the points live in.
    """

    kind: str
    dim: int
    volume: float
    ambient_dim: int

    @property
    def density(self) -> float:
        """Uniform density 1/volume of the normalized measure."""
        return 1.0 / self.volume

    def point_width(self) -> int:
        """Width of the concrete point representation (angles for the torus)."""
        return {"circle": 2, "torus2": 2, "sphere2": 3}[self.kind]


_REGISTRY = {
    "circle": Manifold("circle", 1, 2.0 * math.pi, 2),
    "torus2": Manifold("torus2", 2, 4.0 * math.pi**2, 4),
    "sphere2": Manifold("sphere2", 2, 4.0 * math.pi, 3),
}


def get_manifold(kind: str) -> Manifold:
    """Look up a manifold by its kind string."""
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ValueError(
            f"unknown manifold {kind!r}; expected one of {sorted(_REGISTRY)}"
        ) from None


def manifold_kinds() -> list[str]:
    return sorted(_REGISTRY)


# =============================================================
# mode enumeration
# =============================================================
# Modes are small tuples, ordered by (eigenvalue, enumeration index) so that
# truncation at any K is stable.
#
#   circle:  ("const",), ("cos", j), ("sin", j)          eigenvalue j^2
#   torus2:  (mode_a, mode_b) of two circle modes        eigenvalue ja^2+jb^2
#   sphere2: (l, "zon"|"cos"|"sin", m)                   eigenvalue l(l+1)


def _circle_modes(count):
    modes = [("const",)]
    j = 1
    while len(modes) < count:
        modes.append(("cos", j))
        modes.append(("sin", j))
        j += 1
    return modes[:count]


def _circle_mode_eig(mode):
    return 0.0 if mode[0] == "const" else float(mode[1] ** 2)


def _torus_modes(count):
    # Every lattice mode with eigenvalue <= jmax^2 lies in the enumeration
    # box [-jmax, jmax]^2, so sorting the box by eigenvalue gives a correct
    # prefix as long as the ball holds at least `count` modes.
    jmax = max(1, math.isqrt(count) + 1)
    while True:
        oned = _circle_modes(2 * jmax + 1)
        pairs = []
        for ia, ma in enumerate(oned):
            ea = _circle_mode_eig(ma)
            for ib, mb in enumerate(oned):
                pairs.append((ea + _circle_mode_eig(mb), ia, ib, (ma, mb)))
        pairs.sort(key=lambda rec: (rec[0], rec[1], rec[2]))
        in_ball = sum(1 for rec in pairs if rec[0] <= jmax**2)
        if in_ball >= count:
            return [rec[3] for rec in pairs[:count]]
        jmax *= 2


def _sphere_modes(count):
    modes = []
    l = 0
    while len(modes) < count:
        modes.append((l, "zon", 0))
        for m in range(1, l + 1):
            modes.append((l, "cos", m))
            modes.append((l, "sin", m))
        l += 1
    return modes[:count]


def _mode_eigenvalue(kind, mode):
    if kind == "circle":
        return _circle_mode_eig(mode)
    if kind == "torus2":
        return _circle_mode_eig(mode[0]) + _circle_mode_eig(mode[1])
    return float(mode[0] * (mode[0] + 1))


# =============================================================
# eigenfunction evaluation
# =============================================================


def _circle_angle(points):
    return np.arctan2(points[:, 1], points[:, 0])


def _eval_circle_factor(mode, theta):
    if mode[0] == "const":
        return np.ones_like(theta)
    j = mode[1]
    if mode[0] == "cos":
        return _SQRT2 * np.cos(j * theta)
    return _SQRT2 * np.sin(j * theta)


def _normalized_legendre_table(lmax, ct, st):
    """Fully normalized associated Legendre values P~_l^m at cos(theta)=ct.

    Returns a dict (l, m) -> array over points; spherical harmonics built
    from these are orthonormal w.r.t. the area measure.  The recurrences are
    the standard stable ones on the normalized functions.
    """
    tab = {}
    tab[(0, 0)] = np.full_like(ct, math.sqrt(1.0 / (4.0 * math.pi)))
    for m in range(1, lmax + 1):
        tab[(m, m)] = math.sqrt((2 * m + 1) / (2.0 * m)) * st * tab[(m - 1, m - 1)]
    for m in range(0, lmax):
        tab[(m + 1, m)] = math.sqrt(2 * m + 3.0) * ct * tab[(m, m)]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            tab[(l, m)] = a * (ct * tab[(l - 1, m)] - b * tab[(l - 2, m)])
    return tab


_SQRT_4PI = math.sqrt(4.0 * math.pi)


@dataclass(frozen=True)
class SpectralBasis:
    """First K Laplacian eigenvalues and eigenfunctions of a manifold.

    Eigenvalues are sorted ascending with a stable tie order, and the
    eigenfunctions form an orthonormal system in L2 of the uniform
    probability measure (so ``evaluate`` of the first mode is identically 1).
    """

    manifold: Manifold
    eigenvalues: np.ndarray
    modes: tuple = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate all basis functions at the given points.

        Parameters
        ----------
        points : ndarray of shape (n, ambient)
            Points in the manifold's concrete representation.

        Returns
        -------
        ndarray of shape (n, K) with entry (i, k) = f_k(x_i).
        """
        pts = validate_points(self.manifold, points)
        kind = self.manifold.kind
        n = pts.shape[0]
        out = np.empty((n, self.size))
        if kind == "circle":
            theta = _circle_angle(pts)
            for k, mode in enumerate(self.modes):
                out[:, k] = _eval_circle_factor(mode, theta)
        elif kind == "torus2":
            th1 = pts[:, 0]
            th2 = pts[:, 1]
            cache1, cache2 = {}, {}
            for k, (ma, mb) in enumerate(self.modes):
                if ma not in cache1:
                    cache1[ma] = _eval_circle_factor(ma, th1)
                if mb not in cache2:
                    cache2[mb] = _eval_circle_factor(mb, th2)
                out[:, k] = cache1[ma] * cache2[mb]
        else:
            ct = np.clip(pts[:, 2], -1.0, 1.0)
            st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
            phi = np.arctan2(pts[:, 1], pts[:, 0])
            lmax = max(mode[0] for mode in self.modes)
            tab = _normalized_legendre_table(lmax, ct, st)
            trig = {0: (np.ones(n), np.zeros(n))}
            for m in range(1, lmax + 1):
                trig[m] = (np.cos(m * phi), np.sin(m * phi))
            for k, (l, part, m) in enumerate(self.modes):
                if part == "zon":
                    out[:, k] = _SQRT_4PI * tab[(l, 0)]
                elif part == "cos":
                    out[:, k] = _SQRT_4PI * _SQRT2 * tab[(l, m)] * trig[m][0]
                else:
                    out[:, k] = _SQRT_4PI * _SQRT2 * tab[(l, m)] * trig[m][1]
        return out

    def evaluate_one(self, k: int, points: np.ndarray) -> np.ndarray:
        """Evaluate the k-th basis function (0-based) at points."""
        if not 0 <= k < self.size:
            raise ValueError(f"mode index {k} out of range [0, {self.size})")
        sub = SpectralBasis(self.manifold, self.eigenvalues[k : k + 1], (self.modes[k],))
        return sub.evaluate(points)[:, 0]


def build_spectral_basis(manifold: Manifold, size: int) -> SpectralBasis:
    """Enumerate the first `size` eigenpairs of the manifold's Laplacian.

    Raises
    ------
    ValueError
        If `size` is not a positive integer.
    TruncationOverflowError
        If `size` exceeds the flattened mode cap.
    """
    from .exceptions import TruncationOverflowError

    if not isinstance(size, (int, np.integer)) or size < 1:
        raise ValueError(f"basis size must be a positive integer, got {size!r}")
    if size > MAX_FLATTENED_MODES:
        raise TruncationOverflowError(size, MAX_FLATTENED_MODES)
    kind = manifold.kind
    if kind == "circle":
        modes = _circle_modes(size)
    elif kind == "torus2":
        modes = _torus_modes(size)
    elif kind == "sphere2":
        modes = _sphere_modes(size)
    else:  # pragma: no cover - registry guards this
        raise ValueError(f"unknown manifold kind {kind!r}")
    eigs = np.array([_mode_eigenvalue(kind, mode) for mode in modes])
    return SpectralBasis(manifold, eigs, tuple(modes))


def level_iterator(manifold: Manifold):
    """Yield (eigenvalue, multiplicity) for distinct spectral levels, ascending.

    The iterator is unbounded; callers truncate it.
    """
    kind = manifold.kind
    if kind == "circle":

        def gen():
            yield 0.0, 1
            j = 1
            while True:
                yield float(j * j), 2
                j += 1

    elif kind == "sphere2":

        def gen():
            l = 0
            while True:
                yield float(l * (l + 1)), 2 * l + 1
                l += 1

    else:

        def gen():
            # Exact lattice multiplicities of j^2+k^2, produced in blocks:
            # every value <= jmax^2 is complete once the box [-jmax, jmax]^2
            # has been counted.
            jmax = 8
            emitted = -1.0
            while True:
                counts = {}
                for j in range(-jmax, jmax + 1):
                    for k in range(-jmax, jmax + 1):
                        counts[j * j + k * k] = counts.get(j * j + k * k, 0) + 1
                for val in sorted(counts):
                    if emitted < val <= jmax * jmax:
                        yield float(val), counts[val]
                        emitted = float(val)
                jmax *= 2

    return gen()


# =============================================================
# sampling and validation
# =============================================================


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_uniform(manifold: Manifold, n: int, seed) -> np.ndarray:
    """Draw n independent uniform points on the manifold.

    Parameters
    ----------
    manifold : Manifold
    n : int
        Positive sample size.
    seed : int, sequence of ints, or numpy Generator
        Source of randomness; a given integer seed is reproducible.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n!r}")
    rng = _as_rng(seed)
    kind = manifold.kind
    if kind == "circle":
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if kind == "torus2":
        return rng.uniform(0.0, 2.0 * math.pi, size=(n, 2))
    vec = rng.standard_normal((n, 3))
    norms = np.linalg.norm(vec, axis=1, keepdims=True)
    # Resample the (measure-zero) degenerate draws rather than divide by ~0.
    bad = norms[:, 0] < 1e-12
    while np.any(bad):  # pragma: no cover - essentially unreachable
        vec[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(vec, axis=1, keepdims=True)
        bad = norms[:, 0] < 1e-12
    return vec / norms


def validate_points(manifold: Manifold, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Check that `points` lie in the manifold's representation; return as float array.

    Raises ValueError on wrong shape, non-finite entries, off-manifold
    coordinates, or an apparent manifold mismatch.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1 and pts.shape[0] == manifold.point_width():
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != manifold.point_width():
        raise ValueError(
            f"{manifold.kind} points must have shape (n, {manifold.point_width()}), "
            f"got {np.asarray(points).shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite values")
    kind = manifold.kind
    if kind in ("circle", "sphere2"):
        norms = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(norms - 1.0)) > tol:
            raise ValueError(f"{kind} points must be unit vectors (tol {tol})")
    else:
        if pts.min() < -tol or pts.max() >= 2.0 * math.pi + tol:
            raise ValueError("torus2 points must be angle pairs in [0, 2*pi)")
    return pts


# =============================================================
# spectral growth envelope
# =============================================================


@dataclass(frozen=True)
class WeylEnvelope:
    """Empirical two-sided power-law envelope for the eigenvalue sequence.

    Over 1-based indices k >= k_min the estimates satisfy

        c_low * k**(2/m) <= eigenvalue_k <= c_up * k**(2/m)

    for every enumerated mode of the basis the envelope was fitted on.
    """

    c_low: float
    c_up: float
    k_min: int
    m: int
    size: int


def weyl_envelope(basis: SpectralBasis, k_min: int = 2) -> WeylEnvelope:
    """Fit the empirical eigenvalue growth envelope of a basis.

    The first mode (eigenvalue 0) is excluded by the default k_min=2 since a
    power law cannot hold there.
    """
    if k_min < 1:
        raise ValueError("k_min must be >= 1")
    if basis.size < k_min:
        raise ValueError(
            f"basis has {basis.size} modes; need at least k_min={k_min}"
        )
    m = basis.manifold.dim
    ks = np.arange(k_min, basis.size + 1, dtype=float)
    ratios = basis.eigenvalues[k_min - 1 :] / ks ** (2.0 / m)
    c_low = float(ratios.min())
    c_up = float(ratios.max())
    if not (0.0 < c_low <= c_up < math.inf):
        raise ValueError("degenerate envelope; eigenvalue 0 inside the fit range")
    return WeylEnvelope(c_low, c_up, int(k_min), int(m), basis.size)
