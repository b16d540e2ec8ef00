import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from heatspec.manifolds import (
    build_spectral_basis,
    get_manifold,
    level_iterator,
    sample_uniform,
    validate_points,
    weyl_envelope,
)

CIRCLE = get_manifold("circle")
TORUS = get_manifold("torus2")
SPHERE = get_manifold("sphere2")


def test_registry_metadata():
    assert CIRCLE.dim == 1 and TORUS.dim == 2 and SPHERE.dim == 2
    assert_allclose(CIRCLE.volume, 2 * math.pi)
    assert_allclose(TORUS.volume, 4 * math.pi**2)
    assert_allclose(SPHERE.volume, 4 * math.pi)
    assert CIRCLE.density == pytest.approx(1 / (2 * math.pi))
    with pytest.raises(ValueError, match="unknown manifold"):
        get_manifold("klein")


def test_circle_eigenvalue_prefix():
    basis = build_spectral_basis(CIRCLE, 7)
    assert_allclose(basis.eigenvalues, [0, 1, 1, 4, 4, 9, 9])


def test_torus_eigenvalue_prefix():
    basis = build_spectral_basis(TORUS, 5)
    assert_allclose(basis.eigenvalues, [0, 1, 1, 1, 1])


def test_sphere_eigenvalue_prefix():
    basis = build_spectral_basis(SPHERE, 9)
    assert_allclose(basis.eigenvalues, [0, 2, 2, 2, 6, 6, 6, 6, 6])


def test_circle_eigenvalues_match_direct_enumeration():
    # Independent route: the k-th circle eigenvalue is ceil((k-1)/2)^2.
    basis = build_spectral_basis(CIRCLE, 201)
    expected = [math.ceil((k - 1) / 2) ** 2 for k in range(1, 202)]
    assert_allclose(basis.eigenvalues, expected)


def test_torus_eigenvalues_match_lattice_enumeration():
    # Independent route: sorted values of j^2 + k^2 over the integer lattice.
    vals = sorted(j * j + k * k for j in range(-10, 11) for k in range(-10, 11))
    basis = build_spectral_basis(TORUS, 30)
    assert_allclose(basis.eigenvalues, vals[:30])


def test_eigenvalues_sorted_and_first_zero():
    for man in (CIRCLE, TORUS, SPHERE):
        basis = build_spectral_basis(man, 40)
        assert basis.eigenvalues[0] == 0.0
        assert np.all(np.diff(basis.eigenvalues) >= 0)


def test_level_iterator_matches_basis():
    for man in (CIRCLE, TORUS, SPHERE):
        basis = build_spectral_basis(man, 60)
        flat = []
        for lam, mult in level_iterator(man):
            flat.extend([lam] * mult)
            if len(flat) >= 60:
                break
        assert_allclose(basis.eigenvalues, flat[:60])


def test_first_eigenfunction_is_constant_one():
    for man in (CIRCLE, TORUS, SPHERE):
        basis = build_spectral_basis(man, 3)
        pts = sample_uniform(man, 50, seed=0)
        assert_allclose(basis.evaluate(pts)[:, 0], 1.0, atol=1e-14)


@pytest.mark.parametrize("kind", ["circle", "torus2", "sphere2"])
def test_eigenfunctions_orthonormal_monte_carlo(kind):
    man = get_manifold(kind)
    basis = build_spectral_basis(man, 25)
    pts = sample_uniform(man, 100_000, seed=7)
    F = basis.evaluate(pts)
    gram = F.T @ F / len(pts)
    assert np.max(np.abs(gram - np.eye(25))) < 0.05


def test_sphere_harmonics_against_scipy():
    from scipy.special import lpmv

    basis = build_spectral_basis(SPHERE, 36)  # through l = 5
    pts = sample_uniform(SPHERE, 40, seed=3)
    F = basis.evaluate(pts)
    ct = pts[:, 2]
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    for k, (l, part, m) in enumerate(basis.modes):
        norm = math.sqrt(
            (2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m)
        )
        # scipy's lpmv carries the (-1)^m Condon-Shortley phase; ours does not.
        plm = (-1.0) ** m * lpmv(m, l, ct)
        if part == "zon":
            ref = math.sqrt(4 * math.pi) * norm * plm
        elif part == "cos":
            ref = math.sqrt(8 * math.pi) * norm * plm * np.cos(m * phi)
        else:
            ref = math.sqrt(8 * math.pi) * norm * plm * np.sin(m * phi)
        assert_allclose(F[:, k], ref, atol=1e-10, err_msg=f"mode {(l, part, m)}")


def test_evaluate_one_matches_columns():
    basis = build_spectral_basis(TORUS, 12)
    pts = sample_uniform(TORUS, 20, seed=1)
    F = basis.evaluate(pts)
    for k in (0, 3, 11):
        assert_allclose(basis.evaluate_one(k, pts), F[:, k])
    with pytest.raises(ValueError, match="out of range"):
        basis.evaluate_one(12, pts)


def test_sampling_contracts():
    pts = sample_uniform(CIRCLE, 1000, seed=5)
    assert pts.shape == (1000, 2)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) < 1e-12

    pts = sample_uniform(SPHERE, 1000, seed=5)
    assert pts.shape == (1000, 3)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) < 1e-12

    pts = sample_uniform(TORUS, 1000, seed=5)
    assert pts.shape == (1000, 2)
    assert pts.min() >= 0 and pts.max() < 2 * math.pi


def test_sampling_deterministic_in_seed():
    a = sample_uniform(SPHERE, 64, seed=42)
    b = sample_uniform(SPHERE, 64, seed=42)
    c = sample_uniform(SPHERE, 64, seed=43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_circle_sample_mean_concentrates():
    pts = sample_uniform(CIRCLE, 100_000, seed=1)
    assert np.linalg.norm(pts.mean(axis=0)) < 0.02


def test_sample_uniform_rejects_bad_n():
    with pytest.raises(ValueError, match="positive integer"):
        sample_uniform(CIRCLE, 0, seed=0)


def test_validate_points_errors():
    with pytest.raises(ValueError, match="shape"):
        validate_points(CIRCLE, np.zeros((4, 3)))
    with pytest.raises(ValueError, match="unit vectors"):
        validate_points(CIRCLE, np.full((4, 2), 2.0))
    with pytest.raises(ValueError, match="non-finite"):
        validate_points(TORUS, np.array([[np.nan, 0.0]]))
    with pytest.raises(ValueError, match="angle pairs"):
        validate_points(TORUS, np.array([[7.0, 0.0]]))
    # A circle point is not a valid sphere point.
    with pytest.raises(ValueError, match="shape"):
        validate_points(SPHERE, sample_uniform(CIRCLE, 5, seed=0))


def test_build_spectral_basis_errors():
    from heatspec.exceptions import TruncationOverflowError

    with pytest.raises(ValueError, match="positive integer"):
        build_spectral_basis(CIRCLE, 0)
    with pytest.raises(TruncationOverflowError):
        build_spectral_basis(CIRCLE, 10**6 + 1)


def test_weyl_envelope_circle_frozen_values():
    # Direct enumeration gives ratio extremes at k=2 (1/4) and k=3 (1/9).
    basis = build_spectral_basis(CIRCLE, 201)
    env = weyl_envelope(basis, k_min=2)
    assert env.m == 1
    assert_allclose(env.c_up, 0.25)
    assert_allclose(env.c_low, 1.0 / 9.0)
    assert env.c_up / env.c_low <= 4.2


def test_weyl_envelope_sphere_positive_finite():
    basis = build_spectral_basis(SPHERE, 400)
    env = weyl_envelope(basis, k_min=2)
    assert 0 < env.c_low <= env.c_up < math.inf


def test_weyl_envelope_bounds_hold_on_modes():
    for man in (CIRCLE, TORUS, SPHERE):
        basis = build_spectral_basis(man, 150)
        env = weyl_envelope(basis)
        ks = np.arange(2, basis.size + 1, dtype=float)
        lam = basis.eigenvalues[1:]
        grow = ks ** (2.0 / man.dim)
        assert np.all(lam >= env.c_low * grow - 1e-12)
        assert np.all(lam <= env.c_up * grow + 1e-12)


def test_weyl_envelope_insufficient_basis():
    basis = build_spectral_basis(CIRCLE, 1)
    with pytest.raises(ValueError, match="k_min"):
        weyl_envelope(basis, k_min=2)
