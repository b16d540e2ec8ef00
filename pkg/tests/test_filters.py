import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from heatspec.filters import (
    FilterFamily,
    audit_axioms,
    cutoff,
    default_lambda_grid,
    default_spectrum_grid,
    effective_steps,
    filter_eval,
    landweber,
    parse_filter,
    qualification_margin,
    residual_eval,
    tikhonov,
)

ALL_FAMILIES = [tikhonov(), cutoff(), landweber()]


def test_tikhonov_pointwise():
    assert filter_eval(tikhonov(), 0.1, 0.3) == pytest.approx(2.5)
    assert filter_eval(tikhonov(), 0.5, 0.0) == pytest.approx(2.0)


def test_cutoff_boundary_inclusive():
    fam = cutoff()
    assert filter_eval(fam, 0.5, 0.5) == pytest.approx(2.0)
    assert filter_eval(fam, 0.5, 0.49999999) == 0.0
    assert filter_eval(fam, 0.5, 0.0) == 0.0
    assert filter_eval(fam, 2.0, 1.0) == 0.0


def test_landweber_at_s_one_is_one():
    for lam in (0.01, 0.37, 1.0):
        assert filter_eval(landweber(3), lam, 1.0) == pytest.approx(1.0)
        assert filter_eval(landweber(), lam, 1.0) == pytest.approx(1.0)


def test_landweber_limit_at_zero_is_step_count():
    assert filter_eval(landweber(5), 0.9, 0.0) == pytest.approx(5.0)
    assert filter_eval(landweber(), 0.25, 0.0) == pytest.approx(4.0)


def test_landweber_matches_direct_geometric_sum():
    rng = np.random.default_rng(0)
    s = np.concatenate([rng.uniform(0, 2, size=50), [0.0, 1.0, 1.5]])
    for steps in (1, 2, 7, 40):
        direct = sum((1.0 - s) ** i for i in range(steps))
        assert_allclose(filter_eval(landweber(steps), 0.5, s), direct, rtol=1e-12, atol=1e-12)


def test_landweber_step_mapping():
    assert effective_steps(landweber(), 1.0) == 1
    assert effective_steps(landweber(), 0.5) == 2
    assert effective_steps(landweber(), 0.4) == 2  # floor keeps g <= 1/lam
    assert effective_steps(landweber(), 0.001) == 1000
    assert effective_steps(landweber(9), 0.5) == 9
    with pytest.raises(ValueError, match="landweber"):
        effective_steps(tikhonov(), 0.5)


def test_residual_matches_definition():
    s = np.logspace(-9, 0, 30)
    for fam in ALL_FAMILIES:
        for lam in (1e-4, 0.3, 1.0):
            g = filter_eval(fam, lam, s)
            assert_allclose(residual_eval(fam, lam, s), 1.0 - s * g, atol=1e-12)


def test_residual_at_zero_is_one():
    for fam in ALL_FAMILIES:
        assert residual_eval(fam, 0.2, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.label)
def test_axioms_hold_on_default_grid(fam):
    audit = audit_axioms(fam)
    assert audit.passes(tol=1e-12), audit


def test_fixed_step_landweber_violates_uniform_bound_at_large_lam():
    # With iterations pinned to 5, g(0+) = 5 exceeds 1/lam once lam > 1/5.
    audit = audit_axioms(landweber(5))
    assert audit.g_above_inv_lambda > 1.0


def test_qualification_property():
    assert tikhonov().qualification == 1.0
    assert cutoff().qualification == math.inf
    assert landweber(7).qualification == 7.0
    assert landweber().qualification == math.inf


def test_tikhonov_margin_alpha_one():
    assert qualification_margin(tikhonov(), 1.0) <= 1.0


def test_tikhonov_margin_breaks_beyond_qualification():
    assert qualification_margin(tikhonov(), 1.5) > 1.0


def test_cutoff_margin_high_alpha():
    assert qualification_margin(cutoff(), 5.0) <= 1.0


def test_landweber_margin_low_alpha():
    fam = landweber()
    assert qualification_margin(fam, 1.0) <= 1.0
    assert qualification_margin(fam, 2.0) <= 1.0


def test_landweber_margin_constant_one_fails_alpha_three():
    # The constant-one margin saturates near (alpha/e)^alpha, which exceeds
    # 1 from alpha = 3 on; the classical qualification statement carries a
    # constant and is not audited here.
    assert qualification_margin(landweber(), 3.0) > 1.0


def test_margin_monotone_grids():
    # A finer spectrum grid can only raise the supremum.
    fam = tikhonov()
    coarse = qualification_margin(fam, 1.2, s_grid=default_spectrum_grid(num=20))
    fine = qualification_margin(fam, 1.2, s_grid=default_spectrum_grid(num=400))
    assert fine >= coarse - 1e-15


def test_parse_filter():
    assert parse_filter("tikhonov") == tikhonov()
    assert parse_filter("cutoff") == cutoff()
    assert parse_filter("landweber") == landweber()
    assert parse_filter("landweber:12") == landweber(12)
    assert parse_filter("landweber:12").label == "landweber:12"
    assert parse_filter("cutoff").label == "cutoff"
    with pytest.raises(ValueError, match="unknown filter"):
        parse_filter("ridge")
    with pytest.raises(ValueError, match="step count"):
        parse_filter("landweber:x")
    with pytest.raises(ValueError, match="positive integer"):
        parse_filter("landweber:0")
    with pytest.raises(ValueError, match="suffix"):
        parse_filter("tikhonov:2")


def test_family_validation():
    with pytest.raises(ValueError, match="unknown filter"):
        FilterFamily("ridge")
    with pytest.raises(ValueError, match="steps only"):
        FilterFamily("tikhonov", steps=3)
    with pytest.raises(ValueError, match="positive integer"):
        FilterFamily("landweber", steps=-1)


def test_filter_eval_domain_errors():
    with pytest.raises(ValueError, match="positive"):
        filter_eval(tikhonov(), 0.0, 0.5)
    with pytest.raises(ValueError, match="positive"):
        filter_eval(tikhonov(), -1.0, 0.5)
    with pytest.raises(ValueError, match=">= 0"):
        filter_eval(tikhonov(), 0.5, -0.1)
    with pytest.raises(ValueError, match="alpha"):
        qualification_margin(tikhonov(), 0.0)
    with pytest.raises(ValueError, match="non-empty"):
        audit_axioms(tikhonov(), lam_grid=[])


def test_default_grids_cover_contract():
    lam = default_lambda_grid()
    s = default_spectrum_grid()
    assert len(lam) == 100 and len(s) == 100
    assert lam[0] > 1e-6 and lam[-1] == 1.0
    assert s[0] > 1e-9 and s[-1] == 1.0
    s2 = default_spectrum_grid(s_max=0.4)
    assert s2[-1] == pytest.approx(0.4)
