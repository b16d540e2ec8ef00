import math

import numpy as np
import pytest

from heatspec.exceptions import CodeConstructionError
from heatspec.heat_kernel import HeatKernelParams, basis_for_kernel
from heatspec.manifolds import get_manifold, sample_uniform, weyl_envelope
from heatspec.minimax import (
    BinaryCode,
    HardFamily,
    build_hard_family,
    check_conditions,
    gilbert_varshamov,
    kl_divergence,
    verify_packing,
)
from heatspec.power_space import evaluate_coefficients, power_norm


def _basis(t, kind="circle", tail_tol=1e-12):
    man = get_manifold(kind)
    params = HeatKernelParams(t=t, tail_tol=tail_tol)
    return man, params, basis_for_kernel(man, params)


def _one_hot_code(k=8):
    strings = np.zeros((2, k), dtype=np.uint8)
    strings[1, 0] = 1
    return BinaryCode(k, strings)


def test_code_search_k8_reaches_two_strings():
    code = gilbert_varshamov(8, seed=3)
    assert code.count >= 2
    assert np.all(code.strings[0] == 0)
    dist = BinaryCode.pairwise_hamming(code.strings)
    assert dist[np.triu_indices(code.count, k=1)].min() >= 1


def test_code_search_k16_frozen_instance():
    code = gilbert_varshamov(16, seed=0)
    assert code.count == 4
    assert np.all(code.strings[0] == 0)
    dist = BinaryCode.pairwise_hamming(code.strings)
    assert dist[np.triu_indices(4, k=1)].min() >= 2
    # frozen draw outcome for this seed
    assert sorted(code.strings.sum(axis=1).tolist()) == [0, 5, 6, 11]


def test_code_search_deterministic():
    a = gilbert_varshamov(24, seed=7)
    b = gilbert_varshamov(24, seed=7)
    assert np.array_equal(a.strings, b.strings)


def test_code_search_rejects_small_k():
    with pytest.raises(ValueError, match="at least 8"):
        gilbert_varshamov(4, seed=0)


def test_code_search_budget_exhaustion():
    with pytest.raises(CodeConstructionError) as err:
        gilbert_varshamov(64, seed=0, draw_budget=5)
    assert err.value.target == 2**8
    assert err.value.achieved < err.value.target
    assert err.value.budget == 5


def test_code_validation():
    with pytest.raises(ValueError, match="all-zero"):
        BinaryCode(8, np.ones((2, 8), dtype=np.uint8))
    with pytest.raises(ValueError, match="binary"):
        BinaryCode(8, np.full((2, 8), 2, dtype=np.int64))
    short = np.zeros((2, 16), dtype=np.uint8)
    short[1, :8] = 1
    with pytest.raises(ValueError, match="fall short"):
        BinaryCode(16, short)
    close = np.zeros((4, 16), dtype=np.uint8)
    close[1, 0] = 1  # distance 1 < 16/8
    close[2, 4:12] = 1
    close[3, 8:16] = 1
    with pytest.raises(ValueError, match="Hamming"):
        BinaryCode(16, close)


def test_family_member_zero_and_support_window():
    _, params, basis = _basis(0.3)
    code = _one_hot_code()
    fam = build_hard_family(basis, params, 0.4, 0.25, code)
    assert fam.count == 2
    assert np.all(fam.members[0].values == 0.0)
    m1 = fam.members[1].values
    assert np.all(m1[: code.k] == 0.0)
    assert np.count_nonzero(m1) == 1


def test_family_norm_is_eps_times_ones():
    _, params, basis = _basis(0.3)
    code = gilbert_varshamov(8, seed=2)
    eps, gamma = 0.37, 0.6
    fam = build_hard_family(basis, params, gamma, eps, code)
    for member, row in zip(fam.members, code.strings):
        nsq = power_norm(member, gamma) ** 2
        expected = eps * row.sum()
        assert abs(nsq - expected) <= 1e-12 * max(expected, 1.0)


def test_family_one_hot_l2_norm_is_eps():
    _, params, basis = _basis(0.3)
    fam = build_hard_family(basis, params, 0.0, 0.81, _one_hot_code())
    assert abs(power_norm(fam.members[1], 0.0) ** 2 - 0.81) < 1e-14


def test_family_requires_basis_of_two_blocks():
    _, params, basis = _basis(0.5)  # 15 modes < 16 needed at k=8
    with pytest.raises(ValueError, match="rebuild the basis larger"):
        build_hard_family(basis, params, 0.0, 0.1, _one_hot_code())
    with pytest.raises(ValueError, match="eps"):
        build_hard_family(basis, HeatKernelParams(t=0.3), 0.0, 0.0, _one_hot_code())


def test_packing_identity_exact():
    _, params, basis = _basis(0.01)
    code = gilbert_varshamov(16, seed=0)
    eps, gamma = 0.003, 0.4
    fam = build_hard_family(basis, params, gamma, eps, code)
    from heatspec.power_space import error_norm

    dist = BinaryCode.pairwise_hamming(code.strings)
    for i in range(fam.count):
        for j in range(i + 1, fam.count):
            d_sq = error_norm(fam.members[i], fam.members[j], gamma) ** 2
            assert abs(d_sq - eps * dist[i, j]) <= 1e-12 * eps * dist[i, j]
    assert verify_packing(fam) >= eps * code.k / 8.0


def test_packing_one_hot_is_eps():
    _, params, basis = _basis(0.3)
    fam = build_hard_family(basis, params, 0.0, 0.62, _one_hot_code())
    assert abs(verify_packing(fam) - 0.62) < 1e-14


def test_kl_zero_for_identical_and_unit_case():
    _, params, basis = _basis(0.3)
    sig = 0.7
    fam = build_hard_family(basis, params, 0.0, sig**2, _one_hot_code())
    f0, f1 = fam.members
    assert kl_divergence(f1, f1, 5, sig) == 0.0
    # ||f1 - f0||_0^2 = eps = sig^2, so n=2 gives exactly 1
    assert abs(kl_divergence(f1, f0, 2, sig) - 1.0) < 1e-12


def test_kl_symmetry_and_n_scaling():
    _, params, basis = _basis(0.3)
    code = gilbert_varshamov(8, seed=4)
    fam = build_hard_family(basis, params, 0.2, 0.11, code)
    f0, f1 = fam.members[0], fam.members[1]
    assert kl_divergence(f0, f1, 9, 0.5) == kl_divergence(f1, f0, 9, 0.5)
    assert kl_divergence(f0, f1, 18, 0.5) == 2.0 * kl_divergence(f0, f1, 9, 0.5)


def test_kl_matches_monte_carlo():
    # simulate both Gaussian regression laws and average the log-likelihood ratio
    man, params, basis = _basis(0.3)
    code = gilbert_varshamov(8, seed=1)
    fam = build_hard_family(basis, params, 0.0, 0.5, code)
    f1, f0 = fam.members[1], fam.members[0]
    sig, n = 0.7, 2
    formula = kl_divergence(f1, f0, n, sig)
    draws = 300_000
    pts = sample_uniform(man, draws, seed=17)
    fx = evaluate_coefficients(f1, pts)
    f0x = evaluate_coefficients(f0, pts)
    y = fx + sig * np.random.default_rng(5).standard_normal(draws)
    log_ratio = ((y - f0x) ** 2 - (y - fx) ** 2) / (2 * sig**2)
    mc = n * log_ratio.mean()
    assert abs(mc - formula) / formula < 0.05


def test_kl_rejects_bad_parameters():
    _, params, basis = _basis(0.3)
    fam = build_hard_family(basis, params, 0.0, 0.1, _one_hot_code())
    with pytest.raises(ValueError, match="noise_scale"):
        kl_divergence(fam.members[0], fam.members[1], 4, 0.0)
    with pytest.raises(ValueError, match="n must"):
        kl_divergence(fam.members[0], fam.members[1], 0, 1.0)


def _audit_setup():
    man, params, basis = _basis(0.01)
    code = gilbert_varshamov(16, seed=0)
    n, kl_frac, sig, radius, beta = 4096, 0.05, 0.5, 1.0, 0.5
    mode_coeff = 16 / math.log(n) ** 0.5
    eps_coeff = kl_frac * sig**2 * math.log(2) / 4
    eps = eps_coeff / n
    fam = build_hard_family(basis, params, 0.0, eps, code)
    weyl = weyl_envelope(basis)
    return fam, n, sig, kl_frac, radius, beta, weyl, mode_coeff, eps_coeff


def test_audit_constructed_circle_instance_passes():
    fam, n, sig, kl_frac, radius, beta, weyl, mode_coeff, eps_coeff = _audit_setup()
    rep = check_conditions(fam, n, sig, kl_frac, radius, beta, weyl, 1.0, mode_coeff, eps_coeff)
    assert rep.source_ok and rep.kl_ok and rep.conditions_ok
    assert rep.exponents_ok and rep.eps_coeff_ok
    # frozen magnitudes for this construction
    assert abs(rep.source_worst_sq - 3.0815483269212634e-05) < 1e-16
    assert abs(rep.kl_worst - 0.047653868663496225) < 1e-13
    assert abs(rep.kl_limit - kl_frac * math.log(3)) < 1e-15
    assert rep.source_exponent_margin < -0.8
    assert rep.kl_exponent_margin == 0.0


def test_audit_vanishing_amplitude_passes():
    fam, n, sig, kl_frac, radius, beta, weyl, mode_coeff, _ = _audit_setup()
    _, params, basis = _basis(0.01)
    tiny = build_hard_family(basis, params, 0.0, 1e-30, gilbert_varshamov(16, seed=0))
    rep = check_conditions(tiny, n, sig, kl_frac, radius, beta, weyl, 1.0, mode_coeff, 1e-30 * n)
    assert rep.conditions_ok


def test_audit_rejects_bad_kl_fraction():
    fam, n, sig, _, radius, beta, weyl, mode_coeff, eps_coeff = _audit_setup()
    for bad in [0.2, 0.125, 0.0, -0.1]:
        with pytest.raises(ValueError, match="kl_fraction"):
            check_conditions(fam, n, sig, bad, radius, beta, weyl, 1.0, mode_coeff, eps_coeff)


def test_audit_rejects_smoothness_below_power():
    fam, n, sig, kl_frac, radius, _, weyl, mode_coeff, eps_coeff = _audit_setup()
    with pytest.raises(ValueError, match="smoothness"):
        check_conditions(fam, n, sig, kl_frac, radius, 0.0, weyl, 1.0, mode_coeff, eps_coeff)


def test_audit_rejects_mismatched_envelope_dimension():
    fam, n, sig, kl_frac, radius, beta, _, mode_coeff, eps_coeff = _audit_setup()
    _, _, basis_s = _basis(0.5, kind="sphere2")
    weyl_s = weyl_envelope(basis_s)
    with pytest.raises(ValueError, match="dimension"):
        check_conditions(fam, n, sig, kl_frac, radius, beta, weyl_s, 1.0, mode_coeff, eps_coeff)


def test_family_count_property():
    _, params, basis = _basis(0.3)
    fam = build_hard_family(basis, params, 0.0, 0.1, _one_hot_code())
    assert isinstance(fam, HardFamily)
    assert fam.count == len(fam.members) == 2
