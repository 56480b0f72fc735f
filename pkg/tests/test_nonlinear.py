from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kraus_scope.modes import AzimuthalMode, lg_norm
from kraus_scope.nonlinear import (
    CrystalConfig,
    delta_kz_exact,
    delta_kz_paraxial,
    lambda_coefficient,
    overlap_closed_form,
    overlap_generating,
    overlap_generating_function,
    spuc_kernel,
    thin_crystal_beta,
    transverse_matching,
    upconverted_index,
    upconverted_wavelength,
    w_factor,
)

UM = 1e-6


def crystal(**kw) -> CrystalConfig:
    base = dict(lambda1=1.0 * UM, lambda2=1.0 * UM, n1=1.66, n2=1.66, L=0.0, w_c=100 * UM)
    base.update(kw)
    return CrystalConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        crystal(lambda1=0.0)
    with pytest.raises(ValueError):
        crystal(n2=0.9)
    with pytest.raises(ValueError):
        crystal(L=-1e-3)
    with pytest.raises(ValueError):
        crystal(w_c=0.0)


def test_upconverted_wavelength():
    assert upconverted_wavelength(crystal()) == pytest.approx(0.5 * UM, rel=1e-15)
    assert upconverted_wavelength(crystal(lambda2=1e12)) == pytest.approx(1.0 * UM, rel=1e-12)
    # hand evaluation of lambda1 lambda2 / (lambda1 + lambda2)
    assert upconverted_wavelength(crystal(lambda1=1.064 * UM, lambda2=1.550 * UM)) == pytest.approx(0.630910 * UM, rel=1e-6)


def test_upconverted_index():
    assert upconverted_index(crystal(n1=1.7, n2=1.7, lambda2=3.3 * UM)) == pytest.approx(1.7)
    assert upconverted_index(crystal(n1=1.6, n2=1.8)) == pytest.approx(1.7)
    cfg = crystal(n1=1.6, n2=1.7, lambda1=1.0, lambda2=2.0)
    assert upconverted_index(cfg) == pytest.approx((1.6 * 2.0 + 1.7 * 1.0) / 3.0, rel=1e-15)
    assert cfg.n3 == upconverted_index(cfg) and cfg.lambda3 == upconverted_wavelength(cfg)


def test_beta():
    assert thin_crystal_beta(crystal()) == 0
    cfg = crystal(L=1e-3)
    assert thin_crystal_beta(cfg) == pytest.approx(1.5915494309189534e-2, rel=1e-12)
    assert thin_crystal_beta(crystal(L=1e-3, w_c=200 * UM)) == pytest.approx(cfg.beta / 4, rel=1e-14)


def test_paraxial_mismatch_zeros():
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    a1 = np.array([3e3, -1e3])
    a2 = a1 * cfg.lambda1 / cfg.lambda2
    assert delta_kz_paraxial(cfg, a1, a2) == pytest.approx(0.0, abs=1e-20)
    assert delta_kz_paraxial(cfg, (0, 0), (0, 0)) == 0


def test_paraxial_agrees_with_exact_to_second_order():
    # Richardson: the exact - paraxial difference is quartic, so the paraxial form is the
    # leading term of the exact one
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    d1 = np.array([0.6, 0.2])
    d2 = np.array([-0.3, 0.5])
    s = 2e4
    ratios = []
    for h in (s, s / 2):
        ratios.append(delta_kz_exact(cfg, h * d1, h * d2) / delta_kz_paraxial(cfg, h * d1, h * d2))
    extrapolated = (4 * ratios[1] - ratios[0]) / 3
    assert extrapolated == pytest.approx(1.0, abs=1e-7)


def test_transverse_matching():
    cfg = crystal()
    assert np.allclose(transverse_matching(cfg, (0, 0), (0, 0)), 0)
    a1, a2 = np.array([1.0, 2.0]), np.array([-0.5, 4.0])
    assert np.allclose(transverse_matching(cfg, a1, a2), a1 + a2)
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    assert np.allclose(transverse_matching(cfg, a1, a2), (1.6 * a1 + 1.7 * a2) / cfg.n3, rtol=1e-14)


def test_kernel_values():
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7, L=2e-3)
    assert spuc_kernel(cfg, (0, 0), (0, 0)) == 1
    thin = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    a1 = np.array([500.0, -300.0])
    assert spuc_kernel(thin, a1, -1.6 * a1 / 1.7) == pytest.approx(1.0, abs=1e-15)
    # factor-wise recomputation at a generic point
    a2 = np.array([120.0, 700.0])
    s = 1.6 * a1 + 1.7 * a2
    fiber = math.exp(-(math.pi**2) * cfg.w_c**2 / cfg.n3**2 * float(s @ s))
    d = cfg.lambda1 * a1 - cfg.lambda2 * a2
    dkz = math.pi * 1.6 * 1.7 * float(d @ d) / (1.6 * cfg.lambda2 + 1.7 * cfg.lambda1)
    assert spuc_kernel(cfg, a1, a2) == pytest.approx(fiber * math.exp(-cfg.L / 2 * dkz), rel=1e-13)


def test_generating_coefficients():
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    w1, w2 = 40 * UM, 60 * UM
    assert overlap_generating(cfg, w1, w2, 1, 1, 1) == 0
    W = w_factor(cfg, w1, w2)
    expected0 = lg_norm(0, w1) * lg_norm(0, w2) * cfg.n3**2 / (math.pi**2 * W)
    assert overlap_generating(cfg, w1, w2, 1, -1, 0) == pytest.approx(expected0, rel=1e-14)


def test_generating_taylor_coefficient_matches_numeric_series():
    # Cauchy-integral series coefficients of the generating function in t = mu1 mu2
    cfg = crystal(lambda1=1.0 * UM, lambda2=1.5 * UM, n1=1.6, n2=1.7)
    w1, w2 = 40 * UM, 60 * UM
    n, r = 64, 1.0
    t = r * np.exp(2j * np.pi * np.arange(n) / n)
    f = overlap_generating_function(cfg, w1, w2, 1, -1, t, 1.0, order=2)
    coeff2 = np.mean(f * t ** (-2)).real
    assert overlap_generating(cfg, w1, w2, 1, -1, 2) == pytest.approx(coeff2, rel=1e-12)


def test_closed_form_selection_and_zeroth_order():
    cfg = crystal()
    w = 50 * UM
    assert overlap_closed_form(cfg, AzimuthalMode(1, w), AzimuthalMode(1, w)).value == 0
    m00 = overlap_closed_form(cfg, AzimuthalMode(0, w), AzimuthalMode(0, w))
    assert m00.value == pytest.approx(overlap_generating(cfg, w, w, 0, 0, 0))
    assert m00.probability == pytest.approx(abs(m00.value) ** 2)


def test_lambda_values():
    cfg = crystal()
    assert lambda_coefficient(cfg, 50 * UM, 50 * UM, 0) == 1
    for alpha in (0.01, 0.5, 1.0, 4.0):
        w0 = math.sqrt(alpha) * cfg.w_c
        for ell in range(-6, 7):
            assert lambda_coefficient(cfg, w0, w0, ell) == pytest.approx((2 + alpha) ** (-abs(ell)), rel=1e-12)
    assert lambda_coefficient(cfg, 1e-5 * cfg.w_c, 1e-5 * cfg.w_c, 1) == pytest.approx(0.5, rel=1e-9)


positive = st.floats(0.1, 10.0)
index = st.floats(1.0, 3.0)


@settings(max_examples=60, deadline=None)
@given(l1=positive, l2=positive, n1=index, n2=index, wc=positive, w1=positive, w2=positive)
def test_geometric_invariants(l1, l2, n1, n2, wc, w1, w2):
    cfg = CrystalConfig(l1, l2, n1, n2, 0.0, wc)
    assert w_factor(cfg, w1, w2) > 0
    assert 1 / cfg.lambda3 == pytest.approx(1 / l1 + 1 / l2, rel=1e-12)
    assert min(n1, n2) - 1e-12 <= cfg.n3 <= max(n1, n2) + 1e-12
    lams = [lambda_coefficient(cfg, w1, w2, k) for k in range(6)]
    assert lams[0] == 1
    assert all(0 < b < a <= 1 for a, b in zip(lams, lams[1:]))
    assert lams[1] < 0.5 + 1e-12


@settings(max_examples=60, deadline=None)
@given(l1=st.integers(-5, 5), l2=st.integers(-5, 5), w1=positive, w2=positive)
def test_selection_rule_and_exchange_symmetry(l1, l2, w1, w2):
    cfg = CrystalConfig(1.0, 1.0, 1.5, 1.5, 0.0, 1.0)
    m = overlap_closed_form(cfg, AzimuthalMode(l1, w1), AzimuthalMode(l2, w2)).value
    if l1 != -l2:
        assert m == 0
    else:
        assert m.real > 0 and m.imag == 0
        swapped = overlap_closed_form(cfg, AzimuthalMode(-l1, w1), AzimuthalMode(-l2, w2)).value
        assert swapped == pytest.approx(m, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.floats(-2e4, 2e4), min_size=4, max_size=4),
    L=st.floats(0, 1e-2),
)
def test_kernel_bounded_and_paraxial_nonnegative(a, L):
    cfg = crystal(lambda2=1.3 * UM, n2=1.7, L=L)
    a1, a2 = np.array(a[:2]), np.array(a[2:])
    k = spuc_kernel(cfg, a1, a2)
    assert 0 <= k <= 1
    assert delta_kz_paraxial(cfg, a1, a2) >= 0
