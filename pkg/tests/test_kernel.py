import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from mfbs import kernel
from mfbs.errors import ArgumentError
from mfbs.kernel import FULL_LINE, KernelSpec, Region1D


def c_h_oracle(h):
    """Variance of the unnormalized moving average at t = 1, Gamma-function form."""
    return math.gamma(h + 0.5) ** 2 / (math.gamma(2 * h + 1) * math.sin(math.pi * h))


def fbm_shape(s, t, h):
    return 0.5 * (s ** (2 * h) + t ** (2 * h) - abs(t - s) ** (2 * h))


def liouville_oracle(s, t, h):
    """int_0^m x^p (x + D)^p dx in hypergeometric form, m = min, D = |t - s|."""
    p = h - 0.5
    m, D = min(s, t), abs(t - s)
    if D == 0:
        return m ** (2 * h) / (2 * h)
    return D ** p * m ** (p + 1) / (p + 1) * special.hyp2f1(-p, p + 1, p + 2, -m / D)


# ------------------------------------------------------------------ kernels


def test_kernel_values():
    g = KernelSpec("moving-average", 2.0, 0.7)
    assert kernel.kernel_eval(g, -1.0) == pytest.approx(3.0 ** 0.2 - 1.0)
    assert kernel.kernel_eval(g, 1.0) == pytest.approx(1.0)
    assert kernel.kernel_eval(g, 3.0) == 0.0
    lv = KernelSpec("liouville", 2.0, 0.7)
    assert kernel.kernel_eval(lv, -1.0) == 0.0
    assert kernel.kernel_eval(lv, 1.0) == pytest.approx(1.0)


def test_kernel_singular_points_are_infinite():
    g = KernelSpec("moving-average", 1.0, 0.3)
    assert kernel.kernel_eval(g, 1.0) == math.inf
    assert kernel.kernel_eval(g, 0.0) == -math.inf


def test_kernel_spec_validation():
    with pytest.raises(ArgumentError):
        KernelSpec("moving-average", 1.0, 1.0)
    with pytest.raises(ArgumentError):
        KernelSpec("other", 1.0, 0.5)
    with pytest.raises(ArgumentError):
        Region1D.interval(1.0, 0.5)


def test_brownian_kernel_is_indicator():
    k = KernelSpec("moving-average", 1.5, 0.5)
    np.testing.assert_array_equal(kernel.kernel_eval(k, np.array([-1.0, 0.5, 2.0])),
                                  [0.0, 1.0, 0.0])


# ------------------------------------------------------------ cross integrals


@pytest.mark.parametrize("h", [0.05, 0.2, 0.5, 0.8, 0.95])
def test_normalization_matches_gamma_oracle(h):
    assert kernel.normalization_constant(h) == pytest.approx(c_h_oracle(h), rel=1e-9)


@pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
def test_scalar_route_covariance_shape(h, rng):
    c = c_h_oracle(h)
    for s, t in rng.uniform(0.5, 2.0, (15, 2)):
        v = kernel.cross_integral_1d(KernelSpec("moving-average", s, h),
                                     KernelSpec("moving-average", t, h)).value
        assert v == pytest.approx(c * fbm_shape(s, t, h), rel=1e-8)


@pytest.mark.parametrize("h", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_batch_route_covariance_shape(h, rng):
    s, t = rng.uniform(0.05, 3.0, (2, 200))
    v = kernel.cross_integral_batch(s, h, t, h)
    ref = c_h_oracle(h) * 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h))
    np.testing.assert_allclose(v, ref, rtol=1e-10)


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_cross_integral_symmetric_and_routes_agree(ta, tb, ha, hb):
    a, b = KernelSpec("moving-average", ta, ha), KernelSpec("moving-average", tb, hb)
    v1 = kernel.cross_integral_1d(a, b, tol=1e-11).value
    v2 = kernel.cross_integral_1d(b, a, tol=1e-11).value
    vb = float(kernel.cross_integral_batch(ta, ha, tb, hb))
    scale = max(1.0, abs(v1))
    assert abs(v1 - v2) <= 1e-9 * scale
    assert abs(v1 - vb) <= 1e-9 * scale


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.05, 0.95))
def test_liouville_against_hypergeometric_oracle(s, t, h):
    v = kernel.cross_integral_1d(KernelSpec("liouville", s, h), KernelSpec("liouville", t, h),
                                 tol=1e-12).value
    assert v == pytest.approx(liouville_oracle(s, t, h), rel=1e-8, abs=1e-12)
    vb = float(kernel.cross_integral_batch(s, h, t, h, variant="liouville"))
    assert vb == pytest.approx(v, rel=1e-9, abs=1e-13)


def test_liouville_diagonal_closed_form():
    for h in (0.2, 0.5, 0.8):
        k = KernelSpec("liouville", 1.7, h)
        assert kernel.cross_integral_1d(k, k).value == pytest.approx(1.7 ** (2 * h) / (2 * h),
                                                                     rel=1e-9)


def test_region_splitting_is_additive():
    a, b = KernelSpec("moving-average", 1.0, 0.3), KernelSpec("moving-average", 1.6, 0.7)
    tol = 1e-10
    whole = kernel.cross_integral_1d(a, b, Region1D.interval(-20.0, 2.0), tol).value
    parts = [(-20.0, -1.0), (-1.0, 0.0), (0.0, 0.4), (0.4, 1.0), (1.0, 2.0)]
    total = sum(kernel.cross_integral_1d(a, b, Region1D.interval(lo, hi), tol).value
                for lo, hi in parts)
    assert abs(whole - total) <= 2 * tol * len(parts)


@pytest.mark.parametrize("ha,hb", [(0.2, 0.3), (0.7, 0.9), (0.3, 0.8)])
def test_tail_truncation_bound(ha, hb):
    a, b = KernelSpec("moving-average", 1.0, ha), KernelSpec("moving-average", 1.5, hb)
    V = 10.0
    near = kernel.cross_integral_1d(a, b, Region1D.interval(-V, 1.5), 1e-12).value
    far = kernel.cross_integral_1d(a, b, Region1D.interval(-2 * V, 1.5), 1e-12).value
    assert abs(far - near) <= kernel.tail_bound(a, b, V)
    full = kernel.cross_integral_1d(a, b, FULL_LINE, 1e-12).value
    assert abs(full - near) <= kernel.tail_bound(a, b, V)


def test_batch_interval_mode_matches_scalar(rng):
    ta, tb = rng.uniform(0.5, 2, (2, 20))
    ha, hb = rng.uniform(0.1, 0.9, (2, 20))
    lo = rng.uniform(0, 0.3, 20)
    hi = lo + rng.uniform(0.05, 1.0, 20)
    vb = kernel.cross_integral_batch(ta, ha, tb, hb, "interval", lo, hi, variant="liouville")
    for k in range(20):
        r = Region1D.interval(lo[k], hi[k])
        v = kernel.cross_integral_1d(KernelSpec("liouville", ta[k], ha[k]),
                                     KernelSpec("liouville", tb[k], hb[k]), r, 1e-12).value
        assert vb[k] == pytest.approx(v, rel=1e-9, abs=1e-13)


# ------------------------------------------------------------ inequality verifiers


def test_double_integral_beta_zero():
    rep = kernel.verify_double_integral_bound(0.3, 0.7, 0.0, [1e-2, 1e-3], 0.1)
    np.testing.assert_allclose(rep.lhs, [0.81, 0.81], rtol=1e-14)
    assert rep.fitted_constant <= 0.81 + 1e-12


def test_double_integral_stable():
    rep = kernel.verify_double_integral_bound(0.25, 0.6, 2.0, [1e-2, 1e-3, 1e-4], 0.1)
    assert rep.passed and np.isfinite(rep.fitted_constant)


def test_double_integral_large_a_trivial():
    lhs = kernel.double_integral_lhs(2.0, 0.25, 2.0, 0.1)
    assert lhs <= 0.81 * 2.0 ** -2.0


def test_double_integral_against_dblquad():
    a, h, beta, eps = 1e-2, 0.25, 2.0, 0.1
    f = lambda s, r: (a + abs(s - r) ** (2 * h)) ** (-beta)
    ref, _ = integrate.dblquad(f, eps, 1, lambda r: eps, lambda r: r, epsabs=1e-9)
    assert kernel.double_integral_lhs(a, h, beta, eps) == pytest.approx(2 * ref, rel=1e-6)


def test_double_integral_precondition():
    with pytest.raises(ArgumentError):
        kernel.verify_double_integral_bound(0.4, 0.7, 1.0, [1e-2], 0.1)


def test_single_integral_trivial():
    assert kernel.single_integral(0.1, 0.2, 1.0, 0.0, 0.0) == 1.0


@pytest.mark.parametrize("alpha,beta,eta,case", [(1.0, 2.0, 1.0, "supercritical"),
                                                 (0.5, 2.0, 1.0, "critical"),
                                                 (0.5, 1.0, 0.3, "subcritical")])
def test_single_integral_cases(alpha, beta, eta, case):
    rep = kernel.verify_single_integral_bound(alpha, beta, eta, [1e-2, 1e-3, 1e-4, 1e-5], 1.0)
    assert rep.case == case
    assert rep.passed
    assert all(rep.extra["precondition"])


def test_single_integral_against_quad():
    A, B, al, be, et = 1e-3, 0.5, 0.7, 1.5, 0.4
    ref, _ = integrate.quad(lambda t: (A + t ** al) ** -be * (B + t) ** -et, 0, 1,
                            points=[A ** (1 / al)], epsabs=1e-12, limit=200)
    assert kernel.single_integral(A, B, al, be, et) == pytest.approx(ref, rel=1e-8)


def test_simplex_n1_b0_is_r():
    assert kernel.simplex_integral(1.0, 0.25, [0.0], 0.5) == pytest.approx(0.25, rel=1e-12)


def test_simplex_n1_closed_form_and_exponent():
    a, r, s0, b = 1.0, 0.25, 0.5, 0.5
    ref = ((a - s0 + r) ** (1 - b) - (a - s0) ** (1 - b)) / (1 - b)
    assert kernel.simplex_integral(a, r, [b], s0) == pytest.approx(ref, rel=1e-10)
    rep = kernel.verify_simplex_integral_bound(a, r, [b], s0)
    assert rep.extra["r_exponent"] == pytest.approx(1.0, abs=0.1)
    assert rep.passed


def test_simplex_n2_against_algebraic_weight():
    a, r, s0, b1, b2 = 1.0, 0.2, 0.5, 0.5, 0.5
    inner = lambda s1: (s1 - s0) ** (-b1) / (1 - b2)
    ref, _ = integrate.quad(inner, a, a + r, weight="alg", wvar=(0.0, 1 - b2), epsabs=1e-13)
    assert kernel.simplex_integral(a, r, [b1, b2], s0) == pytest.approx(ref, rel=1e-7)


def test_simplex_n2_exponent():
    rep = kernel.verify_simplex_integral_bound(1.0, 0.2, [0.5, 0.5], 0.5)
    assert rep.passed
    assert rep.extra["r_exponent"] == pytest.approx(1.5, abs=0.1)


def test_simplex_remainder_against_beta_recursion():
    b = [0.3, 0.6, 0.2, 0.5]
    z = np.geomspace(1e-6, 1.0, 40)
    num = kernel.simplex_remainder(b, z)
    ref = kernel.simplex_remainder_closed_form(b, z)
    for u, v in zip(num, ref):
        np.testing.assert_allclose(u, v, rtol=1e-8)


def test_simplex_arguments():
    with pytest.raises(ArgumentError):
        kernel.verify_simplex_integral_bound(1.0, 0.2, [0.5] * 7, 0.5)
    with pytest.raises(ArgumentError):
        kernel.verify_simplex_integral_bound(1.0, 0.2, [0.5], 0.9)
