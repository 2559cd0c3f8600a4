import math

import numpy as np
import pytest

from mfbs import hurst, localtime as lt, simulate as sm
from mfbs.errors import ArgumentError
from mfbs.fitting import loglog_fit

BM = hurst.constant([0.5])


def constant_field(c, grid, d=1):
    return sm.FieldSample(grid, d, np.full((grid.n_points, d), c), 0, "cholesky")


@pytest.fixture(scope="module")
def bm_path():
    g = sm.Grid([[1 / 512, 1.0]], 512)
    return sm.sample_cholesky(BM, g, seed=3)


def test_constant_path_gives_scaled_gaussian():
    g = sm.Grid([[1, 2]], 11)
    f = constant_field(0.3, g)
    k = 4.0
    x = np.linspace(-2, 2, 9)
    est = lt.mollified_local_time(f, x_grid=x, k=k)
    T = 11 * 0.1
    ref = T * math.sqrt(k / (2 * math.pi)) * np.exp(-0.5 * k * (x - 0.3) ** 2)
    np.testing.assert_allclose(est.values, ref, rtol=1e-12)
    assert lt.local_time_at(f, 0.5, lt.TimeSet(), k) == pytest.approx(
        T * math.sqrt(k / (2 * math.pi)) * math.exp(-0.5 * k * 0.04), rel=1e-12)


def test_mass_equals_time_measure(bm_path):
    est = lt.mollified_local_time(bm_path)
    assert est.mass() == pytest.approx(est.time_measure, rel=1e-6)


def test_additivity_over_disjoint_boxes(bm_path):
    k = lt.default_k(bm_path)
    x = np.linspace(-3, 3, 61)
    a = lt.mollified_local_time(bm_path, lt.TimeSet.box([[1 / 512, 0.5]]), x, k).values
    b = lt.mollified_local_time(bm_path, lt.TimeSet.box([[0.501, 1.0]]), x, k).values
    whole = lt.mollified_local_time(bm_path, lt.TimeSet(), x, k).values
    np.testing.assert_allclose(a + b, whole, rtol=1e-12, atol=1e-15)


def test_two_component_grid_matches_pointwise(rng):
    g = sm.Grid([[1, 2], [1, 2]], 5)
    f = sm.FieldSample(g, 2, rng.standard_normal((25, 2)), 0, "cholesky")
    axes = [np.linspace(-2, 2, 5), np.linspace(-1, 1, 3)]
    est = lt.mollified_local_time(f, x_grid=axes, k=2.0)
    assert est.values.shape == (5, 3)
    assert est.values[1, 2] == pytest.approx(
        lt.local_time_at(f, [axes[0][1], axes[1][2]], lt.TimeSet(), 2.0), rel=1e-12)


def test_default_k_rule():
    g = sm.Grid([[1, 2]], 5)
    f = sm.FieldSample(g, 1, np.array([[0.0], [0.1], [0.3], [0.4], [0.5]]), 0, "cholesky")
    # increments 0.1, 0.2, 0.1, 0.1 -> median 0.1 -> k^(-1/2) = 0.2
    assert lt.default_k(f) == pytest.approx(25.0)
    with pytest.raises(ArgumentError):
        lt.default_k(constant_field(1.0, g))


def test_occupation_identity(bm_path):
    for f in ({"kind": "constant"}, {"kind": "gaussian", "center": [0.0], "width": 0.5},
              {"kind": "box", "lo": [-0.5], "hi": [0.5]}):
        tol = 0.05 if f["kind"] == "box" else 1e-3
        assert lt.occupation_identity_residual(bm_path, f) <= tol
    with pytest.raises(ArgumentError):
        lt.builtin_test_function({"kind": "cosine"})


def test_time_set_errors():
    g = sm.Grid([[1, 2]], 11)
    f = constant_field(0.0, g)
    with pytest.raises(ArgumentError):
        lt.TimeSet.ball([1.05], 0.2).mask(g)
    with pytest.raises(ArgumentError):
        lt.TimeSet.box([[0.5, 1.5]]).mask(g)
    with pytest.raises(ArgumentError):
        lt.mollified_local_time(f, lt.TimeSet.box([[1.01, 1.02]]), k=1.0)
    with pytest.raises(ArgumentError):
        lt.mollified_local_time(f, k=-1.0)
    with pytest.raises(ArgumentError):
        lt.mollified_local_time(f, x_grid=[[0.0], [1.0]], k=1.0)


def test_ball_mask_counts():
    g = sm.Grid([[1, 2]], 11)
    assert lt.TimeSet.ball([1.5], 0.2).mask(g).sum() == 5


# ------------------------------------------------------------ existence


@pytest.mark.parametrize("H,d,verdict", [([0.5], 1, "exists-L2"), ([0.5, 0.5], 3, "exists-L2"),
                                         ([0.5], 2, "boundary"), ([0.6], 2, "none"),
                                         ([0.4], 3, "none")])
def test_existence_constant(H, d, verdict):
    rep = lt.existence_predicate(hurst.constant(H), [[1, 2]] * len(H), d)
    assert rep.verdict == verdict


def test_existence_monotone_in_d():
    h = hurst.affine_clamped([0.3, 0.6], [0.2, 0.0])
    order = {"exists-L2": 0, "boundary": 1, "none": 2}
    v = [order[lt.existence_predicate(h, [[0.1, 1], [0.1, 1]], d).verdict] for d in range(1, 9)]
    assert v == sorted(v)


def test_existence_bar_condition():
    h = hurst.affine_clamped([0.3], [0.4])
    rep = lt.existence_predicate(h, [[0.1, 1.0]], 2)
    assert rep.H_bar[0] == pytest.approx(0.7)
    assert not rep.bar_condition


# ------------------------------------------------------------ scaling fits


def test_loglog_fit_recovers_power_law():
    r = np.geomspace(0.01, 1, 6)
    fit = loglog_fit(r, 3 * r ** 1.7, theoretical=1.7)
    assert fit.slope == pytest.approx(1.7)
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.lower_bound_ok
    inv = loglog_fit(r, r ** -0.5, inverse=True)
    assert inv.slope == pytest.approx(0.5)
    with pytest.raises(ArgumentError):
        loglog_fit([1.0, 2.0], [1.0, -1.0])


def test_ball_fit_arguments():
    g = sm.Grid([[1, 2]], 11)
    X = np.zeros((40, 11, 1))
    with pytest.raises(ArgumentError):
        lt.ball_scaling_fit(X, BM, [1.5], [0.2], g)
    with pytest.raises(ArgumentError):
        lt.ball_scaling_fit(X, BM, [1.5], [0.1, 0.2], g)
    with pytest.raises(ArgumentError):
        lt.ball_scaling_fit(X[:10], BM, [1.5], [0.2, 0.1], g)


def test_moment_fit_arguments():
    g = sm.Grid([[1, 2]], 11)
    X = np.zeros((4, 11, 1))
    with pytest.raises(ArgumentError):
        lt.moment_scaling_fit(X, BM, 0.0, [0.5, 0.2], g, n=3)
    with pytest.raises(ArgumentError):
        lt.moment_scaling_fit(X, BM, 0.0, [0.5], g)


def test_ball_fit_constant_field_is_linear_in_radius():
    # A constant path at the level spends all of its time there: L ~ r.
    g = sm.Grid([[1, 2]], 201)
    X = np.zeros((30, 201, 1))
    radii = [0.4, 0.2, 0.1, 0.05]
    fit = lt.ball_scaling_fit(X, BM, [1.5], radii, g, k_rule=1.0)
    counts = np.array([2 * r / 0.005 + 1 for r in radii])
    np.testing.assert_allclose(fit.observed, counts * 0.005 / math.sqrt(2 * math.pi),
                               rtol=1e-9)
    assert fit.slope == pytest.approx(loglog_fit(radii, counts).slope)
    assert fit.theoretical_exponent == pytest.approx(0.5)


def test_gaussian_tail_far_from_path(bm_path):
    k = lt.default_k(bm_path)
    T = 512 * bm_path.grid.spacing[0]
    x = np.abs(bm_path.values).max() + 10 * k ** -0.5
    assert lt.local_time_at(bm_path, x, lt.TimeSet(), k) <= T * math.sqrt(
        k / (2 * math.pi)) * math.exp(-50)


def test_sharper_kernel_does_not_hurt_gaussian_residual():
    g = sm.Grid([[1 / 4096, 1.0]], 4096)
    f = sm.sample_cholesky(BM, g, seed=8)
    bump = {"kind": "gaussian", "center": [0.0], "width": 0.3}
    k = lt.default_k(f)
    r1 = lt.occupation_identity_residual(f, bump, k=k)
    r4 = lt.occupation_identity_residual(f, bump, k=4 * k)
    assert r4 <= r1 * 1.05 + 1e-12


def test_indicator_straddling_median(bm_path):
    m = float(np.median(bm_path.values))
    box = {"kind": "box", "lo": [m - 0.3], "hi": [m + 0.3]}
    assert lt.occupation_identity_residual(bm_path, box) <= 0.05
