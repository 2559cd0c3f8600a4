import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfbs import gaussian, hurst
from mfbs.errors import ArgumentError, ConditioningError

BM = hurst.constant([0.5])
SHEET = hurst.constant([0.5, 0.5])
VARY1 = hurst.affine_clamped([0.3], [0.3])
VARY2 = hurst.affine_clamped([0.3, 0.6], [[0.15, 0.05], [0.0, -0.1]])


def schur_by_inverse(A, target, given):
    """Textbook conditional variance with an explicit inverse."""
    g = list(given)
    return A[target, target] - A[target, g] @ np.linalg.inv(A[np.ix_(g, g)]) @ A[g, target]


# ---------------------------------------------------------------- covariance


def test_brownian_motion_covariance_is_min():
    C = gaussian.covariance_b(BM, [[1.0], [2.0]])
    np.testing.assert_allclose(C.entries, [[1, 1], [1, 2]], rtol=1e-12)


def test_brownian_sheet_covariance_is_product_of_mins(rng):
    P = rng.uniform(0.2, 2, (6, 2))
    ref = np.minimum.outer(P[:, 0], P[:, 0]) * np.minimum.outer(P[:, 1], P[:, 1])
    for method in ("closed-form", "scalar"):
        C = gaussian.covariance_b(SHEET, P, method=method)
        np.testing.assert_allclose(C.entries, ref, rtol=1e-8)


def test_varying_covariance_routes_agree(rng):
    P = rng.uniform(0.3, 1.5, (5, 2))
    a = gaussian.covariance_b(VARY2, P, method="batch").entries
    b = gaussian.covariance_b(VARY2, P, method="scalar").entries
    np.testing.assert_allclose(a, b, rtol=1e-9)
    assert np.all(np.linalg.eigvalsh(a) > 0)


def test_cross_covariance_block(rng):
    P, Q = rng.uniform(0.3, 1.5, (4, 1)), rng.uniform(0.3, 1.5, (3, 1))
    full = gaussian.covariance_b(VARY1, np.vstack([P, Q])).entries
    cross = gaussian.covariance_b(VARY1, P, others=Q)
    np.testing.assert_allclose(cross, full[:4, 4:], rtol=1e-12)


def test_points_must_be_positive():
    with pytest.raises(ArgumentError):
        gaussian.covariance_b(BM, [[0.0]])
    with pytest.raises(ArgumentError):
        gaussian.covariance_b(SHEET, [[1.0]])


def test_closed_form_requires_constant():
    with pytest.raises(ArgumentError):
        gaussian.covariance_b(VARY1, [[1.0]], method="closed-form")


# ---------------------------------------------------------------- pieces


def test_liouville_variance_closed_form():
    h = hurst.constant([0.3, 0.7])
    t = np.array([[1.2, 0.8]])
    v = gaussian.covariance_piece(h, "X0", 0.1, t).entries[0, 0]
    ref = 1.2 ** 0.6 / 0.6 * 0.8 ** 1.4 / 1.4
    assert v == pytest.approx(ref, rel=1e-10)


def test_brownian_pieces():
    t = np.array([[1.0]])
    assert gaussian.covariance_piece(BM, "X0", 0.25, t).entries[0, 0] == pytest.approx(1.0)
    assert gaussian.covariance_piece(BM, "X_eps", 0.25, t).entries[0, 0] == pytest.approx(0.25)
    y = gaussian.covariance_piece(BM, "Y_ell", 0.25, t, ell=0).entries[0, 0]
    assert y == pytest.approx(0.75)
    assert gaussian.covariance_piece(BM, "Z_eps", 0.25, t).entries[0, 0] == pytest.approx(0.0)


def test_sheet_pieces_by_hand():
    # Brownian sheet at (1, 2) with eps = 0.25: areas of the four sub-boxes.
    t = np.array([[1.0, 2.0]])
    eps = 0.25
    v = {tag: gaussian.covariance_piece(SHEET, tag, eps, t, ell=0 if tag == "Y_ell" else None)
         .entries[0, 0] for tag in ("X0", "X_eps", "Y_ell", "Z_eps")}
    y2 = gaussian.covariance_piece(SHEET, "Y_ell", eps, t, ell=1).entries[0, 0]
    assert v["X0"] == pytest.approx(2.0)
    assert v["X_eps"] == pytest.approx(eps * eps)
    assert v["Y_ell"] == pytest.approx(0.75 * eps)
    assert y2 == pytest.approx(1.75 * eps)
    assert v["Z_eps"] == pytest.approx(0.75 * 1.75)


@pytest.mark.parametrize("h", [VARY1, VARY2, SHEET])
def test_decomposition_identity(h, rng):
    P = rng.uniform(0.5, 1.5, (8, h.n_dims))
    eps = 0.2
    X0 = gaussian.covariance_piece(h, "X0", eps, P).entries
    tot = gaussian.covariance_piece(h, "X_eps", eps, P).entries
    tot = tot + gaussian.covariance_piece(h, "Z_eps", eps, P).entries
    for k in range(h.n_dims):
        tot = tot + gaussian.covariance_piece(h, "Y_ell", eps, P, ell=k).entries
    np.testing.assert_allclose(tot, X0, atol=2 * h.n_dims * 1e-10)


def test_z_routes_agree(rng):
    P = rng.uniform(0.5, 1.5, (6, 2))
    a = gaussian.covariance_piece(VARY2, "Z_eps", 0.2, P).entries
    b = gaussian.covariance_piece(VARY2, "Z_eps", 0.2, P, z_method="difference").entries
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_piece_eps_range():
    with pytest.raises(ArgumentError):
        gaussian.covariance_piece(BM, "X0", 0.6, [[1.0]])


# ------------------------------------------------------------ conditioning


def test_brownian_conditional_variance_is_last_gap():
    P = np.array([[0.3], [0.7], [1.1], [1.6]])
    C = gaussian.covariance_b(BM, P)
    assert gaussian.conditional_variance(C, 3, [0, 1, 2]) == pytest.approx(0.5, rel=1e-12)


def test_conditional_variance_matches_inverse(rng):
    P = rng.uniform(0.5, 1.5, (7, 2))
    A = gaussian.covariance_b(VARY2, P).entries
    for j in range(1, 7):
        assert gaussian.conditional_variance(A, j, range(j)) == pytest.approx(
            schur_by_inverse(A, j, range(j)), rel=1e-6)


def test_conditional_variance_target_in_given():
    with pytest.raises(ArgumentError):
        gaussian.conditional_variance(np.eye(2), 0, [0])


def test_det_factorization_check(rng):
    P = rng.uniform(0.5, 1.5, (6, 2))
    rep = gaussian.det_factorization_check(gaussian.covariance_b(VARY2, P))
    assert rep["relative_error"] < 1e-8


def test_jitter_policy():
    L, lam = gaussian.cholesky_jitter(np.ones((3, 3)))
    assert 0 < lam <= 1e-6
    assert np.allclose(L @ L.T, np.ones((3, 3)) + lam * np.eye(3))
    with pytest.raises(ConditioningError) as exc:
        gaussian.cholesky_jitter(np.diag([1.0, -1.0]))
    assert "min_eigenvalue" in exc.value.certificate


# ------------------------------------------------------------ certificates


def test_lnd_brownian_axis_exactness():
    P = np.array([[0.5], [0.9], [1.0], [1.7]])
    cert = gaussian.lnd_certificate(BM, P, mode="sectorial")
    assert cert.cond_variance == pytest.approx(0.7, rel=1e-8)
    assert cert.ratio == pytest.approx(1.0, rel=1e-8)
    ax = gaussian.lnd_certificate(BM, P, mode="axis")
    assert ax.cond_variance == pytest.approx(0.7, rel=1e-8)


def test_lnd_ordering_checked():
    with pytest.raises(ArgumentError):
        gaussian.lnd_certificate(BM, [[1.0], [0.5]])
    with pytest.raises(ArgumentError):
        gaussian.lnd_certificate(SHEET, [[1.0, 2.0], [1.5, 1.0]], mode="sectorial")


def test_lnd_ratio_positive_varying(rng):
    for _ in range(5):
        P = rng.uniform(0.5, 1.5, (6, 2))
        P = P[np.argsort(P[:, 0])]
        cert = gaussian.lnd_certificate(VARY2, P)
        assert cert.ratio > 0 and np.isfinite(cert.ratio)


@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_superadditivity(u):
    P = np.array([[0.6, 0.9], [0.8, 1.2], [1.0, 0.7], [1.3, 1.4], [1.45, 1.1]])
    gap = gaussian.superadditivity_gap(VARY2, P, [u])
    assert gap[0] >= -1e-10


def test_increment_lower_constant_bounds(rng):
    P = np.sort(rng.uniform(0.5, 1.5, (8, 1)), axis=0)
    out = gaussian.increment_lower_constant(VARY1, P, n_random=200, seed=1)
    assert 0 < out["C_n"] <= 1
    assert out["random_min"] >= out["C_n"] - 1e-12


def test_brownian_increment_band_is_exact():
    rep = gaussian.increment_bounds_report(BM, [[0.5, 1.5]], 100, 0.1, seed=2)
    np.testing.assert_allclose(rep.ratios, 1.0, rtol=1e-10)


def test_increment_band_varying():
    rep = gaussian.increment_bounds_report(VARY2, [[0.5, 1.5], [0.5, 1.5]], 200, 0.1, seed=3)
    assert 0 < rep.ratio_min <= rep.ratio_max < np.inf
    assert np.isfinite(rep.cross_hurst_max)


def test_disjoint_brownian_increments_uncorrelated():
    lags = np.array([[0.5], [1.0], [1.5]])
    out = gaussian.increment_correlation(BM, [1.0], [0.25], lags)
    np.testing.assert_allclose(out["r"], 0.0, atol=1e-10)
    assert out["spectral"].shape == (3,)
