"""Covariances of the sheet and of its one-sided pieces, plus conditioning.

Every covariance entry is a product over axes of one-dimensional cross
integrals (:mod:`mfbs.kernel`).  The one-sided field integrates the kernel
``(t - u)^(H(t) - 1/2)`` over ``[0, t]``; fixing ``eps > 0`` splits that box
into the corner ``[0, eps]^N``, the slabs ``R_l`` (axis ``l`` in
``(eps, t_l]``, all others in ``[0, eps]``) and the remaining subrectangles.
The matching independent fields are ``X_eps``, ``Y_l`` and ``Z_eps``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from . import kernel
from .errors import ArgumentError, ConditioningError, ConsistencyError
from .hurst import HurstFunctional

PROCESS_TAGS = ("B", "X0", "X_eps", "Y_ell", "Z_eps")
JITTER_START = 1e-12
JITTER_MAX = 1e-6


# --------------------------------------------------------------- matrices


def cholesky_jitter(A: np.ndarray):
    """Lower Cholesky factor with the escalating diagonal-jitter policy.

    Tries the plain factorization first, then adds ``lam * I`` with ``lam``
    from ``1e-12 * trace / n`` up to ``1e-6 * trace / n`` in factors of 10.

    Returns
    -------
    L : ndarray
    lam : float
        Jitter actually added (0 when none was needed).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    try:
        return linalg.cholesky(A, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = abs(float(np.trace(A))) / n
    if not scale > 0:
        scale = float(np.abs(A).max()) or 1.0
    lam = JITTER_START * scale
    while lam <= JITTER_MAX * scale * (1 + 1e-9):
        try:
            return linalg.cholesky(A + lam * np.eye(n), lower=True, check_finite=False), lam
        except linalg.LinAlgError:
            lam *= 10.0
    w = np.linalg.eigvalsh(A)
    raise ConditioningError(
        "matrix is not positive definite after maximal jitter",
        {"n": n, "min_eigenvalue": float(w[0]), "max_jitter": JITTER_MAX * scale,
         "trace_over_n": scale},
    )


@dataclass
class CovarianceMatrix:
    """Gram matrix over a point list.

    ``jitter_applied`` records the diagonal shift used by the last call to
    :meth:`cholesky`.
    """

    points: np.ndarray
    entries: np.ndarray
    jitter_applied: float = 0.0
    process_tag: str = "B"
    ell: Optional[int] = None
    _chol: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.process_tag not in PROCESS_TAGS:
            raise ArgumentError(f"unknown process tag {self.process_tag!r}")
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.entries = np.asarray(self.entries, dtype=float)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def cholesky(self) -> np.ndarray:
        if self._chol is None:
            self._chol, self.jitter_applied = cholesky_jitter(self.entries)
        return self._chol


# ---------------------------------------------------------------- assembly


def _pairs(n):
    return np.triu_indices(n)


def _symmetrize(n, iu, vals):
    M = np.empty((n, n))
    M[iu] = vals
    M[(iu[1], iu[0])] = vals
    return M


def _axis_gram(ci, hi, cj, hj, region, variant, lo=None, up=None, method="batch", tol=1e-10):
    """Cross integrals on one axis for paired arrays of coordinates and exponents."""
    if method == "batch":
        if region == "full-line":
            return kernel.cross_integral_batch(ci, hi, cj, hj, variant=variant)
        return kernel.cross_integral_batch(ci, hi, cj, hj, "interval", lo, up, variant=variant)
    out = np.empty(len(ci))
    for k in range(len(ci)):
        a = kernel.KernelSpec(variant, float(ci[k]), float(hi[k]))
        b = kernel.KernelSpec(variant, float(cj[k]), float(hj[k]))
        if region == "full-line":
            reg = kernel.FULL_LINE
        else:
            l0 = float(np.broadcast_to(lo, (len(ci),))[k])
            u0 = float(np.broadcast_to(up, (len(ci),))[k])
            if u0 <= l0:
                out[k] = 0.0
                continue
            reg = kernel.Region1D.interval(l0, u0)
        out[k] = kernel.cross_integral_1d(a, b, reg, tol=tol).value
    return out


def _check_points(h: HurstFunctional, points) -> np.ndarray:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != h.n_dims:
        raise ArgumentError(f"points have {P.shape[1]} coordinates, expected {h.n_dims}")
    if np.any(P <= 0):
        raise ArgumentError("points must lie in (0, inf)^N")
    return P


def _pair_factors(h, P, Q=None):
    """Axis data for all pairs: returns (index pairs, Ha, Hb, Pa, Pb)."""
    H = h(P)
    if Q is None:
        iu = _pairs(len(P))
        return iu, P[iu[0]], H[iu[0]], P[iu[1]], H[iu[1]]
    HQ = h(Q)
    ii, jj = np.meshgrid(np.arange(len(P)), np.arange(len(Q)), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    return (ii, jj), P[ii], H[ii], Q[jj], HQ[jj]


def _assemble(h, P, axis_fn, Q=None):
    """Gram (or cross-Gram) matrix from a per-axis factor function.

    ``axis_fn(ell, ta, ha, tb, hb)`` returns the axis-``ell`` factors for
    paired arrays.  Separable functionals are evaluated on unique axis
    coordinates only.
    """
    n = len(P)
    m = n if Q is None else len(Q)
    if h.separable:
        out = np.ones((n, m))
        for ell in range(h.n_dims):
            ua, ia = np.unique(P[:, ell], return_inverse=True)
            ub, ib = (ua, ia) if Q is None else np.unique(Q[:, ell], return_inverse=True)
            hua = h.axis_values(ell, ua)
            hub = hua if Q is None else h.axis_values(ell, ub)
            A, B = np.meshgrid(np.arange(len(ua)), np.arange(len(ub)), indexing="ij")
            G = axis_fn(ell, ua[A.ravel()], hua[A.ravel()], ub[B.ravel()],
                        hub[B.ravel()]).reshape(len(ua), len(ub))
            out *= G[np.ix_(ia.ravel(), ib.ravel())]
        if Q is None:
            out = 0.5 * (out + out.T)
        return out
    idx, Pa, Ha, Pb, Hb = _pair_factors(h, P, Q)
    vals = np.ones(len(Pa))
    for ell in range(h.n_dims):
        vals *= axis_fn(ell, Pa[:, ell], Ha[:, ell], Pb[:, ell], Hb[:, ell])
    if Q is None:
        return _symmetrize(n, idx, vals)
    return vals.reshape(n, m)


def covariance_b(h: HurstFunctional, points, tol: float = 1e-10, method: str = "batch",
                 others=None) -> CovarianceMatrix:
    """Covariance of the moving-average sheet at ``points``.

    Parameters
    ----------
    h : HurstFunctional
    points : array_like, shape (n, N)
    tol : float
        Per-factor tolerance for the scalar route.
    method : {"batch", "scalar", "closed-form"}
        ``closed-form`` (the default for constant functionals) uses
        ``prod_l c_l (s^2H + t^2H - |t-s|^2H) / 2``.
    others : array_like, optional
        Second point list; returns the cross-covariance entries instead
        (as a plain array).
    """
    P = _check_points(h, points)
    Q = None if others is None else _check_points(h, others)
    if h.is_constant and method == "batch":
        method = "closed-form"
    if method == "closed-form":
        if not h.is_constant:
            raise ArgumentError("closed-form covariance needs a constant functional")
        Hc = h(P[0])
        Qx = P if Q is None else Q
        M = np.ones((len(P), len(Qx)))
        for ell in range(h.n_dims):
            M *= kernel.fbm_covariance(P[:, ell][:, None], Qx[:, ell][None, :], float(Hc[ell]))
        if Q is not None:
            return M
        return CovarianceMatrix(P, 0.5 * (M + M.T), process_tag="B")

    def fn(ell, ta, ha, tb, hb):
        return _axis_gram(ta, ha, tb, hb, "full-line", "moving-average", method=method, tol=tol)

    M = _assemble(h, P, fn, Q)
    if Q is not None:
        return M
    return CovarianceMatrix(P, M, process_tag="B")


def _piece_region(tag, ell, axis, eps, upper_only=False):
    """Per-axis (lo, hi) clip for a piece; ``None`` means up to min(t, s)."""
    if tag == "X0":
        return 0.0, None
    if tag == "X_eps":
        return 0.0, eps
    if tag == "Y_ell":
        return (eps, None) if axis == ell else (0.0, eps)
    raise ArgumentError(f"no single-rectangle region for {tag}")


def covariance_piece(h: HurstFunctional, tag: str, eps: float, points, tol: float = 1e-10,
                     ell: Optional[int] = None, method: str = "batch",
                     z_method: str = "enumerate") -> CovarianceMatrix:
    """Covariance of one piece of the one-sided field.

    Parameters
    ----------
    tag : {"X0", "X_eps", "Y_ell", "Z_eps"}
    eps : float
        Corner size; must be below half the smallest coordinate.
    ell : int, optional
        Axis index (0-based) for ``Y_ell``.
    z_method : {"enumerate", "difference"}
        ``enumerate`` sums the ``2^N - N - 1`` remaining subrectangles
        directly; ``difference`` returns ``X0 - X_eps - sum_l Y_l``.

    Raises
    ------
    ConsistencyError
        If a diagonal entry of ``Z_eps`` is below ``-tol``.
    """
    P = _check_points(h, points)
    if not 0 < eps < 0.5 * P.min():
        raise ArgumentError("eps must satisfy 0 < eps < min coordinate / 2")
    if tag == "Y_ell" and (ell is None or not 0 <= ell < h.n_dims):
        raise ArgumentError("Y_ell needs an axis index 0 <= ell < N")
    N = h.n_dims

    def factor(region):
        def fn(axis, ta, ha, tb, hb):
            lo, hi = region(axis)
            up = np.minimum(ta, tb) if hi is None else np.full(ta.shape, hi)
            return _axis_gram(ta, ha, tb, hb, "interval", "liouville", lo, up, method, tol)
        return fn

    if tag in ("X0", "X_eps", "Y_ell"):
        M = _assemble(h, P, factor(lambda a: _piece_region(tag, ell, a, eps)))
        return CovarianceMatrix(P, M, process_tag=tag, ell=ell)
    if tag != "Z_eps":
        raise ArgumentError(f"unknown piece {tag!r}")
    if z_method == "difference":
        M = covariance_piece(h, "X0", eps, P, tol, method=method).entries
        M = M - covariance_piece(h, "X_eps", eps, P, tol, method=method).entries
        for k in range(N):
            M = M - covariance_piece(h, "Y_ell", eps, P, tol, ell=k, method=method).entries
    else:
        lower = [_assemble_axis(h, P, a, 0.0, eps, method, tol) for a in range(N)]
        upper = [_assemble_axis(h, P, a, eps, None, method, tol) for a in range(N)]
        M = np.zeros((len(P), len(P)))
        for size in range(2, N + 1):
            for S in itertools.combinations(range(N), size):
                term = np.ones_like(M)
                for a in range(N):
                    term = term * (upper[a] if a in S else lower[a])
                M = M + term
    if np.any(np.diag(M) < -tol):
        raise ConsistencyError("negative Z_eps variance", {"min_diag": float(np.diag(M).min())})
    return CovarianceMatrix(P, M, process_tag="Z_eps")


def _assemble_axis(h, P, axis, lo, hi, method, tol):
    """Axis-``axis`` factor matrix alone over ``[lo, hi or min(t, s)]``."""
    H = h(P)
    iu = _pairs(len(P))
    ta, tb = P[iu[0], axis], P[iu[1], axis]
    up = np.minimum(ta, tb) if hi is None else np.full(ta.shape, hi)
    vals = _axis_gram(ta, H[iu[0], axis], tb, H[iu[1], axis], "interval", "liouville",
                      lo, up, method, tol)
    return _symmetrize(len(P), iu, vals)


# ---------------------------------------------------------- conditioning


def _entries(C):
    return C.entries if isinstance(C, CovarianceMatrix) else np.asarray(C, dtype=float)


def conditional_variance(C, target: int, given: Sequence[int] = ()) -> float:
    """``Var(Z_target | Z_given)`` by a Cholesky-based Schur complement.

    Values in ``[-1e-12, 0)`` are clipped to 0.  No explicit inverse is formed.
    """
    A = _entries(C)
    given = [int(g) for g in given]
    if target in given:
        raise ArgumentError("target must not be in the conditioning set")
    ctt = float(A[target, target])
    if not given:
        return max(ctt, 0.0) if ctt >= -1e-12 else ctt
    Cgg = A[np.ix_(given, given)]
    cgt = A[given, target]
    L, lam = cholesky_jitter(Cgg)
    w = linalg.solve_triangular(L, cgt, lower=True, check_finite=False)
    v = ctt - float(w @ w)
    if v < 0:
        if v >= -1e-12 * max(1.0, ctt):
            return 0.0
        raise ConditioningError("negative conditional variance",
                                {"value": v, "target": target, "jitter": lam})
    return v


def sequential_conditional_variances(C) -> np.ndarray:
    """``Var(Z_j | Z_1..Z_{j-1})`` for every ``j`` from one Cholesky factor."""
    A = _entries(C)
    L, _ = cholesky_jitter(A)
    return np.diag(L) ** 2


def det_factorization_check(C) -> dict:
    """Compare ``log det C`` with the sum of logs of sequential conditional variances.

    The determinant comes from an LU factorization and the conditional
    variances from independent Schur complements, so the two routes share
    no factorization.
    """
    A = _entries(C)
    n = A.shape[0]
    sign, logdet = np.linalg.slogdet(A)
    cv = np.array([conditional_variance(A, j, range(j)) for j in range(n)])
    logprod = float(np.sum(np.log(cv)))
    rel = abs(math.expm1(logprod - logdet)) if sign > 0 else math.inf
    return {"logdet": float(logdet), "log_product": logprod, "relative_error": rel,
            "condition_number": float(np.linalg.cond(A))}


# ---------------------------------------------------------- certificates


@dataclass
class LndCertificate:
    """Conditional variance of the last point against its reference scale."""

    ordered_points: np.ndarray
    cond_variance: float
    lower_bound_ref: float
    ratio: float
    fitted_c: float
    mode: str = "axis"
    jitter: float = 0.0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["ordered_points"] = np.asarray(self.ordered_points).tolist()
        return d


def lnd_certificate(h: HurstFunctional, points, ell: int = 0, eps: Optional[float] = None,
                    mode: str = "axis") -> LndCertificate:
    """Non-determinism certificate for an ordered configuration.

    Parameters
    ----------
    points : array_like, shape (n, N)
        ``axis`` mode needs non-decreasing coordinate ``ell``; ``sectorial``
        mode needs every earlier point dominated componentwise by the last.
    ell : int
        Axis (0-based) for ``axis`` mode.
    eps : float, optional
        Corner size of the decomposition; defaults to a third of the
        smallest coordinate.
    mode : {"axis", "sectorial"}
        ``axis`` conditions ``Y_ell`` and compares against
        ``|t^n_l - t^(n-1)_l|^(2 H_l(t^n))``.  ``sectorial`` conditions the
        sheet itself and compares against
        ``sum_j min_k (t^n_j - t^k_j)^(2 H_j(t^n))`` with ``t^0 = 0``.
    """
    P = _check_points(h, points)
    n = len(P)
    if not 2 <= n <= 50:
        raise ArgumentError("configurations need 2 <= n <= 50 points")
    Hn = h(P[-1])
    if mode == "axis":
        if np.any(np.diff(P[:, ell]) < 0):
            raise ArgumentError(f"points must be sorted along axis {ell}")
        if eps is None:
            eps = P.min() / 3.0
        C = covariance_piece(h, "Y_ell", eps, P, ell=ell)
        ref = abs(P[-1, ell] - P[-2, ell]) ** (2 * Hn[ell])
    elif mode == "sectorial":
        if np.any(P[:-1] > P[-1]):
            raise ArgumentError("every earlier point must be dominated by the last")
        C = covariance_b(h, P)
        gaps = np.vstack([P[-1:] - P[:-1], P[-1:]])
        ref = float(np.sum(gaps.min(axis=0) ** (2 * Hn)))
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    L, lam = cholesky_jitter(C.entries)
    cv = float(L[-1, -1] ** 2)
    ratio = cv / ref if ref > 0 else math.inf
    return LndCertificate(P, cv, float(ref), float(ratio), float(ratio), mode, lam)


def superadditivity_gap(h: HurstFunctional, points, u, eps: Optional[float] = None) -> np.ndarray:
    """``u^T Cov(B) u - sum_l u^T Cov(Y_l) u`` for each row of ``u``."""
    P = _check_points(h, points)
    if eps is None:
        eps = P.min() / 3.0
    CB = covariance_b(h, P).entries
    CY = sum(covariance_piece(h, "Y_ell", eps, P, ell=k).entries for k in range(h.n_dims))
    U = np.atleast_2d(np.asarray(u, dtype=float))
    return np.einsum("ij,jk,ik->i", U, CB - CY, U)


def increment_lower_constant(h: HurstFunctional, points, ell: int = 0, eps=None,
                             n_random: int = 0, seed: int = 0) -> dict:
    """Fitted constant ``C_n`` for ordered increments of ``Y_ell``.

    With increments ``D_j = Y(t^j) - Y(t^(j-1))`` the best constant in
    ``Var(sum u_j D_j) >= C_n sum u_j^2 Var(D_j)`` is the smallest eigenvalue
    of the correlation matrix of ``D``.  ``n_random`` random directions are
    also evaluated for comparison.
    """
    P = _check_points(h, points)
    if eps is None:
        eps = P.min() / 3.0
    C = covariance_piece(h, "Y_ell", eps, P, ell=ell).entries
    m = len(P) - 1
    Dm = np.zeros((m, m + 1))
    Dm[np.arange(m), np.arange(m)] = -1.0
    Dm[np.arange(m), np.arange(1, m + 1)] = 1.0
    S = Dm @ C @ Dm.T
    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    cmin = float(np.linalg.eigvalsh(R)[0])
    out = {"C_n": cmin, "n": m}
    if n_random:
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((n_random, m))
        num = np.einsum("ij,jk,ik->i", U, S, U)
        den = (U ** 2) @ np.diag(S)
        out["random_min"] = float((num / den).min())
    return out


# --------------------------------------------------------------- increments


@dataclass
class IncrementReport:
    """Increment-variance ratios against the anisotropic power reference.

    ``cross_hurst_ratios`` are ``E[Z^b(t) - Z^b'(t)]^2 / |b - b'|^2`` for
    constant-exponent fields driven by the same noise.
    """

    ratio_min: float
    ratio_max: float
    ratios: np.ndarray
    delta: float
    n_pairs: int
    cross_hurst_max: float
    cross_hurst_ratios: np.ndarray

    def to_dict(self) -> dict:
        return {"ratio_min": self.ratio_min, "ratio_max": self.ratio_max,
                "delta": self.delta, "n_pairs": self.n_pairs,
                "cross_hurst_max": self.cross_hurst_max}


def _pair_products(h, S, T):
    """Var(S), Var(T), Cov(S, T) of the sheet for paired point rows."""
    HS, HT = h(S), h(T)
    vs = np.ones(len(S))
    vt = np.ones(len(S))
    cst = np.ones(len(S))
    for ell in range(h.n_dims):
        a, ha, b, hb = S[:, ell], HS[:, ell], T[:, ell], HT[:, ell]
        vs *= kernel.cross_integral_batch(a, ha, a, ha)
        vt *= kernel.cross_integral_batch(b, hb, b, hb)
        cst *= kernel.cross_integral_batch(a, ha, b, hb)
    return vs, vt, cst


def sample_pairs(interval, n_pairs: int, delta: float, rng) -> tuple:
    """Uniform pairs ``(s, t)`` in ``interval`` with ``0 < |s - t| < delta``."""
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    N = iv.shape[0]
    S, T = [], []
    while sum(len(s) for s in S) < n_pairs:
        m = 4 * n_pairs
        s = iv[:, 0] + (iv[:, 1] - iv[:, 0]) * rng.random((m, N))
        d = rng.standard_normal((m, N))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = delta * rng.random(m)
        t = s + d * r[:, None]
        ok = np.all((t >= iv[:, 0]) & (t <= iv[:, 1]), axis=1) & (r > 0)
        S.append(s[ok])
        T.append(t[ok])
    return np.concatenate(S)[:n_pairs], np.concatenate(T)[:n_pairs]


def increment_bounds_report(h: HurstFunctional, interval, n_pairs: int, delta: float,
                            seed: int = 0, n_hurst_pairs: int = 50,
                            hurst_range=None) -> IncrementReport:
    """Ratios ``E[B(t) - B(s)]^2 / sum_l |t_l - s_l|^(2 H_l(u))`` at the midpoint ``u``.

    Also reports ``E[Z^b(t) - Z^b'(t)]^2 / |b - b'|^2`` for constant-exponent
    fields sharing the same noise, with ``b, b'`` drawn from
    ``hurst_range`` (default ``[alpha, max K]``).
    """
    rng = np.random.default_rng(seed)
    S, T = sample_pairs(interval, n_pairs, delta, rng)
    vs, vt, cst = _pair_products(h, S, T)
    inc = vs + vt - 2 * cst
    U = 0.5 * (S + T)
    ref = np.sum(np.abs(T - S) ** (2 * h(U)), axis=1)
    keep = ref > 0
    ratios = inc[keep] / ref[keep]

    if hurst_range is None:
        Hs = h(np.vstack([S, T]))
        hurst_range = (float(Hs.min()), float(Hs.max()))
        if hurst_range[1] - hurst_range[0] < 1e-3:
            hurst_range = (max(0.01, hurst_range[0] - 0.05), min(0.99, hurst_range[1] + 0.05))
    lo, hi = hurst_range
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    N = h.n_dims
    b1 = rng.uniform(lo, hi, (n_hurst_pairs, N))
    b2 = rng.uniform(lo, hi, (n_hurst_pairs, N))
    tt = iv[:, 0] + (iv[:, 1] - iv[:, 0]) * rng.random((n_hurst_pairs, N))
    v1 = np.ones(n_hurst_pairs)
    v2 = np.ones(n_hurst_pairs)
    c12 = np.ones(n_hurst_pairs)
    for ell in range(N):
        v1 *= kernel.cross_integral_batch(tt[:, ell], b1[:, ell], tt[:, ell], b1[:, ell])
        v2 *= kernel.cross_integral_batch(tt[:, ell], b2[:, ell], tt[:, ell], b2[:, ell])
        c12 *= kernel.cross_integral_batch(tt[:, ell], b1[:, ell], tt[:, ell], b2[:, ell])
    num = v1 + v2 - 2 * c12
    den = np.sum((b1 - b2) ** 2, axis=1)
    hr = num / den
    return IncrementReport(float(ratios.min()), float(ratios.max()), ratios, float(delta),
                           int(keep.sum()), float(hr.max()), hr)


def increment_correlation(h: HurstFunctional, t, eta, lags, tol: float = 1e-10,
                          frequencies=None) -> dict:
    """Correlation of ``Y(t) = B(t + eta) - B(t)`` across lags and its DFT.

    Parameters
    ----------
    t : array_like, shape (N,)
    eta : array_like, shape (N,)
        Increment vector.
    lags : array_like, shape (m, N)
        Lag points ``s``; for the spectral density they should form a
        regular tensor grid.
    frequencies : array_like, shape (k, N), optional
        Defaults to the tensor grid of ``2 pi fftfreq`` per axis.

    Returns
    -------
    dict with ``r`` (m,), ``frequencies`` (k, N), ``spectral`` (k,) complex,
    ``spacing`` (N,) and ``lag_window`` (N, 2).
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    S = np.atleast_2d(np.asarray(lags, dtype=float))
    N = h.n_dims
    base = np.vstack([t, t + eta])
    pts_s = np.vstack([t + S, t + S + eta])
    m = len(S)
    # cross-covariances of (B(t+s), B(t+s+eta)) with (B(t), B(t+eta))
    Cx = covariance_b(h, pts_s, tol, others=base)
    cov = Cx[m:, 1] - Cx[m:, 0] - Cx[:m, 1] + Cx[:m, 0]
    var0 = covariance_b(h, base, tol).entries
    v0 = var0[1, 1] + var0[0, 0] - 2 * var0[0, 1]
    # variances at t + s
    vs = np.empty(m)
    for k in range(m):
        Ck = covariance_b(h, np.vstack([t + S[k], t + S[k] + eta]), tol).entries
        vs[k] = Ck[0, 0] + Ck[1, 1] - 2 * Ck[0, 1]
    r = np.clip(cov / np.sqrt(vs * v0), -1.0, 1.0)
    spacing = np.empty(N)
    for ell in range(N):
        u = np.unique(S[:, ell])
        spacing[ell] = np.min(np.diff(u)) if u.size > 1 else 1.0
    if frequencies is None:
        axes = []
        for ell in range(N):
            cnt = np.unique(S[:, ell]).size
            axes.append(2 * np.pi * np.fft.fftfreq(cnt, spacing[ell]))
        mesh = np.meshgrid(*axes, indexing="ij")
        frequencies = np.stack([x.ravel() for x in mesh], axis=1)
    F = np.atleast_2d(np.asarray(frequencies, dtype=float))
    spec = np.exp(-1j * (F @ S.T)) @ r * float(np.prod(spacing))
    window = np.stack([S.min(axis=0), S.max(axis=0)], axis=1)
    return {"r": r, "frequencies": F, "spectral": spec, "spacing": spacing,
            "lag_window": window}
