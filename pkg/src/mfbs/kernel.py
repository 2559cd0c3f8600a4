"""Moving-average kernels and their one-dimensional cross integrals.

With ``p = h - 1/2`` the moving-average factor is
``g(u) = (t - u)_+^p - (-u)_+^p`` on the whole line and the one-sided
(Liouville) factor is ``(t - u)^p`` on ``[0, t]``.  Covariances of the
sheet are products over axes of integrals ``int a(u) b(u) du``.

Two routes compute these integrals:

* :func:`cross_integral_1d` is the scalar reference.  It splits at the
  singular points, removes the endpoint singularities by a power
  substitution, integrates each panel with QUADPACK and truncates the
  infinite tail with an explicit bound.
* :func:`cross_integral_batch` is the vectorized fast path used to assemble
  large matrices.  It uses graded Gauss-Legendre panels, closed-form
  series next to singular points and a closed-form tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import ArgumentError, QuadratureError

VARIANTS = ("moving-average", "liouville")

_GL_N = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
_SERIES_TERMS = 24


@dataclass(frozen=True)
class KernelSpec:
    """One kernel factor.

    Parameters
    ----------
    variant : {"moving-average", "liouville"}
    t : float
        Time coordinate, positive.
    h : float
        Hurst exponent in ``(0, 1)``.
    """

    variant: str
    t: float
    h: float

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ArgumentError(f"unknown kernel variant {self.variant!r}")
        if not self.t > 0:
            raise ArgumentError("kernel time must be positive")
        if not 0 < self.h < 1:
            raise ArgumentError("kernel Hurst exponent must lie in (0, 1)")

    @property
    def p(self) -> float:
        return self.h - 0.5


@dataclass(frozen=True)
class Region1D:
    """Integration region: the whole line or a finite interval ``(lo, hi)``."""

    kind: str = "full-line"
    bounds: tuple = (None, None)

    def __post_init__(self):
        if self.kind not in ("full-line", "interval"):
            raise ArgumentError(f"unknown region kind {self.kind!r}")
        if self.kind == "interval":
            lo, hi = self.bounds
            if lo is None or hi is None or not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise ArgumentError("interval region needs finite bounds lo < hi")

    @staticmethod
    def interval(lo: float, hi: float) -> "Region1D":
        return Region1D("interval", (float(lo), float(hi)))


FULL_LINE = Region1D()


@dataclass
class QuadratureResult:
    """Value of a cross integral with its error budget."""

    value: float
    abs_error_estimate: float
    truncation_bound: float
    n_evals: int


# ----------------------------------------------------------------- kernels


def _ppow(x, p):
    """``(x)_+^p`` with the indicator convention at ``p = 0``."""
    x = np.asarray(x, dtype=float)
    pos = x > 0
    out = np.zeros_like(x)
    if p == 0:
        out[pos] = 1.0
    else:
        out[pos] = x[pos] ** p
    return out


def kernel_eval(spec: KernelSpec, u):
    """Pointwise kernel value.

    At the singular points ``u = 0`` and ``u = t`` with ``h < 1/2`` the value
    is returned as a signed infinity.
    """
    u_arr = np.asarray(u, dtype=float)
    p = spec.p
    with np.errstate(divide="ignore"):
        if spec.variant == "moving-average":
            val = _ppow(spec.t - u_arr, p) - _ppow(-u_arr, p)
            if p < 0:
                val = np.where(u_arr == spec.t, np.inf, val)
                val = np.where(u_arr == 0, -np.inf, val)
        else:
            inside = (u_arr >= 0) & (u_arr <= spec.t)
            val = np.where(inside, _ppow(spec.t - u_arr, p), 0.0)
            if p == 0:
                val = np.where(inside, 1.0, 0.0)
            if p < 0:
                val = np.where(u_arr == spec.t, np.inf, val)
    return float(val) if np.ndim(u) == 0 else val


def _g_neg(t, p, v):
    """Moving-average kernel at ``u = -v <= 0``, cancellation-free."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = v ** p * np.expm1(p * np.log1p(t / v))
    return out


def tail_bound(a: KernelSpec, b: KernelSpec, V: float) -> float:
    """Bound on ``|int_{-inf}^{-V} a b du|`` for moving-average kernels.

    The mean value theorem gives ``|g(-v)| <= |p| t v^(p-1)`` for ``v > 0``;
    the bound carries a factor 2 of safety.
    """
    pa, pb = a.p, b.p
    if pa == 0 or pb == 0:
        return 0.0
    e = pa + pb - 1.0
    return 2.0 * abs(pa * pb) * a.t * b.t * V ** e / (-e)


def _tail_start(a: KernelSpec, b: KernelSpec, target: float) -> float:
    pa, pb = a.p, b.p
    if pa == 0 or pb == 0:
        return 0.0
    e = pa + pb - 1.0
    const = 2.0 * abs(pa * pb) * a.t * b.t / (-e)
    return max((target / const) ** (1.0 / e), 4.0 * max(a.t, b.t))


# ------------------------------------------------------------ scalar route


def _panel_quad(f, lo, hi, q, singular_at, epsabs, local=None):
    """Integrate ``f`` on ``[lo, hi]`` with a power substitution at one end.

    ``q`` is a lower bound on the exponent of the endpoint singularity.  With
    ``x = w^(1/(1+q))`` the integrand ``x^e dx`` becomes ``w^((e-q)/(1+q)) dw``
    up to a constant, which is bounded for every ``e >= q``.  ``local(anchor,
    sign, x)`` evaluates the integrand at ``anchor + sign * x`` without
    rounding ``x`` away next to the anchor.
    """
    L = hi - lo
    if L <= 0:
        return 0.0, 0.0, 0
    if singular_at is None:
        val, err, info = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=1e-13,
                                        limit=200, full_output=1)[:3]
        return val, err, info["neval"]
    k = 1.0 / (1.0 + q)
    anchor, sign = (lo, 1.0) if singular_at == "lo" else (hi, -1.0)

    def g(w):
        x = w ** k
        if x <= 0:
            return 0.0
        val = local(anchor, sign, x) if local is not None else f(anchor + sign * x)
        return val * k * w ** (k - 1)

    val, err, info = integrate.quad(g, 0.0, L ** (1 + q), epsabs=epsabs, epsrel=1e-13,
                                    limit=200, full_output=1)[:3]
    return val, err, info["neval"]


def _graded_panels(lo, hi, near_lo, near_hi, scale):
    """Panel edges on ``[lo, hi]`` graded geometrically toward singular ends."""
    L = hi - lo
    if not (near_lo or near_hi):
        return [(lo, hi, None)]
    if near_lo and near_hi:
        mid = lo + 0.5 * L
        return (_graded_panels(lo, mid, True, False, scale)
                + _graded_panels(mid, hi, False, True, scale))
    inner = min(L, 0.25 * scale) if scale > 0 else L
    edges = [inner]
    while edges[-1] < L:
        edges.append(min(L, 4.0 * edges[-1]))
    out = []
    prev = 0.0
    for i, e in enumerate(edges):
        if near_lo:
            out.append((lo + prev, lo + e, "lo" if i == 0 else None))
        else:
            out.append((hi - e, hi - prev, "hi" if i == 0 else None))
        prev = e
    return out


def cross_integral_1d(a: KernelSpec, b: KernelSpec, region: Region1D = FULL_LINE,
                      tol: float = 1e-10, max_panels: int = 400) -> QuadratureResult:
    """Scalar reference value of ``int_region a(u) b(u) du``.

    Parameters
    ----------
    a, b : KernelSpec
    region : Region1D
        ``full-line`` integrates over the joint support.
    tol : float
        Absolute tolerance for the quadrature error and for the tail bound
        (which is kept below ``tol / 10``).
    max_panels : int
        Cap on the number of panels; exceeding it raises QuadratureError.
    """
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    lo_sup = -np.inf if (a.variant == "moving-average" and b.variant == "moving-average") else 0.0
    hi_sup = min(a.t, b.t)
    if region.kind == "interval":
        lo = max(region.bounds[0], lo_sup)
        hi = min(region.bounds[1], hi_sup)
    else:
        lo, hi = lo_sup, hi_sup
    if not lo < hi:
        return QuadratureResult(0.0, 0.0, 0.0, 0)

    def f(u):
        return float(kernel_eval(a, u) * kernel_eval(b, u))

    def f_neg(v):
        ga = _g_neg(a.t, a.p, v) if a.p != 0 else 0.0
        gb = _g_neg(b.t, b.p, v) if b.p != 0 else 0.0
        return float(ga * gb)

    def f_local(anchor, sign, x):
        # anchor >= 0 on this side, so only the (t - u)_+ factors are active
        va = float(_ppow((a.t - anchor) - sign * x, a.p))
        vb = float(_ppow((b.t - anchor) - sign * x, b.p))
        return va * vb

    q = min(a.p, b.p, a.p + b.p, 0.0)
    sing = sorted({0.0, a.t, b.t})
    panels = []
    trunc = 0.0
    neg_hi = min(hi, 0.0)
    if lo < 0 and not (a.p == 0 or b.p == 0):
        # negative half-line in v = -u
        V = _tail_start(a, b, tol / 10.0) if lo == -np.inf else -lo
        if lo == -np.inf:
            trunc = tail_bound(a, b, V)
        vlo, vhi = -neg_hi, V
        scale = min(a.t, b.t)
        v_panels = _graded_panels(vlo, min(vhi, max(vlo, 4 * max(a.t, b.t))),
                                  vlo == 0.0, False, scale)
        edge = v_panels[-1][1]
        while edge < vhi:
            nxt = min(vhi, 4.0 * edge)
            v_panels.append((edge, nxt, None))
            edge = nxt
        panels += [("neg", p) for p in v_panels]
    pos_lo = max(lo, 0.0)
    if pos_lo < hi:
        cuts = [pos_lo] + [s for s in sing if pos_lo < s < hi] + [hi]
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            others0 = [abs(s - c0) for s in sing if s != c0]
            others1 = [abs(s - c1) for s in sing if s != c1]
            scale = min(others0 + others1 + [c1 - c0])
            near0 = c0 in sing
            near1 = c1 in sing
            panels += [("pos", p) for p in _graded_panels(c0, c1, near0, near1, scale)]
    if len(panels) > max_panels:
        raise QuadratureError("panel budget exceeded", {"n_panels": len(panels)})

    vals, errs, nev = [], [], 0
    worst = None
    for side, (p0, p1, at) in panels:
        if side == "neg":
            v, e, n = _panel_quad(f_neg, p0, p1, q, at, tol / (10 * len(panels)))
        else:
            v, e, n = _panel_quad(f, p0, p1, q, at, tol / (10 * len(panels)), f_local)
        vals.append(v)
        errs.append(e)
        nev += n
        if worst is None or e > worst[0]:
            worst = (e, side, p0, p1)
    err = math.fsum(errs)
    if err > tol or trunc > tol / 10 * (1 + 1e-12):
        raise QuadratureError(
            "cross integral did not converge",
            {"abs_error": err, "truncation_bound": trunc, "worst_panel": list(worst[1:]),
             "worst_error": worst[0]},
        )
    return QuadratureResult(math.fsum(vals), err, trunc, nev)


# ------------------------------------------------------------- batch route


def _binom(p, j):
    return special.binom(p, j)


def _weighted_series(e, t, p, X):
    """``int_0^X x^e (t + x)^p dx`` for ``X <= t / 4`` by binomial series."""
    e, t, p, X = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (e, t, p, X)))
    r = X / t
    acc = np.zeros_like(X)
    term_pow = np.ones_like(X)
    for j in range(_SERIES_TERMS):
        acc = acc + _binom(p, j) * term_pow / (e + 1.0 + j)
        term_pow = term_pow * r
    with np.errstate(invalid="ignore", divide="ignore"):
        out = t ** p * X ** (e + 1.0) * acc
    return np.where(X > 0, out, 0.0)


def _gl_panels(func, edges):
    """Sum of Gauss-Legendre rules over consecutive edge columns.

    ``edges`` has shape (M, J+1) with non-decreasing rows; ``func`` maps an
    (M, n) array of nodes, together with a panel index, to integrand values.
    """
    M, J1 = edges.shape
    total = np.zeros(M)
    comp = np.zeros(M)
    for j in range(J1 - 1):
        lo = edges[:, j]
        w = edges[:, j + 1] - lo
        live = w > 0
        if not live.any():
            continue
        x = lo[live, None] + w[live, None] * _GL_X[None, :]
        val = np.zeros(M)
        val[live] = (func(x, live) * _GL_W[None, :]).sum(axis=1) * w[live]
        # Kahan summation in fixed panel order
        y = val - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def _geometric_edges(start, stop, ratio=2.0):
    """Rows ``start, start*ratio, ...`` clipped to ``stop`` (arrays of shape (M,))."""
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        nj = np.where(stop > start, np.ceil(np.log(stop / start) / np.log(ratio)), 0)
    J = int(nj.max(initial=0))
    k = np.arange(J + 1)
    edges = start[:, None] * ratio ** k[None, :]
    return np.minimum(edges, stop[:, None])


def _interval_part(pm, po, D, X):
    """``F(X) = int_0^X x^pm (x + D)^po dx`` vectorized (``D >= 0``)."""
    pm, po, D, X = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (pm, po, D, X)))
    out = np.zeros(X.shape)
    tiny = D <= 1e-14 * np.maximum(X, 1e-300)
    # coincident singular points: exact power
    if tiny.any():
        q = pm[tiny] + po[tiny]
        out[tiny] = X[tiny] ** (q + 1) / (q + 1)
    rest = ~tiny & (X > 0)
    if rest.any():
        pm_, po_, D_, X_ = pm[rest], po[rest], D[rest], X[rest]
        x0 = np.minimum(0.25 * D_, X_)
        inner = _weighted_series(pm_, D_, po_, x0)
        edges = _geometric_edges(x0, X_, 2.0)

        def f(x, live):
            return x ** pm_[live, None] * (x + D_[live, None]) ** po_[live, None]

        out[rest] = inner + _gl_panels(f, edges)
    return out


def _negative_part(ta, pa, tb, pb, V=None):
    """``int_0^V g_a(-v) g_b(-v) dv`` vectorized, ``V = inf`` by default."""
    ta, pa, tb, pb = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (ta, pa, tb, pb)))
    M = ta.shape
    out = np.zeros(M)
    live = (pa != 0) & (pb != 0)
    if V is not None:
        V = np.broadcast_to(np.asarray(V, dtype=float), M)
        live &= V > 0
    if not live.any():
        return out
    ta, pa, tb, pb = ta[live], pa[live], tb[live], pb[live]
    Vl = None if V is None else V[live]
    tmin = np.minimum(ta, tb)
    tmax = np.maximum(ta, tb)
    v1 = 0.25 * tmin
    v0 = 4.0 * tmax
    if Vl is not None:
        v1 = np.minimum(v1, Vl)
        v0 = np.minimum(v0, Vl)
    # innermost panel [0, v1]: expand every term around v = 0
    smooth_edges = np.stack([np.zeros_like(v1), v1], axis=1)

    def smooth(x, lv):
        return (ta[lv, None] + x) ** pa[lv, None] * (tb[lv, None] + x) ** pb[lv, None]

    inner = (_gl_panels(smooth, smooth_edges)
             - _weighted_series(pa, tb, pb, v1)
             - _weighted_series(pb, ta, pa, v1)
             + v1 ** (pa + pb + 1) / (pa + pb + 1))
    # middle panels [v1, v0]
    edges = _geometric_edges(v1, v0, 2.0)

    def mid(x, lv):
        return _g_neg(ta[lv, None], pa[lv, None], x) * _g_neg(tb[lv, None], pb[lv, None], x)

    middle = _gl_panels(mid, edges)
    res = inner + middle
    # tail [v0, V]
    if Vl is None:
        res = res + _tail_series(ta, pa, tb, pb, v0)
    else:
        more = Vl > v0
        if more.any():
            e2 = _geometric_edges(v0[more], Vl[more], 4.0)

            def far(x, lv, ta=ta[more], pa=pa[more], tb=tb[more], pb=pb[more]):
                return _g_neg(ta[lv, None], pa[lv, None], x) * _g_neg(tb[lv, None], pb[lv, None], x)

            res[more] += _gl_panels(far, e2)
    out[live] = res
    return out


def _tail_series(ta, pa, tb, pb, V):
    """``int_V^inf g_a(-v) g_b(-v) dv`` for ``V >= 4 max(ta, tb)``.

    Uses ``g(-v) = v^p sum_{j>=1} C(p, j) (t/v)^j`` and integrates termwise.
    """
    ra = ta / V
    rb = tb / V
    acc = np.zeros_like(V)
    ca = [_binom(pa, j) * ra ** j for j in range(1, _SERIES_TERMS + 1)]
    cb = [_binom(pb, k) * rb ** k for k in range(1, _SERIES_TERMS + 1)]
    s = pa + pb
    for j in range(_SERIES_TERMS):
        for k in range(_SERIES_TERMS - j):
            acc = acc + ca[j] * cb[k] / ((j + 1) + (k + 1) - s - 1.0)
    return V ** (s + 1.0) * acc


def cross_integral_batch(ta, ha, tb, hb, region: str = "full-line", lo=None, hi=None,
                         variant: str = "moving-average") -> np.ndarray:
    """Vectorized cross integrals for arrays of kernel pairs.

    Parameters
    ----------
    ta, ha, tb, hb : array_like
        Broadcastable arrays of times and Hurst exponents.
    region : {"full-line", "interval"}
        For ``interval`` the bounds ``lo``, ``hi`` (broadcastable, inside
        ``[0, inf)``) clip the nonnegative part of the support.
    variant : {"moving-average", "liouville"}
        Both factors share the variant.  Liouville kernels vanish below 0.

    Returns
    -------
    ndarray
        Integral values, accurate to roughly 1e-12 relative.
    """
    ta, ha, tb, hb = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (ta, ha, tb, hb)))
    shape = ta.shape
    ta, ha, tb, hb = (z.reshape(-1) for z in (ta, ha, tb, hb))
    pa, pb = ha - 0.5, hb - 0.5
    m = np.minimum(ta, tb)
    swap = tb < ta
    pm = np.where(swap, pb, pa)
    po = np.where(swap, pa, pb)
    D = np.abs(ta - tb)
    if region == "full-line":
        pos = _interval_part(pm, po, D, m)
        if variant == "moving-average":
            pos = pos + _negative_part(ta, pa, tb, pb)
        return pos.reshape(shape)
    if region != "interval":
        raise ArgumentError(f"unknown region {region!r}")
    lo = np.broadcast_to(np.asarray(lo, dtype=float), shape).reshape(-1)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), shape).reshape(-1)
    if np.any(lo < 0):
        raise ArgumentError("batched interval regions must lie in [0, inf)")
    u1 = np.minimum(hi, m)
    u0 = np.minimum(lo, u1)
    # x = m - u maps [u0, u1] to [m - u1, m - u0]
    return (_interval_part(pm, po, D, m - u0) - _interval_part(pm, po, D, m - u1)).reshape(shape)


# ---------------------------------------------------------- normalization


def normalization_closed_form(h: float) -> float:
    """``int g^2`` at ``t = 1`` in closed form (test oracle)."""
    return special.gamma(h + 0.5) ** 2 / (special.gamma(2 * h + 1) * math.sin(math.pi * h))


@lru_cache(maxsize=4096)
def normalization_constant(h: float, tol: float = 1e-12) -> float:
    """Variance of the unnormalized moving-average integral at ``t = 1``.

    With this constant ``c_h`` the one-dimensional covariance reads
    ``c_h (s^2h + t^2h - |t - s|^2h) / 2``.  It is calibrated once per ``h``
    by the scalar quadrature route and cached.
    """
    k = KernelSpec("moving-average", 1.0, float(h))
    return cross_integral_1d(k, k, FULL_LINE, tol=tol).value


def fbm_covariance(s, t, h):
    """Closed-form covariance ``c_h (|s|^2h + |t|^2h - |t-s|^2h) / 2``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    c = normalization_constant(float(h))
    return 0.5 * c * (np.abs(s) ** (2 * h) + np.abs(t) ** (2 * h) - np.abs(t - s) ** (2 * h))


# ------------------------------------------------- calculus inequalities


@dataclass
class InequalityReport:
    """Fitted constants of an integral inequality over a parameter sweep.

    ``ratios`` are ``lhs / shape`` per sweep point; ``fitted_constant`` is
    their maximum and ``stability`` is ``max / min``.  The report passes
    when every ratio is finite and positive and the stability is below
    ``limit``.
    """

    name: str
    sweep: list
    lhs: list
    shape: list
    ratios: list
    fitted_constant: float
    stability: float
    limit: float = 10.0
    case: str = ""
    extra: dict = None

    @property
    def passed(self) -> bool:
        r = np.asarray(self.ratios, dtype=float)
        return bool(np.all(np.isfinite(r)) and np.all(r > 0) and self.stability < self.limit)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _report(name, sweep, lhs, shape, case="", extra=None, limit=10.0):
    lhs = np.asarray(lhs, dtype=float)
    shape = np.asarray(shape, dtype=float)
    ratios = lhs / shape
    stab = float(ratios.max() / ratios.min()) if np.all(ratios > 0) else math.inf
    return InequalityReport(name, list(map(float, sweep)), lhs.tolist(), shape.tolist(),
                            ratios.tolist(), float(ratios.max()), stab, limit, case,
                            extra or {})


def _quad_geometric(f, lo, hi, start, tol):
    """``int_lo^hi f`` with panels growing geometrically from ``lo + start``."""
    edges = [lo]
    e = max(start, 1e-300)
    while lo + e < hi:
        edges.append(lo + e)
        e *= 4.0
    edges.append(hi)
    vals, errs = [], []
    for x0, x1 in zip(edges[:-1], edges[1:]):
        v, er = integrate.quad(f, x0, x1, epsabs=tol / len(edges), epsrel=1e-12, limit=200)
        vals.append(v)
        errs.append(er)
    err = math.fsum(errs)
    if err > tol:
        raise QuadratureError("geometric-panel quadrature did not converge", {"abs_error": err})
    return math.fsum(vals)


def double_integral_lhs(a: float, h: float, beta: float, eps: float, tol: float = 1e-10) -> float:
    """``int_eps^1 int_eps^1 [a + |s - r|^(2h)]^(-beta) ds dr``.

    The integrand depends on ``x = |s - r|`` only, so the square reduces to
    ``2 int_0^L (L - x) f(x) dx`` with ``L = 1 - eps``.
    """
    L = 1.0 - eps
    if beta == 0:
        return L * L

    def f(x):
        return 2.0 * (L - x) * (a + x ** (2 * h)) ** (-beta)

    scale = min(L, a ** (1.0 / (2 * h))) * 1e-3
    return _quad_geometric(f, 0.0, L, scale, tol)


def verify_double_integral_bound(h: float, delta: float, beta: float, a_values, eps: float,
                                 tol: float = 1e-10) -> InequalityReport:
    """Check ``LHS(a) <= c (a^-(beta - 1/delta) + 1)`` with a stable fitted ``c``.

    ``LHS`` is :func:`double_integral_lhs`.  Requires ``0 < h < 1`` and
    ``delta > 2h``.
    """
    if not 0 < h < 1 or not delta > 2 * h:
        raise ArgumentError("need 0 < h < 1 and delta > 2h")
    a_values = np.asarray(a_values, dtype=float)
    if np.any(a_values <= 0):
        raise ArgumentError("a values must be positive")
    lhs = [double_integral_lhs(a, h, beta, eps, tol) for a in a_values]
    shape = a_values ** (-(beta - 1.0 / delta)) + 1.0
    return _report("double-integral", a_values, lhs, shape,
                   extra={"h": h, "delta": delta, "beta": beta, "eps": eps})


def single_integral(A: float, B: float, alpha: float, beta: float, eta: float,
                    tol: float = 1e-12) -> float:
    """``J(A, B) = int_0^1 (A + t^alpha)^(-beta) (B + t)^(-eta) dt``."""
    if beta == 0 and eta == 0:
        return 1.0

    def f(t):
        return (A + t ** alpha) ** (-beta) * (B + t) ** (-eta)

    start = min(A ** (1.0 / alpha), B, 1.0) * 1e-3
    return _quad_geometric(f, 0.0, 1.0, start, tol * f(0.0) * 1e-2 + tol)


def verify_single_integral_bound(alpha: float, beta: float, eta: float, A, B,
                                 tol: float = 1e-12, c_pre: float = 1.0) -> InequalityReport:
    """Check the three-case bound shape of ``J(A, B)`` over a sweep of ``(A, B)``.

    Cases by ``alpha beta``: above 1 the shape is ``A^-(beta - 1/alpha) B^-eta``;
    equal to 1 it is ``B^-eta log(1 + B A^(-1/alpha))``; below 1 (with
    ``alpha beta + eta != 1``) it is ``B^-(alpha beta + eta - 1) + 1``.
    Sweep points violating ``A^(1/alpha) <= c_pre B`` are flagged in
    ``extra["precondition"]``; the largest ``A^(1/alpha) / B`` among
    passing points is reported.
    """
    if min(alpha, A if np.isscalar(A) else 1, B if np.isscalar(B) else 1) <= 0 \
            or beta < 0 or eta < 0:
        raise ArgumentError("parameters must be positive")
    A, B = np.broadcast_arrays(np.atleast_1d(np.asarray(A, dtype=float)),
                               np.atleast_1d(np.asarray(B, dtype=float)))
    ab = alpha * beta
    if abs(ab - 1) <= 1e-12:
        case = "critical"
        shape = B ** (-eta) * np.log1p(B * A ** (-1.0 / alpha))
    elif ab > 1:
        case = "supercritical"
        shape = A ** (-(beta - 1.0 / alpha)) * B ** (-eta)
    else:
        if abs(ab + eta - 1) <= 1e-12:
            raise ArgumentError("alpha beta + eta = 1 is excluded in the subcritical case")
        case = "subcritical"
        shape = B ** (-(ab + eta - 1)) + 1.0
    lhs = [single_integral(a, b, alpha, beta, eta, tol) for a, b in zip(A, B)]
    pre = A ** (1.0 / alpha) <= c_pre * B
    ratio = A ** (1.0 / alpha) / B
    rep = _report("single-integral", A, lhs, shape, case=case,
                  extra={"B": B.tolist(), "precondition": pre.tolist(),
                         "largest_ratio_in_region": float(ratio[pre].max()) if pre.any() else None,
                         "alpha": alpha, "beta": beta, "eta": eta})
    return rep


def _gauss_jacobi_right(m: int, b: float):
    """Nodes and weights on ``[0, 1]`` for the weight ``(1 - y)^(-b)``."""
    x, w = special.roots_jacobi(m, -b, 0.0)
    return 0.5 * (x + 1.0), w * 0.5 ** (1.0 - b)


def _graded_left(m: int, levels: int = 30):
    """Gauss-Legendre panels on ``[0, 1/2]`` graded geometrically toward 0."""
    edges = 0.5 * 0.5 ** np.arange(levels, -1, -1.0)
    edges = np.concatenate([[0.0], edges])
    xs, ws = [], []
    for x0, x1 in zip(edges[:-1], edges[1:]):
        xs.append(x0 + (x1 - x0) * _GL_X)
        ws.append((x1 - x0) * _GL_W)
    return np.concatenate(xs), np.concatenate(ws)


def simplex_remainder(b, zgrid, m: int = 24):
    """Tabulate ``F_j(z)`` for the ordered-simplex recursion.

    ``F_n(z) = z^(1-b_n) / (1-b_n)`` and
    ``F_j(z) = int_0^z (z - w)^(-b_j) F_{j+1}(w) dw`` for ``j = n-1..2``,
    where ``z`` is the remaining length.  Each level is computed by
    quadrature from a log-log cubic interpolant of the level below.

    Returns
    -------
    list of ndarray
        ``F_2..F_n`` on ``zgrid`` (index 0 is ``F_2`` when ``n >= 2``).
    """
    from scipy.interpolate import CubicSpline

    b = np.asarray(b, dtype=float)
    n = b.size
    z = np.asarray(zgrid, dtype=float)
    lz = np.log(z)
    table = {n: z ** (1 - b[-1]) / (1 - b[-1])}
    yl, wl = _graded_left(m)
    for j in range(n - 1, 1, -1):
        spl = CubicSpline(lz, np.log(table[j + 1]))
        s_lo = (spl(lz[1]) - spl(lz[0])) / (lz[1] - lz[0])

        def prev(w, spl=spl, s_lo=s_lo):
            lw = np.log(w)
            below = lw < lz[0]
            out = spl(np.where(below, lz[0], lw))
            out = np.where(below, out + s_lo * (lw - lz[0]), out)
            return np.exp(out)

        yr, wr = _gauss_jacobi_right(m, b[j - 1])
        # left half [0, 1/2]: smooth weight, F_{j+1} singular at y = 0
        left = ((1 - yl[None, :]) ** (-b[j - 1]) * prev(z[:, None] * yl[None, :])) @ wl
        # right half [1/2, 1] mapped from the Jacobi rule on [0, 1]
        y = 0.5 + 0.5 * yr
        right = (prev(z[:, None] * y[None, :]) @ wr) * 0.5 ** (1 - b[j - 1])
        table[j] = z ** (1 - b[j - 1]) * (left + right)
    return [table[j] for j in range(2, n + 1)]


def simplex_remainder_closed_form(b, z):
    """Closed-form ``F_j(z) = C_j z^(e_j)`` via Beta-function recursion (oracle)."""
    b = np.asarray(b, dtype=float)
    n = b.size
    e = 1.0 - b[-1]
    C = 1.0 / (1.0 - b[-1])
    out = {n: C * np.asarray(z) ** e}
    for j in range(n - 1, 1, -1):
        C = C * special.beta(1.0 - b[j - 1], e + 1.0)
        e = e + 1.0 - b[j - 1]
        out[j] = C * np.asarray(z) ** e
    return [out[j] for j in range(2, n + 1)]


def simplex_integral(a: float, r: float, b, s0: float, tol: float = 1e-10) -> float:
    """``int_{a <= s_1 <= ... <= s_n <= a + r} prod_j (s_j - s_{j-1})^(-b_j) ds``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = b.size
    if n == 1:
        return _quad_geometric(lambda x: (a + x - s0) ** (-b[0]), 0.0, r, r * 1e-6, tol)
    from scipy.interpolate import CubicSpline

    zgrid = r * np.geomspace(1e-10, 1.0, 161)
    F2 = simplex_remainder(b, zgrid)[0]
    spl = CubicSpline(np.log(zgrid), np.log(F2))
    E = a + r

    def f(s1):
        zz = E - s1
        if zz <= 0:
            return 0.0
        return (s1 - s0) ** (-b[0]) * float(np.exp(spl(max(np.log(zz), np.log(zgrid[0])))))

    # graded toward s1 = E where F_2 vanishes like a fractional power
    return _quad_geometric(lambda x: f(E - x), 0.0, r, r * 1e-8, tol)


def verify_simplex_integral_bound(a: float, r: float, b, s0: float,
                                  tol: float = 1e-10) -> InequalityReport:
    """Fit ``c`` in ``I <= c^n (n!)^((1/n) sum b - 1) r^(n - sum_{j>=2} b_j)``.

    The sweep is ``r, r/2, r/4``.  ``extra["r_exponent"]`` is the regression
    slope of ``log I`` against ``log r``.
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = b.size
    if n > 6:
        raise ArgumentError("nested quadrature is limited to n <= 6")
    if np.any(b < 0) or np.any(b >= 1):
        raise ArgumentError("b_j must lie in [0, 1)")
    if not 0 <= s0 <= a / 2:
        raise ArgumentError("s0 must lie in [0, a/2]")
    rs = np.array([r, r / 2, r / 4])
    vals = np.array([simplex_integral(a, x, b, s0, tol) for x in rs])
    fact = math.factorial(n) ** (b.sum() / n - 1.0)
    expo = n - b[1:].sum()
    cs = (vals / (fact * rs ** expo)) ** (1.0 / n)
    slope = float(np.polyfit(np.log(rs), np.log(vals), 1)[0])
    rep = _report("simplex-integral", rs, cs, np.ones_like(cs),
                  extra={"integrals": vals.tolist(), "r_exponent": slope,
                         "theoretical_exponent": float(expo), "a": a, "s0": s0,
                         "b": b.tolist()})
    return rep
