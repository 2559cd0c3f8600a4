"""Hurst functionals, the anisotropic metric and the level-set exponents.

A Hurst functional maps a point ``t`` of the positive orthant in ``R^N`` to a
vector ``(H_1(t), ..., H_N(t))`` in ``(0, 1)^N``.  Besides the evaluator it
carries the regularity metadata used throughout the package: a lower bound
``alpha``, per-axis upper bounds ``K`` and per-axis Lipschitz constants with
respect to :func:`rho_k`.
"""
from __future__ import annotations

import ast
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ArgumentError, ConsistencyError, ModelError

FAMILIES = ("constant", "affine-clamped", "smooth-sigmoid", "user-supplied")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class HurstFunctional:
    """Hurst functional with regularity metadata.

    Parameters
    ----------
    evaluator : callable
        Maps an array of points with shape ``(n, N)`` to Hurst values of the
        same shape.
    n_dims : int
        Number of time axes ``N``.
    alpha : float
        Declared lower bound for every ``H_l``.
    K : ndarray
        Declared per-axis upper bounds, each in ``(0, 1)``.
    lipschitz : ndarray
        Per-axis constants ``c_l`` for ``|H_l(t) - H_l(s)| <= c_l rho_K(s, t)``.
    family_tag : str
        One of :data:`FAMILIES`.
    separable : bool
        True when ``H_l`` depends on ``t_l`` only.  Enables factorized
        covariance and sampling paths.
    params : dict
        Family parameters, kept for serialization.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    n_dims: int
    alpha: float
    K: np.ndarray
    lipschitz: np.ndarray
    family_tag: str
    separable: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family_tag not in FAMILIES:
            raise ArgumentError(f"unknown family tag {self.family_tag!r}")
        K = np.asarray(self.K, dtype=float).reshape(-1)
        lip = np.asarray(self.lipschitz, dtype=float).reshape(-1)
        if K.size != self.n_dims or lip.size != self.n_dims:
            raise ArgumentError("K and lipschitz must have one entry per axis")
        if np.any(K <= 0) or np.any(K >= 1):
            raise ArgumentError("K entries must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ArgumentError("alpha must lie in (0, 1)")
        if np.any(lip < 0):
            raise ArgumentError("Lipschitz constants must be nonnegative")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "lipschitz", lip)

    @property
    def is_constant(self) -> bool:
        return self.family_tag == "constant"

    def __call__(self, points) -> np.ndarray:
        """Evaluate at one point (shape ``(N,)``) or many (shape ``(n, N)``)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts2 = np.atleast_2d(pts)
        if pts2.shape[1] != self.n_dims:
            raise ArgumentError(
                f"points have {pts2.shape[1]} coordinates, functional has {self.n_dims}"
            )
        vals = np.asarray(self.evaluator(pts2), dtype=float)
        vals = np.broadcast_to(vals, pts2.shape).copy()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0) or np.any(vals >= 1):
            bad = np.argwhere(~((vals > 0) & (vals < 1)))[0]
            raise ModelError(
                f"H_{bad[1] + 1} = {vals[bad[0], bad[1]]!r} at t = {pts2[bad[0]].tolist()} "
                "is outside (0, 1)"
            )
        return vals[0] if single else vals

    def axis_values(self, ell: int, coords) -> np.ndarray:
        """Evaluate ``H_ell`` along axis ``ell`` for a separable functional."""
        if not self.separable:
            raise ArgumentError("axis_values requires a separable functional")
        c = np.asarray(coords, dtype=float).reshape(-1)
        pts = np.ones((c.size, self.n_dims))
        pts[:, ell] = c
        return self(pts)[:, ell]

    def to_spec(self) -> dict:
        return {"family": self.family_tag, **self.params}


# ----------------------------------------------------------------- families


def constant(values: Sequence[float]) -> HurstFunctional:
    """Constant functional ``H(t) = values``."""
    h = np.asarray(values, dtype=float).reshape(-1)
    if np.any(h <= 0) or np.any(h >= 1):
        raise ModelError(f"constant Hurst values {h.tolist()} must lie in (0, 1)")
    hh = h.copy()
    return HurstFunctional(
        evaluator=lambda p: np.broadcast_to(hh, p.shape),
        n_dims=h.size,
        alpha=float(h.min()),
        K=h,
        lipschitz=np.zeros(h.size),
        family_tag="constant",
        separable=True,
        params={"values": h.tolist()},
    )


def affine_clamped(base, slope, lo=None, hi=None, K=None, alpha=None) -> HurstFunctional:
    """Affine functional ``H(t) = clip(base + slope @ t, lo, hi)``.

    Parameters
    ----------
    base : array_like, shape (N,)
    slope : array_like, shape (N, N) or (N,)
        A 1-D slope is read as a diagonal matrix.
    lo, hi : array_like, optional
        Clamp bounds; default 0.01 and 0.99.
    K, alpha : optional
        Declared bounds.  Default to ``hi`` and ``min(lo)``.

    Notes
    -----
    For ``|s - t| < 1`` every coordinate gap satisfies
    ``|s_j - t_j| <= |s_j - t_j|^{K_j}``, so ``c_l = sum_j |slope[l, j]|`` is
    a valid Lipschitz constant for the metric, whatever ``K`` is.
    """
    b = np.asarray(base, dtype=float).reshape(-1)
    n = b.size
    A = np.asarray(slope, dtype=float)
    if A.ndim == 1:
        A = np.diag(A)
    if A.shape != (n, n):
        raise ArgumentError("slope must be (N, N) or (N,)")
    lo_ = np.broadcast_to(np.asarray(0.01 if lo is None else lo, dtype=float), (n,)).copy()
    hi_ = np.broadcast_to(np.asarray(0.99 if hi is None else hi, dtype=float), (n,)).copy()
    if np.any(lo_ >= hi_):
        raise ArgumentError("clamp bounds need lo < hi")

    def ev(p, b=b.copy(), A=A.copy(), lo_=lo_, hi_=hi_):
        return np.clip(b + p @ A.T, lo_, hi_)

    offdiag = A - np.diag(np.diag(A))
    return HurstFunctional(
        evaluator=ev,
        n_dims=n,
        alpha=float(lo_.min()) if alpha is None else float(alpha),
        K=hi_ if K is None else np.asarray(K, dtype=float),
        lipschitz=np.abs(A).sum(axis=1),
        family_tag="affine-clamped",
        separable=bool(np.all(offdiag == 0)),
        params={"base": b.tolist(), "slope": A.tolist(), "lo": lo_.tolist(), "hi": hi_.tolist()},
    )


def smooth_sigmoid(lo, hi, weights, center, scale, K=None, alpha=None) -> HurstFunctional:
    """Sigmoid functional ``H_l(t) = lo_l + (hi_l - lo_l) / (1 + exp(-(w_l . t - c_l) / s_l))``.

    ``weights`` has shape ``(N, N)``; row ``l`` is ``w_l``.  A 1-D input is read
    as a diagonal.  The Lipschitz constant is the maximal slope
    ``(hi_l - lo_l) / (4 s_l) * sum_j |w_lj|``.
    """
    lo_ = np.asarray(lo, dtype=float).reshape(-1)
    n = lo_.size
    hi_ = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
    W = np.asarray(weights, dtype=float)
    if W.ndim == 1:
        W = np.diag(W)
    c = np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()
    s = np.broadcast_to(np.asarray(scale, dtype=float), (n,)).copy()
    if W.shape != (n, n) or np.any(s <= 0) or np.any(lo_ >= hi_):
        raise ArgumentError("invalid sigmoid parameters")

    def ev(p, lo_=lo_.copy(), hi_=hi_, W=W.copy(), c=c, s=s):
        z = (p @ W.T - c) / s
        return lo_ + (hi_ - lo_) * 0.5 * (1.0 + np.tanh(0.5 * z))

    offdiag = W - np.diag(np.diag(W))
    return HurstFunctional(
        evaluator=ev,
        n_dims=n,
        alpha=float(lo_.min()) if alpha is None else float(alpha),
        K=hi_ if K is None else np.asarray(K, dtype=float),
        lipschitz=(hi_ - lo_) / (4 * s) * np.abs(W).sum(axis=1),
        family_tag="smooth-sigmoid",
        separable=bool(np.all(offdiag == 0)),
        params={"lo": lo_.tolist(), "hi": hi_.tolist(), "weights": W.tolist(),
                "center": c.tolist(), "scale": s.tolist()},
    )


# Safe expression evaluation for user-supplied functionals.

_BINOPS = {
    ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
    ast.Div: np.divide, ast.Pow: np.power,
}
_UNOPS = {ast.UAdd: np.positive, ast.USub: np.negative}
_FUNCS = {
    "exp": np.exp, "log": np.log, "tanh": np.tanh, "sqrt": np.sqrt,
    "sin": np.sin, "cos": np.cos, "abs": np.abs,
    "sigmoid": lambda z: 0.5 * (1.0 + np.tanh(0.5 * z)),
    "min": np.minimum, "max": np.maximum, "clip": np.clip,
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _compile_expr(text: str, n_dims: int):
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ArgumentError(f"cannot parse Hurst expression {text!r}: {exc}") from None
    used = set()

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and not node.keywords:
            for a in node.args:
                check(a)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return
            if node.id.startswith("t") and node.id[1:].isdigit() \
                    and 1 <= int(node.id[1:]) <= n_dims:
                used.add(int(node.id[1:]) - 1)
                return
            raise ArgumentError(f"unknown name {node.id!r} in Hurst expression")
        else:
            raise ArgumentError(f"disallowed syntax {type(node).__name__} in Hurst expression")

    check(tree)

    def run(node, env):
        if isinstance(node, ast.Expression):
            return run(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](run(node.left, env), run(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](run(node.operand, env))
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](*[run(a, env) for a in node.args])
        if isinstance(node, ast.Constant):
            return float(node.value)
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        return env[node.id]

    return (lambda env: run(tree, env)), used


def user_supplied(expressions: Sequence[str], K, lipschitz, alpha) -> HurstFunctional:
    """Functional from per-axis expressions in the variables ``t1, ..., tN``.

    Allowed syntax: numbers, ``+ - * / **``, the constants ``pi`` and ``e`` and
    the functions ``exp log tanh sqrt sin cos abs sigmoid min max clip``.
    Regularity metadata must be declared since it cannot be derived.
    """
    n = len(expressions)
    compiled = [_compile_expr(e, n) for e in expressions]

    def ev(p):
        env = {f"t{j + 1}": p[:, j] for j in range(n)}
        out = np.empty_like(p)
        for ell, (fn, _) in enumerate(compiled):
            out[:, ell] = np.broadcast_to(fn(env), (p.shape[0],))
        return out

    separable = all(used <= {ell} for ell, (_, used) in enumerate(compiled))
    return HurstFunctional(
        evaluator=ev, n_dims=n, alpha=float(alpha),
        K=np.broadcast_to(np.asarray(K, dtype=float), (n,)),
        lipschitz=np.broadcast_to(np.asarray(lipschitz, dtype=float), (n,)),
        family_tag="user-supplied", separable=separable,
        params={"expressions": list(expressions), "K": np.broadcast_to(K, (n,)).tolist(),
                "lipschitz": np.broadcast_to(lipschitz, (n,)).tolist(), "alpha": float(alpha)},
    )


def from_spec(spec: dict) -> HurstFunctional:
    """Build a functional from a manifest mapping with a ``family`` key."""
    spec = dict(spec)
    fam = spec.pop("family", None)
    opt = {k: spec.pop(k) for k in ("K", "alpha") if k in spec}
    if fam == "constant":
        return constant(spec["values"])
    if fam == "affine-clamped":
        return affine_clamped(spec["base"], spec["slope"], spec.get("lo"), spec.get("hi"), **opt)
    if fam == "smooth-sigmoid":
        return smooth_sigmoid(spec["lo"], spec["hi"], spec["weights"], spec["center"],
                              spec["scale"], **opt)
    if fam == "user-supplied":
        return user_supplied(spec["expressions"], opt["K"], spec["lipschitz"], opt["alpha"])
    raise ArgumentError(f"unknown Hurst family {fam!r}")


# ------------------------------------------------------------------ metric


def rho_k(s, t, K) -> float:
    """Anisotropic distance ``sum_l |s_l - t_l|^{K_l}``."""
    s = np.asarray(s, dtype=float).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    K = np.asarray(K, dtype=float).reshape(-1)
    if not (s.size == t.size == K.size):
        raise ArgumentError(f"dimension mismatch: |s|={s.size}, |t|={t.size}, |K|={K.size}")
    return float(np.sum(np.abs(s - t) ** K))


def grid_points(interval, resolution) -> np.ndarray:
    """Row-major tensor grid with ``resolution[l]`` points on axis ``l``."""
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (iv.shape[0],))
    axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(iv, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass
class ConditionAReport:
    """Outcome of :func:`validate_condition_a`."""

    h_min: np.ndarray
    h_max: np.ndarray
    bounds_pass: np.ndarray
    lipschitz_ratio: np.ndarray
    lipschitz_pass: np.ndarray
    lipschitz_vacuous: bool
    n_pairs: int
    delta_a: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.bounds_pass) and np.all(self.lipschitz_pass))

    def to_dict(self) -> dict:
        return {
            "h_min": self.h_min.tolist(), "h_max": self.h_max.tolist(),
            "bounds_pass": self.bounds_pass.tolist(),
            "lipschitz_ratio": self.lipschitz_ratio.tolist(),
            "lipschitz_pass": self.lipschitz_pass.tolist(),
            "lipschitz_vacuous": self.lipschitz_vacuous,
            "n_pairs": self.n_pairs, "delta_a": self.delta_a, "passed": self.passed,
        }


def validate_condition_a(h: HurstFunctional, interval, resolution, delta_a=None,
                         tol: float = 1e-9) -> ConditionAReport:
    """Check the bound and Lipschitz clauses of the regularity condition on a grid.

    Parameters
    ----------
    h : HurstFunctional
    interval : array_like, shape (N, 2)
        Compact rectangle inside the open positive orthant.
    resolution : int or sequence of int
        Grid points per axis, at least 2.
    delta_a : float, optional
        Pair-distance cutoff (Euclidean).  Defaults to 10% of the diameter.
    tol : float
        Relative slack on both clauses.

    Raises
    ------
    ModelError
        If some sampled ``H_l(t)`` leaves ``(0, 1)``.
    """
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    if iv.shape[0] != h.n_dims or np.any(iv[:, 0] <= 0) or np.any(iv[:, 1] < iv[:, 0]):
        raise ArgumentError("interval must be a compact rectangle in (0, inf)^N")
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (h.n_dims,))
    if np.any(res < 2):
        raise ArgumentError("resolution must be at least 2 per axis")
    diam = float(np.linalg.norm(iv[:, 1] - iv[:, 0]))
    if delta_a is None:
        delta_a = 0.1 * diam
    pts = grid_points(iv, res)
    H = h(pts)
    h_min, h_max = H.min(axis=0), H.max(axis=0)
    bounds_pass = (h_min >= h.alpha * (1 - tol)) & (h_max <= h.K * (1 + tol))

    ratio = np.zeros(h.n_dims)
    n_pairs = 0
    chunk = max(1, 2_000_000 // max(1, len(pts)))
    for i0 in range(0, len(pts), chunk):
        a = pts[i0:i0 + chunk]
        ha = H[i0:i0 + chunk]
        dist = np.linalg.norm(a[:, None, :] - pts[None, :, :], axis=-1)
        mask = (dist < delta_a) & (dist > 0)
        if not mask.any():
            continue
        n_pairs += int(mask.sum())
        rho = np.sum(np.abs(a[:, None, :] - pts[None, :, :]) ** h.K, axis=-1)
        dh = np.abs(ha[:, None, :] - H[None, :, :])
        r = np.where(mask[..., None], dh / np.where(mask, rho, 1.0)[..., None], 0.0)
        ratio = np.maximum(ratio, r.reshape(-1, h.n_dims).max(axis=0))
    n_pairs //= 2
    vacuous = n_pairs == 0
    if vacuous:
        warnings.warn("no sampled pairs closer than delta_a; Lipschitz clause is vacuous",
                      RuntimeWarning, stacklevel=2)
    lip_pass = ratio <= h.lipschitz * (1 + tol) + tol * (h.lipschitz == 0)
    return ConditionAReport(h_min, h_max, bounds_pass, ratio, lip_pass, vacuous,
                            n_pairs, float(delta_a))


# --------------------------------------------------------------- exponents


@dataclass
class ExponentReport:
    """Exponent bookkeeping for a Hurst vector and a target dimension ``d``.

    ``tau`` is 1-based.  ``per_k_values`` and ``p`` refer to the sorted Hurst
    vector; ``order`` is the sorting permutation of the input.  In the empty
    and boundary regimes ``tau`` is None and ``beta`` is NaN.
    """

    tau: Optional[int]
    beta: float
    beta_min_formula: float
    per_k_values: list
    nu: Optional[float]
    p: Optional[list]
    regime: str
    order: list
    inverse_sum: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _check_h(H) -> np.ndarray:
    H = np.asarray(H, dtype=float).reshape(-1)
    if H.size == 0 or np.any(~np.isfinite(H)) or np.any(H <= 0) or np.any(H >= 1):
        raise ArgumentError(f"Hurst vector {H.tolist()} must have entries in (0, 1)")
    return H


def per_k_values(H_sorted, d) -> np.ndarray:
    """Candidates ``sum_{l<=k} H_k/H_l + N - k - H_k d`` for ``k = 1..N``."""
    Hs = np.asarray(H_sorted, dtype=float)
    n = Hs.size
    k = np.arange(1, n + 1)
    cums = np.cumsum(1.0 / Hs)
    return Hs * cums + n - k - Hs * d


def tau_and_beta(H, d: int) -> ExponentReport:
    """Select ``tau`` and evaluate the level-set exponent ``beta``.

    The vector is sorted ascending first.  ``tau`` is the unique index with
    ``sum_{l<tau} 1/H_l <= d < sum_{l<=tau} 1/H_l`` and
    ``beta = N - tau - H_tau d + sum_{l<=tau} H_tau / H_l``.  The minimum over
    all ``k`` of the same expression is reported separately; both agree in
    the existence regime.
    """
    H = _check_h(H)
    if int(d) != d or d < 1:
        raise ArgumentError("d must be a positive integer")
    order = np.argsort(H, kind="stable")
    Hs = H[order]
    n = Hs.size
    vals = per_k_values(Hs, d)
    bmin = float(vals.min())
    cums = np.cumsum(1.0 / Hs)
    total = float(cums[-1])
    base = dict(beta_min_formula=bmin, per_k_values=vals.tolist(), order=order.tolist(),
                inverse_sum=total)
    if abs(total - d) <= TIE_TOL:
        return ExponentReport(tau=None, beta=math.nan, nu=None, p=None, regime="boundary", **base)
    if total < d:
        return ExponentReport(tau=None, beta=math.nan, nu=None, p=None, regime="empty", **base)
    tau = int(np.argmax(cums > d + TIE_TOL)) + 1
    Ht = Hs[tau - 1]
    beta = n - tau - Ht * d + float(np.sum(Ht / Hs[:tau]))
    if abs(beta - bmin) > TIE_TOL * max(1.0, abs(beta)) * 10:
        raise ConsistencyError("beta disagrees with the min-formula",
                               {"H": H.tolist(), "d": d, "beta": beta, "min": bmin})
    p = [float(np.sum(Hs[i] / Hs)) for i in range(n)]
    return ExponentReport(tau=tau, beta=float(beta), nu=d / total, p=p, regime="exists", **base)


@dataclass
class SplitCertificate:
    """Witness for a ``tau``-term exponent split.

    Attributes
    ----------
    tau : int
    p : list
        ``p_1..p_tau`` (sorted-axis order), all finite and ``>= 1``.
    eta : float
        Slack used in the construction.
    lhs, rhs : float
        ``(1 - Delta) sum rho_l q / p_l`` and ``rho_tau q + tau - sum rho_tau / rho_l``.
    gamma : float
        The probe value in ``(0, alpha_tau / (2 tau))``.
    ell0 : int
        1-based index with ``rho_l0 q / p_l0 + 2 rho_l0 gamma < 1``.
    """

    tau: int
    p: list
    eta: float
    lhs: float
    rhs: float
    gamma: float
    ell0: int
    alpha_tau: float


@dataclass
class HolderSplit:
    """Explicit ``N``-term split plus a ``tau``-term certificate."""

    p: np.ndarray
    nu: float
    certificate: SplitCertificate
    order: np.ndarray


def tau_split(rho, q: float, delta: float, gamma: Optional[float] = None) -> SplitCertificate:
    """Construct ``tau`` exponents ``p_l >= 1`` meeting the split constraints.

    ``rho`` is taken in the given order (callers sort it).  The construction
    sets ``rho_l q / p_l = 1 - eta`` for ``l < tau`` and closes the budget
    ``sum 1/p_l = 1`` on the last index; ``eta`` is halved until every
    constraint holds.
    """
    r = np.asarray(rho, dtype=float).reshape(-1)
    if np.any(r <= 0) or np.any(r >= 1):
        raise ArgumentError("rho entries must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ArgumentError("delta must lie in (0, 1)")
    cums = np.cumsum(1.0 / r)
    if q < 0 or q >= cums[-1]:
        raise ArgumentError("q must lie in [0, sum 1/rho)")
    tau = int(np.argmax(cums > q)) + 1
    rt = r[tau - 1]
    rhs = rt * q + tau - float(np.sum(rt / r[:tau]))
    alpha_tau = float(cums[tau - 1] - q)

    def check(x):
        if np.any(x <= 0) or np.any(x > 1):
            return None
        lhs = (1 - delta) * float(np.sum(r[:tau] * q * x))
        ok = abs(x.sum() - 1) <= 1e-12 and np.all(r[:tau] * q * x < 1) and lhs <= rhs + 1e-15
        return lhs if ok else None

    eta, lhs, x = 0.5, None, None
    if tau == 1:
        x = np.ones(1)
        lhs, eta = check(x), 0.0
    else:
        for _ in range(200):
            x = np.empty(tau)
            x[:-1] = (1 - eta) / (r[:tau - 1] * q)
            x[-1] = 1 - x[:-1].sum()
            lhs = check(x)
            if lhs is not None:
                break
            eta *= 0.5
    if lhs is None:
        raise ConsistencyError("no feasible split found",
                               {"rho": r.tolist(), "q": q, "delta": delta, "tau": tau})
    if gamma is None:
        gamma = alpha_tau / (4 * tau)
    if not 0 < gamma < alpha_tau / (2 * tau):
        raise ArgumentError("gamma must lie in (0, alpha_tau / (2 tau))")
    slack = r[:tau] * q * x + 2 * r[:tau] * gamma
    hits = np.flatnonzero(slack < 1)
    if hits.size == 0:
        raise ConsistencyError("no index satisfies the probe inequality",
                               {"slack": slack.tolist(), "gamma": gamma})
    return SplitCertificate(tau=tau, p=(1 / x).tolist(), eta=eta, lhs=float(lhs), rhs=float(rhs),
                            gamma=float(gamma), ell0=int(hits[0]) + 1, alpha_tau=alpha_tau)


def holder_split(H_bar, d: int, delta: float, gamma: Optional[float] = None) -> HolderSplit:
    """Explicit exponents ``p_l = sum_i H_l / H_i`` and ``nu = d / sum_l 1/H_l``.

    Also returns a :class:`SplitCertificate` for the ``tau``-term split with
    ``q = d``.  ``p`` is reported in the input order.
    """
    H = _check_h(H_bar)
    total = float(np.sum(1.0 / H))
    if total <= d:
        raise ArgumentError(f"split needs sum 1/H > d, got {total} <= {d}")
    p = H * total
    order = np.argsort(H, kind="stable")
    cert = tau_split(H[order], float(d), delta, gamma)
    return HolderSplit(p=p, nu=d / total, certificate=cert, order=order)
