"""Local-time estimation from sampled paths.

The mollified local time of a path on a time set ``C`` is

    L_k(x, C) = sum_{t in C} (k / 2 pi)^(d/2) exp(-k |B(t) - x|^2 / 2) dt,

a probability-normalized Gaussian kernel with precision ``k`` summed over
grid cells of volume ``dt``.  Its integral over ``x`` equals the discrete
Lebesgue measure of ``C``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ArgumentError
from .fitting import ScalingFit, loglog_fit
from .hurst import HurstFunctional, grid_points, tau_and_beta
from .simulate import FieldSample, Grid

TIE_TOL = 1e-12


# ---------------------------------------------------------------- time sets


@dataclass(frozen=True)
class TimeSet:
    """Subset of the grid: ``all``, an axis-aligned ``box`` or a Euclidean ``ball``.

    ``box`` uses ``bounds`` of shape (N, 2); ``ball`` uses ``center`` and
    ``radius``.
    """

    kind: str = "all"
    bounds: Optional[tuple] = None
    center: Optional[tuple] = None
    radius: Optional[float] = None

    @staticmethod
    def box(bounds) -> "TimeSet":
        return TimeSet("box", bounds=tuple(map(tuple, np.asarray(bounds, float).reshape(-1, 2))))

    @staticmethod
    def ball(center, radius) -> "TimeSet":
        return TimeSet("ball", center=tuple(np.asarray(center, float).reshape(-1)),
                       radius=float(radius))

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean mask over the row-major grid points."""
        pts = grid.points
        iv = np.asarray(grid.interval)
        tol = 1e-12 * max(1.0, float(np.abs(iv).max()))
        if self.kind == "all":
            return np.ones(len(pts), dtype=bool)
        if self.kind == "box":
            b = np.asarray(self.bounds)
            if np.any(b[:, 0] < iv[:, 0] - tol) or np.any(b[:, 1] > iv[:, 1] + tol):
                raise ArgumentError("box time set leaves the grid")
            return np.all((pts >= b[:, 0] - tol) & (pts <= b[:, 1] + tol), axis=1)
        if self.kind == "ball":
            c = np.asarray(self.center)
            if np.any(c - self.radius < iv[:, 0] - tol) or np.any(c + self.radius > iv[:, 1] + tol):
                raise ArgumentError("ball exits the grid")
            return np.linalg.norm(pts - c, axis=1) <= self.radius + tol
        raise ArgumentError(f"unknown time set kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def cell_volume(grid: Grid) -> float:
    return float(np.prod([s if s > 0 else 1.0 for s in grid.spacing]))


# --------------------------------------------------------------- existence


@dataclass
class ExistenceReport:
    """Existence verdict over a refinement grid."""

    verdict: str
    H_bar: list
    min_inverse_sum: float
    max_inverse_sum: float
    bar_condition: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def existence_predicate(h: HurstFunctional, interval, d: int, resolution=33) -> ExistenceReport:
    """Classify the square-integrable local-time regime on ``interval``.

    ``exists-L2`` when ``sum_l 1/H_l(t) > d`` at every grid point, ``none``
    when it is below ``d`` somewhere, ``boundary`` otherwise.  ``H_bar`` is the
    per-axis maximum; ``bar_condition`` reports ``d < sum_l 1/H_bar_l``.
    """
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    pts = grid_points(iv, resolution)
    H = h(pts)
    inv = np.sum(1.0 / H, axis=1)
    lo, hi = float(inv.min()), float(inv.max())
    if lo > d + TIE_TOL:
        verdict = "exists-L2"
    elif lo < d - TIE_TOL:
        verdict = "none"
    else:
        verdict = "boundary"
    hbar = H.max(axis=0)
    return ExistenceReport(verdict, hbar.tolist(), lo, hi, bool(np.sum(1.0 / hbar) > d))


# -------------------------------------------------------------- estimators


@dataclass
class LocalTimeEstimate:
    """Mollified local time on a tensor grid of spatial bins."""

    x_grid: list
    time_set: TimeSet
    k: float
    values: np.ndarray
    quadrature_weight: float
    n_times: int

    @property
    def bin_volume(self) -> float:
        return float(np.prod([_spacing(ax) for ax in self.x_grid]))

    @property
    def time_measure(self) -> float:
        return self.n_times * self.quadrature_weight

    def mass(self) -> float:
        return float(self.values.sum() * self.bin_volume)


def _spacing(ax):
    ax = np.asarray(ax)
    return float(ax[1] - ax[0]) if ax.size > 1 else 1.0


def _as_axes(x_grid, d):
    if isinstance(x_grid, np.ndarray) and x_grid.ndim == 1 and d == 1:
        return [x_grid]
    axes = [np.asarray(a, dtype=float) for a in x_grid]
    if len(axes) != d:
        raise ArgumentError("x_grid needs one axis per field component")
    return axes


def default_k(field: FieldSample) -> float:
    """Precision with ``k^(-1/2) = 2 * median |increment|`` over adjacent cells."""
    V = field.values.reshape(field.grid.shape + (field.d,))
    incs = []
    for ax in range(field.grid.n_dims):
        if V.shape[ax] > 1:
            dv = np.diff(V, axis=ax)
            incs.append(np.linalg.norm(dv, axis=-1).ravel())
    med = float(np.median(np.concatenate(incs)))
    if med <= 0:
        raise ArgumentError("field has no increments; pass k explicitly")
    return 1.0 / (2.0 * med) ** 2


def default_x_grid(values: np.ndarray, k: float, per_sigma: int = 4, reach: float = 10.0):
    """Per-component bins covering the range plus ``reach`` kernel widths."""
    sig = k ** -0.5
    step = sig / per_sigma
    axes = []
    for c in range(values.shape[1]):
        lo = values[:, c].min() - reach * sig
        hi = values[:, c].max() + reach * sig
        n = int(math.ceil((hi - lo) / step)) + 1
        axes.append(lo + step * np.arange(n))
    return axes


def _kernel_matrix(b, x, k):
    return math.sqrt(k / (2 * math.pi)) * np.exp(-0.5 * k * (b[:, None] - x[None, :]) ** 2)


def mollified_local_time(field: FieldSample, time_set: TimeSet = TimeSet(), x_grid=None,
                         k: Optional[float] = None) -> LocalTimeEstimate:
    """Evaluate ``L_k(x, C)`` on the tensor grid of spatial bins.

    Parameters
    ----------
    field : FieldSample
    time_set : TimeSet
    x_grid : array or list of arrays, optional
        Uniform bin centers per component; defaults to
        :func:`default_x_grid`.
    k : float, optional
        Kernel precision; defaults to :func:`default_k`.
    """
    if k is None:
        k = default_k(field)
    if not k > 0:
        raise ArgumentError("k must be positive")
    m = time_set.mask(field.grid)
    if not m.any():
        raise ArgumentError("time set contains no grid points")
    B = field.values[m]
    if x_grid is None:
        x_grid = default_x_grid(B, k)
    axes = _as_axes(x_grid, field.d)
    dt = cell_volume(field.grid)
    mats = [_kernel_matrix(B[:, c], axes[c], k) for c in range(field.d)]
    if field.d == 1:
        vals = mats[0].sum(axis=0) * dt
    else:
        letters = "abcdefghij"[:field.d]
        expr = ",".join("t" + l for l in letters) + "->" + letters
        vals = np.einsum(expr, *mats) * dt
    return LocalTimeEstimate(axes, time_set, float(k), vals, dt, int(m.sum()))


def local_time_at(field: FieldSample, x, time_set: TimeSet, k: float) -> float:
    """``L_k(x, C)`` at a single level ``x``."""
    m = time_set.mask(field.grid)
    if not m.any():
        raise ArgumentError("time set contains no grid points")
    B = field.values[m]
    x = np.asarray(x, dtype=float).reshape(-1)
    r2 = np.sum((B - x) ** 2, axis=1)
    return float((k / (2 * math.pi)) ** (field.d / 2) * np.exp(-0.5 * k * r2).sum()
                 * cell_volume(field.grid))


def builtin_test_function(spec: dict):
    """Built-in test functions on ``R^d``.

    ``{"kind": "constant"}``, ``{"kind": "box", "lo": [...], "hi": [...]}`` or
    ``{"kind": "gaussian", "center": [...], "width": w}``.
    """
    kind = spec.get("kind")
    if kind == "constant":
        return lambda y: np.ones(y.shape[0])
    if kind == "box":
        lo = np.asarray(spec["lo"], float)
        hi = np.asarray(spec["hi"], float)
        return lambda y: np.all((y >= lo) & (y <= hi), axis=1).astype(float)
    if kind == "gaussian":
        c = np.asarray(spec["center"], float)
        w = float(spec["width"])
        return lambda y: np.exp(-0.5 * np.sum((y - c) ** 2, axis=1) / w ** 2)
    raise ArgumentError(f"unknown test function {kind!r}")


def occupation_identity_residual(field: FieldSample, f: dict, time_set: TimeSet = TimeSet(),
                                 k: Optional[float] = None, x_grid=None,
                                 floor: float = 1e-12) -> float:
    """Relative gap between ``int f(B(t)) dt`` and ``int f(x) L_k(x) dx``.

    The left side is summed directly along the path; the right side uses the
    spatial bin grid.
    """
    est = mollified_local_time(field, time_set, x_grid, k)
    fn = builtin_test_function(f)
    m = time_set.mask(field.grid)
    lhs = float(fn(field.values[m]).sum() * est.quadrature_weight)
    mesh = np.meshgrid(*est.x_grid, indexing="ij")
    X = np.stack([g.ravel() for g in mesh], axis=1)
    rhs = float((fn(X) * est.values.ravel()).sum() * est.bin_volume)
    return abs(lhs - rhs) / max(abs(lhs), floor)


# ------------------------------------------------------------ scaling fits


def _as_array(ensemble):
    if isinstance(ensemble, np.ndarray):
        return ensemble
    return np.stack([s.values for s in ensemble])


def ball_scaling_fit(ensemble, h: HurstFunctional, t, radii, grid: Grid,
                     x_mode: Union[str, float] = "random", k_rule: Union[str, float] = "default",
                     min_paths: int = 30) -> ScalingFit:
    """Median-over-paths ``L_k(x, U(t, r))`` against ``r``.

    Parameters
    ----------
    ensemble : list of FieldSample or ndarray (R, n_points, d)
    t : point
        Ball center.
    radii : decreasing radii
    x_mode : "random" or float or vector
        ``random`` uses the level ``B(t)`` of each path.
    k_rule : "default" or float
        ``default`` applies :func:`default_k` per path.

    The theoretical exponent is ``beta`` at ``H(t)``.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise ArgumentError("a scaling fit needs at least two radii")
    if np.any(np.diff(radii) >= 0):
        raise ArgumentError("radii must be decreasing")
    X = _as_array(ensemble)
    if X.shape[0] < min_paths:
        raise ArgumentError(f"ensemble needs at least {min_paths} paths")
    d = X.shape[2]
    t = np.asarray(t, dtype=float).reshape(-1)
    pts = grid.points
    ic = int(np.argmin(np.linalg.norm(pts - t, axis=1)))
    sets = [TimeSet.ball(t, r) for r in radii]
    masks = [s.mask(grid) for s in sets]
    dt = cell_volume(grid)
    vals = np.empty((X.shape[0], radii.size))
    for p in range(X.shape[0]):
        fs = FieldSample(grid, d, X[p], 0, "cholesky")
        k = default_k(fs) if k_rule == "default" else float(k_rule)
        x = X[p, ic] if isinstance(x_mode, str) and x_mode == "random" \
            else np.broadcast_to(np.asarray(x_mode, float), (d,))
        r2 = np.sum((X[p] - x) ** 2, axis=1)
        w = (k / (2 * math.pi)) ** (d / 2) * np.exp(-0.5 * k * r2) * dt
        for j, m in enumerate(masks):
            vals[p, j] = w[m].sum()
    med = np.median(vals, axis=0)
    beta = tau_and_beta(h(t), d).beta
    return loglog_fit(radii, med, theoretical=beta)


def moment_scaling_fit(ensemble, h: HurstFunctional, x, side_lengths, grid: Grid, n: int = 2,
                       a=None, k_rule: Union[str, float] = "default") -> ScalingFit:
    """Monte Carlo ``E[L_k(x, T)^n]`` for cubes ``T = [a, a + s]`` against ``s``.

    The theoretical exponent is ``n * beta`` with ``beta`` at ``H(a)``.
    Only ``n`` in ``{2, 4}`` is supported.
    """
    if n not in (2, 4):
        raise ArgumentError("moment order must be 2 or 4")
    s = np.asarray(side_lengths, dtype=float)
    if s.size < 2:
        raise ArgumentError("a scaling fit needs at least two side lengths")
    X = _as_array(ensemble)
    d = X.shape[2]
    iv = np.asarray(grid.interval)
    a = iv[:, 0] if a is None else np.asarray(a, dtype=float).reshape(-1)
    masks = [TimeSet.box(np.stack([a, a + si], axis=1)).mask(grid) for si in s]
    dt = cell_volume(grid)
    x = np.broadcast_to(np.asarray(x, float), (d,))
    mom = np.zeros(s.size)
    for p in range(X.shape[0]):
        fs = FieldSample(grid, d, X[p], 0, "cholesky")
        k = default_k(fs) if k_rule == "default" else float(k_rule)
        r2 = np.sum((X[p] - x) ** 2, axis=1)
        w = (k / (2 * math.pi)) ** (d / 2) * np.exp(-0.5 * k * r2) * dt
        for j, m in enumerate(masks):
            mom[j] += w[m].sum() ** n
    mom /= X.shape[0]
    beta = tau_and_beta(h(a), d).beta
    return loglog_fit(s, mom, theoretical=n * beta)
