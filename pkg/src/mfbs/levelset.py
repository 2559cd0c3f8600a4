"""Level-set extraction and box-counting dimension estimates.

Cells are the grid rectangles between neighbouring grid points; a cell set
is stored as a boolean array of shape ``resolution - 1`` per axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ArgumentError
from .fitting import loglog_fit
from .hurst import HurstFunctional, grid_points, tau_and_beta
from .simulate import FieldSample, Grid, simulate_ensemble

TIE_TOL = 1e-12
RULES = ("sign-change", "threshold")


@dataclass
class LevelSetCells:
    """Cells of ``grid`` flagged as meeting the level ``level``."""

    level: np.ndarray
    grid: Grid
    cells: np.ndarray
    rule: str
    c_thr: Optional[float] = None

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    def indices(self) -> np.ndarray:
        """Multi-indices of the flagged cells, shape ``(count, N)``."""
        return np.argwhere(self.cells)


@dataclass
class DimensionReport:
    """Box-counting summary.

    For a single cell set ``slope`` is its fitted dimension.  Ensemble
    reports carry the per-path ``slopes`` and set ``slope`` to their median;
    empty-regime reports carry ``thresholds`` and ``nonempty_fraction``.
    """

    scales: list
    counts: list
    slope: float
    ci_halfwidth: float
    theoretical: float
    regime: str
    slopes: list = field(default_factory=list)
    t_star: Optional[list] = None
    thresholds: list = field(default_factory=list)
    nonempty_fraction: list = field(default_factory=list)
    sampler: Optional[str] = None

    def within(self, tol: float) -> bool:
        return bool(abs(self.slope - self.theoretical) <= tol)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# -------------------------------------------------------------- extraction


def _corner_reduce(A: np.ndarray, op) -> np.ndarray:
    """Reduce ``op`` over the ``2^N`` corners of every cell (leading N axes)."""
    n = A.ndim
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        A = op(A[tuple(lo)], A[tuple(hi)])
    return A


def cell_centers(grid: Grid) -> np.ndarray:
    """Row-major centres of the grid cells, shape ``(n_cells, N)``."""
    axes = [0.5 * (a[1:] + a[:-1]) for a in grid.axes()]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def extract_level_set(field: FieldSample, x=0.0, rule: str = "sign-change",
                      c_thr: float = 1.0, h: Optional[HurstFunctional] = None) -> LevelSetCells:
    """Cells of the grid that meet ``{t : B(t) = x}``.

    Parameters
    ----------
    field : FieldSample
    x : float or vector
        Level in ``R^d``.
    rule : {"sign-change", "threshold"}
        ``sign-change`` (d = 1 only) keeps a cell when ``B - x`` takes both
        signs, or zero, on its corners.  ``threshold`` keeps a cell when the
        smallest corner distance ``|B - x|`` is at most
        ``c_thr * diam^min_l H_l(centre)``.
    h : HurstFunctional
        Needed by the threshold rule.
    """
    if rule not in RULES:
        raise ArgumentError(f"unknown rule {rule!r}")
    if min(field.grid.resolution) < 2:
        raise ArgumentError("level-set extraction needs at least two points per axis")
    x = np.broadcast_to(np.asarray(x, dtype=float), (field.d,)).copy()
    V = field.values.reshape(field.grid.shape + (field.d,)) - x
    if rule == "sign-change":
        if field.d != 1:
            raise ArgumentError("the sign-change rule needs d = 1; use the threshold rule")
        D = V[..., 0]
        cells = (_corner_reduce(D, np.minimum) <= 0) & (_corner_reduce(D, np.maximum) >= 0)
        return LevelSetCells(x, field.grid, cells, rule)
    if h is None:
        raise ArgumentError("the threshold rule needs the Hurst functional")
    if not c_thr > 0:
        raise ArgumentError("c_thr must be positive")
    dist = _corner_reduce(np.linalg.norm(V, axis=-1), np.minimum)
    diam = float(np.linalg.norm(field.grid.spacing))
    expo = h(cell_centers(field.grid)).min(axis=1).reshape(dist.shape)
    cells = dist <= c_thr * diam ** expo
    return LevelSetCells(x, field.grid, cells, rule, float(c_thr))


# ------------------------------------------------------------ box counting


def default_scales(shape) -> list:
    """Dyadic box sides ``1, 2, 4, ...`` keeping at least four boxes per axis."""
    n = min(shape)
    scales, s = [], 1
    while math.ceil(n / s) >= 4:
        scales.append(s)
        s *= 2
    return scales


def count_boxes(cells: np.ndarray, s: int) -> int:
    """Occupied boxes of side ``s`` cells (boxes anchored at index 0)."""
    if s == 1:
        return int(cells.sum())
    pad = [(0, (-n) % s) for n in cells.shape]
    A = np.pad(cells, pad)
    shp = []
    for n in A.shape:
        shp += [n // s, s]
    A = A.reshape(shp)
    return int(A.any(axis=tuple(range(1, 2 * cells.ndim, 2))).sum())


def box_counting(cells, scales: Optional[Sequence[int]] = None,
                 theoretical: float = math.nan) -> DimensionReport:
    """Slope of ``log count`` against ``log(1 / side)`` over dyadic sides.

    ``cells`` is a :class:`LevelSetCells` or a boolean array.  Sides are in
    cell units; the finest side must be one cell.
    """
    C = cells.cells if isinstance(cells, LevelSetCells) else np.asarray(cells, dtype=bool)
    scales = default_scales(C.shape) if scales is None else [int(s) for s in scales]
    if len(scales) < 4:
        raise ArgumentError("box counting needs at least four scales")
    if scales[0] != 1:
        raise ArgumentError("the finest scale must be one cell")
    if any(b != 2 * a for a, b in zip(scales, scales[1:])):
        raise ArgumentError("scales must be consecutive dyadic sides")
    counts = [count_boxes(C, s) for s in scales]
    if counts[0] == 0:
        return DimensionReport(scales, counts, math.nan, math.nan, theoretical, "empty")
    fit = loglog_fit(scales, counts, inverse=True)
    return DimensionReport(scales, counts, fit.slope, fit.ci_halfwidth, theoretical, "exists")


# -------------------------------------------------------------- experiments


def find_t_star(h: HurstFunctional, interval, resolution=33) -> np.ndarray:
    """Grid maximizer of ``sum_l 1 / H_l(t)``; ties go to the first row-major point."""
    pts = grid_points(interval, resolution)
    s = np.sum(1.0 / h(pts), axis=1)
    i = int(np.flatnonzero(s >= s.max() - TIE_TOL)[0])
    return pts[i]


def _median_ci(values, level=0.95) -> float:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return math.nan
    # Normal-approximation standard error of the median.
    se = 1.2533 * v.std(ddof=1) / math.sqrt(v.size)
    return float(stats.norm.ppf(0.5 + level / 2) * se)


def dimension_experiment(h: HurstFunctional, interval, d: int, x=0.0, n_paths: int = 30,
                         resolution=512, seed: int = 0, sampler: str = "auto",
                         c_thr: float = 1.0, n_halvings: int = 7,
                         validation_resolution=33, ensemble=None) -> DimensionReport:
    """Level-set dimension against the exponent at ``t*``.

    In the existence regime every path is box-counted (sign-change rule for
    ``d = 1``, threshold rule otherwise) and ``slope`` is the ensemble
    median.  In the empty regime the threshold constant runs through
    ``c_thr / 2^j`` and the fraction of paths with a non-empty cell set is
    recorded per step.

    ``ensemble`` may pass precomputed paths of shape ``(R, n_points, d)``.
    """
    t_star = find_t_star(h, interval, validation_resolution)
    rep = tau_and_beta(h(t_star), d)
    grid = Grid(interval, resolution)
    if rep.regime == "boundary":
        return DimensionReport([], [], math.nan, math.nan, math.nan, "boundary",
                               t_star=t_star.tolist())
    if ensemble is None:
        ensemble, tag = simulate_ensemble(h, grid, n_paths, d, seed, sampler)
    else:
        ensemble, tag = np.asarray(ensemble), (sampler if sampler != "auto" else "cholesky")
    if rep.regime == "empty":
        thr = [c_thr / 2 ** j for j in range(n_halvings + 1)]
        hits = np.zeros(len(thr))
        for X in ensemble:
            fs = FieldSample(grid, d, X, seed, tag)
            for j, c in enumerate(thr):
                if extract_level_set(fs, x, "threshold", c, h).count == 0:
                    break
                hits[j] += 1
        return DimensionReport([], [], math.nan, math.nan, math.nan, "empty",
                               t_star=t_star.tolist(), thresholds=thr,
                               nonempty_fraction=(hits / len(ensemble)).tolist(), sampler=tag)
    rule = "sign-change" if d == 1 else "threshold"
    slopes, counts, scales = [], [], []
    for X in ensemble:
        fs = FieldSample(grid, d, X, seed, tag)
        r = box_counting(extract_level_set(fs, x, rule, c_thr, h))
        slopes.append(r.slope)
        counts.append(r.counts)
        scales = r.scales
    med_counts = np.median(np.asarray(counts), axis=0).tolist()
    return DimensionReport(scales, med_counts, float(np.nanmedian(slopes)), _median_ci(slopes),
                           rep.beta, "exists", slopes=slopes, t_star=t_star.tolist(),
                           sampler=tag)


@dataclass
class LocalDimensionMap:
    """Theoretical and empirical window dimensions with their rank agreement."""

    centers: list
    theoretical: list
    empirical: list
    per_path: list
    spearman: float
    window: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def window_centers(interval, window: float) -> np.ndarray:
    """Centres of the windows of side ``window`` that tile ``interval``."""
    iv = np.asarray(interval, dtype=float).reshape(-1, 2)
    per_axis = []
    for lo, hi in iv:
        m = (hi - lo) / window
        k = int(round(m))
        if k < 1 or abs(m - k) > 1e-9 * max(1.0, m):
            raise ArgumentError("window side must divide every interval side")
        per_axis.append(lo + window * (np.arange(k) + 0.5))
    mesh = np.meshgrid(*per_axis, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _window_slices(grid: Grid, center, window):
    sl = []
    for ax, c in zip(grid.axes(), center):
        lo, hi = c - window / 2, c + window / 2
        tol = 1e-9 * window
        if lo < ax[0] - tol or hi > ax[-1] + tol:
            raise ArgumentError("window lies partially outside the interval")
        idx = np.flatnonzero((ax >= lo - tol) & (ax <= hi + tol))
        sl.append(slice(int(idx[0]), int(idx[-1]) + 1))
    return tuple(sl)


def local_dimension_map(h: HurstFunctional, interval, d: int, window: float, resolution,
                        n_paths: int = 30, seed: int = 0, sampler: str = "auto",
                        c_thr: float = 1.0, centers=None, ensemble=None) -> LocalDimensionMap:
    """Per-window box-count slopes at the random level ``B(centre)``.

    Each window is a cube of side ``window`` around its centre; by default
    the windows tile ``interval``.  ``empirical`` holds per-window medians
    over paths and ``spearman`` their rank correlation with the theoretical
    exponents.
    """
    grid = Grid(interval, resolution)
    C = window_centers(interval, window) if centers is None else np.atleast_2d(
        np.asarray(centers, dtype=float))
    reps = [tau_and_beta(hc, d) for hc in h(C)]
    if any(r.regime != "exists" for r in reps):
        raise ArgumentError("every window centre must be in the existence regime")
    theo = [r.beta for r in reps]
    slices = [_window_slices(grid, c, window) for c in C]
    pts = grid.points
    near = [int(np.argmin(np.linalg.norm(pts - c, axis=1))) for c in C]
    if ensemble is None:
        ensemble, tag = simulate_ensemble(h, grid, n_paths, d, seed, sampler)
    else:
        tag = sampler if sampler != "auto" else "cholesky"
    rule = "sign-change" if d == 1 else "threshold"
    per_path = np.empty((len(ensemble), len(C)))
    for p, X in enumerate(np.asarray(ensemble)):
        V = X.reshape(grid.shape + (d,))
        for w, (sl, i) in enumerate(zip(slices, near)):
            sub_axes = [a[s] for a, s in zip(grid.axes(), sl)]
            sub = Grid([[a[0], a[-1]] for a in sub_axes], [a.size for a in sub_axes])
            fs = FieldSample(sub, d, V[sl].reshape(-1, d), seed, tag)
            cells = extract_level_set(fs, X[i], rule, c_thr, h)
            per_path[p, w] = box_counting(cells).slope
    emp = np.nanmedian(per_path, axis=0)
    ranked = len(C) > 1 and np.ptp(theo) > 0 and np.nanmax(emp) > np.nanmin(emp)
    rho = float(stats.spearmanr(theo, emp).statistic) if ranked else math.nan
    return LocalDimensionMap(C.tolist(), theo, emp.tolist(), per_path.tolist(), rho, float(window))
