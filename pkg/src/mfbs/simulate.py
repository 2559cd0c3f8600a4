"""Sample paths of the sheet on tensor grids.

Two independent mechanisms are provided:

* :func:`sample_cholesky` draws exactly from the Gaussian law using the
  Cholesky factor of :func:`mfbs.gaussian.covariance_b`.  Separable
  functionals use per-axis factors (the covariance is a Kronecker
  product).
* :func:`sample_whitenoise` discretizes the moving-average Wiener integral
  on a lattice of noise cells.  Kernel weights are exact cell averages, so
  the discretized field is the projection of the continuum field onto
  piecewise-constant integrands and the variance defect per point is a
  rigorous error budget.

Random streams are derived with ``SeedSequence(seed, spawn_key=(replicate,
component))`` so any replicate can be regenerated on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernel
from .errors import ArgumentError, ConfigurationError, SizeError
from .gaussian import cholesky_jitter, covariance_b
from .hurst import HurstFunctional, grid_points

DENSE_CAP = 4096
SAMPLER_TAGS = {"cholesky": 1, "white-noise": 2, "covariance": 3}


@dataclass(frozen=True)
class Grid:
    """Tensor grid on ``[a, b]`` with ``resolution[l]`` points on axis ``l``."""

    interval: tuple
    resolution: tuple

    def __post_init__(self):
        iv = np.asarray(self.interval, dtype=float).reshape(-1, 2)
        res = tuple(int(r) for r in np.broadcast_to(np.asarray(self.resolution), (iv.shape[0],)))
        if np.any(iv[:, 0] <= 0) or np.any(iv[:, 1] < iv[:, 0]):
            raise ArgumentError("grid interval must satisfy 0 < a <= b per axis")
        if min(res) < 1:
            raise ArgumentError("resolution must be positive")
        object.__setattr__(self, "interval", tuple(map(tuple, iv.tolist())))
        object.__setattr__(self, "resolution", res)

    @property
    def n_dims(self) -> int:
        return len(self.resolution)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def shape(self) -> tuple:
        return self.resolution

    def axes(self) -> list:
        return [np.linspace(lo, hi, r) for (lo, hi), r in zip(self.interval, self.resolution)]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / max(r - 1, 1)
                         for (lo, hi), r in zip(self.interval, self.resolution)])

    @property
    def points(self) -> np.ndarray:
        """Row-major flattened coordinates, shape ``(n_points, N)``."""
        return grid_points(self.interval, self.resolution)


@dataclass
class FieldSample:
    """One sampled path: ``values[i, k]`` is component ``k`` at grid point ``i``."""

    grid: Grid
    d: int
    values: np.ndarray
    seed: int
    sampler_tag: str
    noise_spec: Optional[dict] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points, self.d):
            raise ArgumentError("values must have shape (n_points, d)")
        if self.sampler_tag not in SAMPLER_TAGS:
            raise ArgumentError(f"unknown sampler tag {self.sampler_tag!r}")

    def component(self, k: int = 0) -> np.ndarray:
        """Component ``k`` reshaped to the grid shape."""
        return self.values[:, k].reshape(self.grid.shape)


def stream(seed: int, replicate: int, k: int) -> np.random.Generator:
    """Generator for (replicate, component); independent of call order."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate), int(k)))
    return np.random.Generator(np.random.PCG64(ss))


# ------------------------------------------------------------- Cholesky


def cholesky_factors(h: HurstFunctional, grid: Grid, cap: int = DENSE_CAP):
    """Factors for exact sampling.

    Returns ``("kron", [L_1, ..., L_N])`` for separable functionals and
    ``("dense", L)`` otherwise, together with the total jitter.
    """
    if grid.n_dims != h.n_dims:
        raise ArgumentError("grid and functional dimensions differ")
    if h.separable:
        factors, jit = [], 0.0
        for ell, ax in enumerate(grid.axes()):
            if ax.size > cap:
                raise SizeError(f"axis {ell} has {ax.size} points > cap {cap}; "
                                "use the white-noise sampler")
            pts = np.ones((ax.size, h.n_dims))
            pts[:, ell] = ax
            sub = _axis_functional(h, ell)
            C = covariance_b(sub, ax[:, None]).entries
            L, lam = cholesky_jitter(C)
            factors.append(L)
            jit = max(jit, lam)
        return ("kron", factors), jit
    if grid.n_points > cap:
        raise SizeError(f"{grid.n_points} points exceed the exact-sampler cap {cap}; "
                        "use the white-noise sampler")
    C = covariance_b(h, grid.points).entries
    L, lam = cholesky_jitter(C)
    return ("dense", L), lam


def _axis_functional(h: HurstFunctional, ell: int) -> HurstFunctional:
    """One-axis functional ``t -> H_ell(t)`` of a separable functional."""
    from .hurst import HurstFunctional as HF, constant

    if h.is_constant:
        return constant([h(np.ones(h.n_dims))[ell]])

    def ev(p, h=h, ell=ell):
        pts = np.ones((p.shape[0], h.n_dims))
        pts[:, ell] = p[:, 0]
        return h(pts)[:, ell:ell + 1]

    return HF(evaluator=ev, n_dims=1, alpha=h.alpha, K=[h.K[ell]],
              lipschitz=[h.lipschitz[ell]], family_tag=h.family_tag, separable=True)


def _apply(factor, z, shape):
    kind, F = factor
    if kind == "dense":
        return F @ z
    x = z.reshape(shape)
    for ell, L in enumerate(F):
        x = np.moveaxis(np.tensordot(L, x, axes=([1], [ell])), 0, ell)
    return x.reshape(-1)


def sample_cholesky(h: HurstFunctional, grid: Grid, d: int = 1, seed: int = 0,
                    replicate: int = 0, cap: int = DENSE_CAP, factor=None) -> FieldSample:
    """Exact Gaussian sample ``values[:, k] = L z_k``.

    Parameters
    ----------
    h, grid, d, seed
        Model, grid, number of independent components and root seed.
    replicate : int
        Replicate index used in the stream derivation.
    cap : int
        Maximal number of points for a dense factor (per axis for the
        separable path).
    factor : optional
        Precomputed result of :func:`cholesky_factors`.
    """
    if d < 1:
        raise ArgumentError("d must be at least 1")
    if factor is None:
        factor, jit = cholesky_factors(h, grid, cap)
    else:
        factor, jit = factor
    vals = np.empty((grid.n_points, d))
    for k in range(d):
        z = stream(seed, replicate, k).standard_normal(grid.n_points)
        vals[:, k] = _apply(factor, z, grid.shape)
    return FieldSample(grid, d, vals, int(seed), "cholesky", {"jitter": jit})


def cholesky_ensemble(h: HurstFunctional, grid: Grid, n_replicates: int, d: int = 1,
                      seed: int = 0, cap: int = DENSE_CAP) -> np.ndarray:
    """Array ``(n_replicates, n_points, d)``; replicate ``r`` equals
    ``sample_cholesky(..., replicate=r).values``."""
    fac = cholesky_factors(h, grid, cap)
    out = np.empty((n_replicates, grid.n_points, d))
    kind, F = fac[0]
    for k in range(d):
        Z = np.stack([stream(seed, r, k).standard_normal(grid.n_points)
                      for r in range(n_replicates)], axis=1)
        if kind == "dense":
            out[:, :, k] = (F @ Z).T
        else:
            for r in range(n_replicates):
                out[r, :, k] = _apply(fac[0], Z[:, r], grid.shape)
    return out


# ---------------------------------------------------------- white noise


def noise_edges(top: float, spacing: float, window: float, far: float,
                anchors=(), growth: float = 1.25) -> np.ndarray:
    """Cell edges on one axis.

    Uniform cells of width ``spacing`` anchored at ``top`` cover
    ``[-window, top]``; below ``-window`` cells grow geometrically by
    ``growth`` until ``-far``.  ``anchors`` (for example 0 and the grid
    coordinates) are inserted as extra edges.
    """
    n_uni = int(math.ceil((top + window) / spacing - 1e-9))
    uni = top - spacing * np.arange(n_uni + 1)
    edges = list(uni[::-1])
    lo = edges[0]
    w = spacing
    tail = []
    while lo > -far:
        w *= growth
        lo = lo - w
        tail.append(max(lo, -far))
        if tail[-1] == -far:
            break
    e = np.concatenate([np.array(tail[::-1]), np.array(edges), np.asarray(anchors, dtype=float)])
    e = np.unique(np.round(e, 14))
    return e[(e >= -far) & (e <= top)]


def cell_integrals(t, p, edges) -> np.ndarray:
    """``int_cell g(u) du`` for moving-average kernels, shape ``(len(t), cells)``.

    ``t`` and ``p`` are per-row arrays (``p = h - 1/2``).  Antiderivatives are
    evaluated in a cancellation-free form on the negative half-line.
    """
    t = np.asarray(t, dtype=float)[:, None]
    p = np.broadcast_to(np.asarray(p, dtype=float), t.shape[:1])[:, None]
    e = np.asarray(edges, dtype=float)[None, :]
    q = p + 1.0
    # Phi(u) = int_{-inf}^{u} g relative offset; use separate pieces.
    v = np.maximum(-e, 0.0)  # distance below zero
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_neg = np.where(v > 0, v ** q * np.expm1(q * np.log1p(t / np.where(v > 0, v, 1.0))),
                           t ** q)
    # for u >= 0 only (t - u)_+^q matters
    pos = np.maximum(t - np.maximum(e, 0.0), 0.0) ** q
    # antiderivative A(u) with dA/du = g(u): A(u) = -(t-u)_+^q/q + (-u)_+^q/q
    A = np.where(e < 0, -phi_neg / q, -pos / q)
    return np.diff(A, axis=1)


@dataclass
class _AxisWeights:
    A: np.ndarray        # (n_coords, cells) weights: cell integral / sqrt(width)
    exact: np.ndarray    # exact variance factor per coordinate
    edges: np.ndarray


def _axis_weights(coords, hvals, edges):
    widths = np.diff(edges)
    I = cell_integrals(coords, hvals - 0.5, edges)
    A = I / np.sqrt(widths)[None, :]
    exact = np.array([kernel.normalization_constant(float(hh)) for hh in hvals]) \
        * np.asarray(coords) ** (2 * np.asarray(hvals))
    return _AxisWeights(A, exact, edges)


def default_noise_spacing(grid: Grid, per_step: int = 16) -> float:
    """Grid step divided by ``per_step`` (smallest axis step)."""
    steps = [s for s in grid.spacing if s > 0]
    base = min(steps) if steps else min(hi for _, hi in grid.interval)
    return base / per_step


def tail_extent(hmax: float, tmax: float, target: float) -> float:
    """``V`` with ``int_{-inf}^{-V} g^2 <= target`` for exponents up to ``hmax``."""
    spec = kernel.KernelSpec("moving-average", tmax, hmax)
    if spec.p == 0:
        return 0.0
    return kernel._tail_start(spec, spec, target)


@dataclass
class WhiteNoisePlan:
    """Precomputed lattice and weights for one grid."""

    grid: Grid
    kind: str
    axes_weights: list
    point_weights: Optional[list]
    exact_var: np.ndarray
    disc_var: np.ndarray
    spec: dict
    cells: tuple

    @property
    def defect(self) -> np.ndarray:
        """Per-point variance defect ``Var_exact - Var_discrete`` (nonnegative)."""
        return np.maximum(self.exact_var - self.disc_var, 0.0)

    def covariance_bound(self) -> np.ndarray:
        """Entrywise bound ``sqrt(e_s e_t)`` on the covariance error."""
        e = np.sqrt(self.defect)
        return np.outer(e, e)


def plan_whitenoise(h: HurstFunctional, grid: Grid, noise_spacing: Optional[float] = None,
                    window: Optional[float] = None, tail_tol: float = 1e-6,
                    geometric_tail: bool = True, refine: int = 0) -> WhiteNoisePlan:
    """Build the noise lattice and kernel weights.

    Parameters
    ----------
    noise_spacing : float, optional
        Uniform cell width; defaults to the grid step / 16.
    window : float, optional
        Uniform cells cover ``[-window, max b]``; default ``max b + 4``.
    tail_tol : float
        Kernel tail mass allowed beyond the lattice, relative to the
        smallest exact variance.
    geometric_tail : bool
        Extend the lattice with geometrically growing cells until the tail
        bound meets ``tail_tol``.  When False a window that is too short
        raises ConfigurationError.
    refine : int
        Bisect every cell ``refine`` times (for nested self-convergence).
    """
    if h.n_dims != grid.n_dims:
        raise ArgumentError("grid and functional dimensions differ")
    if noise_spacing is None:
        noise_spacing = default_noise_spacing(grid)
    if noise_spacing <= 0:
        raise ArgumentError("noise_spacing must be positive")
    top = max(hi for _, hi in grid.interval)
    if window is None:
        window = top + 4.0
    if window < top + 1:
        raise ArgumentError("window must be at least max grid coordinate + 1")
    pts = grid.points
    H = h(pts)
    axes_weights = []
    point_weights = None
    exact = np.ones(len(pts))
    disc = np.ones(len(pts))
    cells = []
    tail_bounds = []
    for ell, ax in enumerate(grid.axes()):
        hmax = float(H[:, ell].max())
        tmax = float(ax.max())
        varmin = float(min(kernel.normalization_constant(float(x)) for x in (H[:, ell].min(), hmax))
                       * ax.min() ** (2 * H[:, ell].max()))
        V = tail_extent(hmax, tmax, tail_tol * varmin)
        if not geometric_tail:
            tb = kernel.tail_bound(kernel.KernelSpec("moving-average", tmax, hmax),
                                   kernel.KernelSpec("moving-average", tmax, hmax), window)
            if tb > tail_tol * varmin:
                raise ConfigurationError("noise window too short for the kernel tail",
                                         {"axis": ell, "tail_bound": tb, "window": window,
                                          "required": V})
            far = window
        else:
            far = max(window, V)
        edges = noise_edges(top, noise_spacing, window, far, anchors=np.concatenate([[0.0], ax]))
        for _ in range(refine):
            mid = 0.5 * (edges[:-1] + edges[1:])
            edges = np.sort(np.concatenate([edges, mid]))
        cells.append(edges.size - 1)
        tail_bounds.append(float(kernel.tail_bound(
            kernel.KernelSpec("moving-average", tmax, hmax),
            kernel.KernelSpec("moving-average", tmax, hmax), far)))
        if h.separable:
            hv = h.axis_values(ell, ax) if not h.is_constant else np.full(ax.size, H[0, ell])
            w = _axis_weights(ax, hv, edges)
            axes_weights.append(w)
            idx = np.unravel_index(np.arange(len(pts)), grid.shape)[ell]
            exact *= w.exact[idx]
            disc *= np.sum(w.A ** 2, axis=1)[idx]
        else:
            w = _axis_weights(pts[:, ell], H[:, ell], edges)
            if point_weights is None:
                point_weights = []
            point_weights.append(w.A)
            axes_weights.append(edges)
            exact *= w.exact
            disc *= np.sum(w.A ** 2, axis=1)
    spec = {"spacing": float(noise_spacing), "window": float(window),
            "tail_tol": float(tail_tol), "geometric_tail": bool(geometric_tail),
            "refine": int(refine), "cells": cells, "tail_bounds": tail_bounds}
    return WhiteNoisePlan(grid, "separable" if h.separable else "general", axes_weights,
                          point_weights, exact, disc, spec, tuple(cells))


def _contract(plan: WhiteNoisePlan, Z: np.ndarray) -> np.ndarray:
    """Field values from one noise array of shape ``plan.cells``."""
    if plan.kind == "separable":
        x = Z
        for ell, w in enumerate(plan.axes_weights):
            x = np.moveaxis(np.tensordot(w.A, x, axes=([1], [ell])), 0, ell)
        return x.reshape(-1)
    W = plan.point_weights
    if len(W) == 1:
        return W[0] @ Z
    x = np.einsum("pj,...j->p...", W[-1], Z)
    # x has shape (points, c_1, ..., c_ell); contract the last cell axis pointwise
    for ell in range(len(W) - 2, -1, -1):
        x = np.einsum("pj,p...j->p...", W[ell], x)
    return x


def _noise(seed, replicate, k, cells):
    return stream(seed, replicate, k).standard_normal(cells)


def aggregate_noise(Z: np.ndarray, levels: int = 1) -> np.ndarray:
    """Sum bisected cell pairs back to the parent lattice (per axis).

    Standardized noise is rescaled so the parent cells again carry unit
    variance: parent = (child_a + child_b) / sqrt(2) in the standardized
    convention, which matches the weight normalization by ``sqrt(width)``
    only when siblings have equal width; bisection guarantees that.
    """
    for _ in range(levels):
        for ax in range(Z.ndim):
            Z = np.moveaxis(Z, ax, 0)
            Z = (Z[0::2] + Z[1::2]) / math.sqrt(2.0)
            Z = np.moveaxis(Z, 0, ax)
    return Z


def sample_whitenoise(h: HurstFunctional, grid: Grid, d: int = 1, seed: int = 0,
                      noise_spacing: Optional[float] = None, window: Optional[float] = None,
                      replicate: int = 0, plan: Optional[WhiteNoisePlan] = None,
                      **plan_kw) -> FieldSample:
    """Sample by discretizing the Wiener integral on a noise lattice.

    Each cell contributes ``avg_cell(g) * dW(cell)`` with ``dW ~ N(0, |cell|)``;
    the cell average is exact.  The plan (lattice, weights, per-point
    variance defect) is stored in ``noise_spec``.
    """
    if plan is None:
        plan = plan_whitenoise(h, grid, noise_spacing, window, **plan_kw)
    vals = np.empty((grid.n_points, d))
    for k in range(d):
        Z = _noise(seed, replicate, k, plan.cells)
        vals[:, k] = _contract(plan, Z)
    spec = dict(plan.spec)
    spec["max_defect"] = float(plan.defect.max())
    return FieldSample(grid, d, vals, int(seed), "white-noise", spec)


def whitenoise_ensemble(h: HurstFunctional, grid: Grid, n_replicates: int, d: int = 1,
                        seed: int = 0, plan: Optional[WhiteNoisePlan] = None,
                        **plan_kw) -> tuple:
    """Array ``(n_replicates, n_points, d)`` and the plan used."""
    if plan is None:
        plan = plan_whitenoise(h, grid, **plan_kw)
    out = np.empty((n_replicates, grid.n_points, d))
    if plan.kind == "separable" and grid.n_dims == 1:
        A = plan.axes_weights[0].A
        for k in range(d):
            Z = np.stack([_noise(seed, r, k, plan.cells) for r in range(n_replicates)], axis=1)
            out[:, :, k] = (A @ Z).T
        return out, plan
    for r in range(n_replicates):
        for k in range(d):
            out[r, :, k] = _contract(plan, _noise(seed, r, k, plan.cells))
    return out, plan


def halving_check(h: HurstFunctional, grid: Grid, seed: int = 0,
                  noise_spacing: Optional[float] = None, replicate: int = 0,
                  **plan_kw) -> dict:
    """Compare one path at spacing ``s`` and ``s / 2`` driven by nested noise.

    The fine noise is drawn once; the coarse path uses the aggregated
    noise.  Returns the largest ``|B_fine - B_coarse| / sqrt(defect_coarse)``.
    """
    coarse = plan_whitenoise(h, grid, noise_spacing, **plan_kw)
    fine = plan_whitenoise(h, grid, noise_spacing, refine=1, **plan_kw)
    Zf = _noise(seed, replicate, 0, fine.cells)
    Zc = aggregate_noise(Zf, 1)
    bf = _contract(fine, Zf)
    bc = _contract(coarse, Zc)
    est = np.sqrt(coarse.defect)
    diff = np.abs(bf - bc)
    return {"max_abs_diff": float(diff.max()), "max_estimate": float(est.max()),
            "max_ratio": float(np.max(diff / np.where(est > 0, est, np.inf))),
            "rms_ratio": float(np.sqrt(np.mean(diff ** 2) / np.mean(coarse.defect)))}


# ------------------------------------------------------------ statistics


def empirical_covariance(samples, component: int = 0):
    """Unbiased sample covariance and per-entry Monte Carlo standard errors.

    Parameters
    ----------
    samples : list of FieldSample or ndarray
        Either FieldSample objects on one grid or an array of shape
        ``(R, n)`` / ``(R, n, d)``.
    component : int
        Field component used when samples carry several.

    Returns
    -------
    cov, se : ndarray, shape (n, n)
    """
    if isinstance(samples, np.ndarray):
        X = samples[..., component] if samples.ndim == 3 else samples
    else:
        samples = list(samples)
        g0 = samples[0].grid
        if any(s.grid != g0 for s in samples):
            raise ArgumentError("samples must share one grid")
        X = np.stack([s.values[:, component] for s in samples])
    R = X.shape[0]
    if R < 100:
        raise ArgumentError("empirical covariance needs at least 100 replicates")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (R - 1)
    # standard error from the spread of the centered products
    sq = (Xc ** 2).T @ (Xc ** 2) / R
    mean = Xc.T @ Xc / R
    var = np.maximum(sq - mean ** 2, 0.0)
    se = np.sqrt(var / R)
    return cov, se


def simulate_ensemble(h: HurstFunctional, grid: Grid, n_replicates: int, d: int = 1,
                      seed: int = 0, sampler: str = "auto", cap: int = DENSE_CAP):
    """Ensemble ``(n_replicates, n_points, d)`` from the chosen sampler.

    ``auto`` uses the exact Cholesky path when it fits under ``cap`` and
    the white-noise path otherwise.  Returns the array and the sampler tag.
    """
    if sampler not in ("auto", "cholesky", "white-noise"):
        raise ArgumentError(f"unknown sampler {sampler!r}")
    if sampler in ("auto", "cholesky"):
        try:
            return cholesky_ensemble(h, grid, n_replicates, d, seed, cap), "cholesky"
        except SizeError:
            if sampler == "cholesky":
                raise
    arr, _ = whitenoise_ensemble(h, grid, n_replicates, d, seed)
    return arr, "white-noise"
