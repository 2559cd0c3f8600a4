"""Manifest schema, experiment runners and plots used by the command line."""
from __future__ import annotations

import json
import math
import platform
from pathlib import Path

import numpy as np

from . import __version__, gaussian, hurst, io, kernel, levelset, localtime, simulate
from .errors import ConfigurationError

KINDS = ("validate-hurst", "covariance", "simulate", "lnd", "increments", "localtime",
         "levelset", "dimension-map", "verify-lemmas")

_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_INTERVAL = {"type": "array", "minItems": 1,
             "items": {"type": "array", "items": {"type": "number"},
                       "minItems": 2, "maxItems": 2}}

SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "hurst": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["constant", "affine-clamped", "smooth-sigmoid",
                                    "user-supplied"]},
                "values": _VEC, "base": _VEC, "slope": {"type": "array"},
                "lo": {}, "hi": {}, "K": _VEC, "alpha": {"type": "number"},
                "weights": {"type": "array"}, "center": _VEC,
                "scale": {"type": "number"}, "lipschitz": _VEC,
                "expressions": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
        "interval": _INTERVAL,
        "resolution": {"oneOf": [{"type": "integer", "minimum": 1},
                                 {"type": "array", "items": {"type": "integer", "minimum": 1}}]},
        "d": {"type": "integer", "minimum": 1},
        "sampler": {
            "type": "object",
            "properties": {"kind": {"enum": ["auto", "cholesky", "white-noise"]},
                           "noise_spacing": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "params": {"type": "object"},
        "out": {"type": "string"},
    },
}

_NEEDS_MODEL = set(KINDS) - {"verify-lemmas"}


def validate_manifest(m) -> dict:
    """Schema check plus cross-field consistency; raises :class:`ConfigurationError`."""
    import jsonschema

    if not isinstance(m, dict):
        raise ConfigurationError("manifest must be a mapping")
    try:
        jsonschema.validate(m, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"manifest invalid at {path}: {exc.message}") from None
    if m["kind"] in _NEEDS_MODEL:
        for key in ("hurst", "interval"):
            if key not in m:
                raise ConfigurationError(f"{m['kind']} manifests need {key!r}")
    return m


def load_manifest(path) -> dict:
    import yaml

    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from None
    return validate_manifest(data)


# ------------------------------------------------------------------ helpers


def jsonable(obj):
    """Recursively convert numpy values and dataclass reports for ``json``."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (simulate.Grid,)):
        return {"interval": obj.interval, "resolution": obj.resolution}
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def version_stamp(threads) -> dict:
    import scipy

    return {"mfbs": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "threads": threads}


class Context:
    """Resolved manifest fields shared by the runners."""

    def __init__(self, m: dict, out: Path):
        self.m = m
        self.out = out
        self.seed = int(m.get("seed", 0))
        self.p = dict(m.get("params", {}))
        self.d = int(m.get("d", 1))
        self.h = hurst.from_spec(m["hurst"]) if "hurst" in m else None
        self.interval = m.get("interval")
        if self.h is not None and len(self.interval) != self.h.n_dims:
            raise ConfigurationError("interval and Hurst functional disagree on N")
        self.resolution = m.get("resolution", 33)
        samp = m.get("sampler", {})
        self.sampler = samp.get("kind", "auto")
        self.noise_spacing = samp.get("noise_spacing")

    @property
    def grid(self) -> simulate.Grid:
        return simulate.Grid(self.interval, self.resolution)

    def ensemble(self, n: int, grid=None):
        grid = grid or self.grid
        if self.sampler == "white-noise" and self.noise_spacing is not None:
            arr, _ = simulate.whitenoise_ensemble(self.h, grid, n, self.d, self.seed,
                                                  noise_spacing=self.noise_spacing)
            return arr, "white-noise"
        return simulate.simulate_ensemble(self.h, grid, n, self.d, self.seed, self.sampler)


# ------------------------------------------------------------------- plots

FIT_HEADER = ["x", "observed", "slope", "intercept", "ci_halfwidth", "theoretical", "inverse"]


def _setup_matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "mfbs"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def write_fit_csv(path, x, observed, slope, intercept, ci, theoretical, inverse) -> Path:
    rows = [[float(a), float(b), float(slope), float(intercept), float(ci), float(theoretical),
             int(bool(inverse))] for a, b in zip(x, observed)]
    return io.write_csv(path, FIT_HEADER, rows)


def plot_fit_csv(csv_path, svg_path, title: str = "") -> Path:
    """Log-log plot of a fit table; uses nothing but the CSV."""
    header, rows = io.read_csv(csv_path)
    col = {k: i for i, k in enumerate(header)}
    x = np.array([float(r[col["x"]]) for r in rows])
    y = np.array([float(r[col["observed"]]) for r in rows])
    slope = float(rows[0][col["slope"]])
    icpt = float(rows[0][col["intercept"]])
    theo = float(rows[0][col["theoretical"]])
    inv = int(rows[0][col["inverse"]])
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(5, 4))
    sgn = -1.0 if inv else 1.0
    ax.loglog(x, y, "o", label="observed")
    xx = np.geomspace(x.min(), x.max(), 50)
    ax.loglog(xx, np.exp(icpt) * xx ** (sgn * slope), "-", label=f"fit slope {slope:.3f}")
    if math.isfinite(theo):
        anchor = np.exp(icpt) * np.exp(np.mean(np.log(x))) ** (sgn * slope)
        gm = np.exp(np.mean(np.log(x)))
        ax.loglog(xx, anchor * (xx / gm) ** (sgn * theo), "--", label=f"theory {theo:.3f}")
    ax.set_xlabel("scale")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(svg_path)


def plot_map_csv(csv_path, svg_path) -> Path:
    header, rows = io.read_csv(csv_path)
    col = {k: i for i, k in enumerate(header)}
    t = np.array([float(r[col["center_1"]]) for r in rows])
    theo = np.array([float(r[col["theoretical"]]) for r in rows])
    emp = np.array([float(r[col["empirical"]]) for r in rows])
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(t, theo, "s-", label="theoretical")
    ax.plot(t, emp, "o-", label="empirical median")
    ax.set_xlabel("window centre, axis 1")
    ax.set_ylabel("dimension")
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(svg_path)


def _emit_fit(ctx, name, fit=None, report=None, title=""):
    if fit is not None:
        csv = write_fit_csv(ctx.out / f"{name}.csv", fit.x, fit.observed, fit.slope,
                            fit.intercept, fit.ci_halfwidth, fit.theoretical_exponent, False)
    else:
        from .fitting import loglog_fit

        f = loglog_fit(report.scales, report.counts, inverse=True)
        csv = write_fit_csv(ctx.out / f"{name}.csv", report.scales, report.counts, f.slope,
                            f.intercept, f.ci_halfwidth, report.theoretical, True)
    plot_fit_csv(csv, ctx.out / f"{name}.svg", title)


# ----------------------------------------------------------------- runners


def run_validate_hurst(ctx):
    rep = hurst.validate_condition_a(ctx.h, ctx.interval, ctx.resolution,
                                     ctx.p.get("delta_a"), ctx.p.get("tol", 1e-9))
    rows = [[ell + 1, rep.h_min[ell], rep.h_max[ell], ctx.h.alpha, ctx.h.K[ell],
             int(rep.bounds_pass[ell]), rep.lipschitz_ratio[ell], ctx.h.lipschitz[ell],
             int(rep.lipschitz_pass[ell])] for ell in range(ctx.h.n_dims)]
    io.write_csv(ctx.out / "condition_a.csv",
                 ["axis", "h_min", "h_max", "alpha", "K", "bounds_pass", "lipschitz_ratio",
                  "lipschitz_constant", "lipschitz_pass"], rows)
    t_star = levelset.find_t_star(ctx.h, ctx.interval, ctx.resolution)
    expo = hurst.tau_and_beta(ctx.h(t_star), ctx.d)
    summary = {"condition_a": rep, "t_star": t_star, "exponents": expo,
               "existence": localtime.existence_predicate(ctx.h, ctx.interval, ctx.d,
                                                          ctx.resolution)}
    return summary


def run_covariance(ctx):
    grid = ctx.grid
    method = ctx.p.get("method", "batch")
    C = gaussian.covariance_b(ctx.h, grid.points, method=method)
    io.write_covariance(ctx.out / "covariance.mfbs", C.entries, ctx.seed)
    iu = np.triu_indices(C.n)
    io.write_csv(ctx.out / "covariance.csv", ["i", "j", "value"],
                 ([int(i), int(j), float(C.entries[i, j])] for i, j in zip(*iu)))
    _, lam = gaussian.cholesky_jitter(C.entries)
    return {"n": C.n, "jitter": lam, "det_check": gaussian.det_factorization_check(C.entries)}


def run_simulate(ctx):
    n = int(ctx.p.get("n_replicates", 1))
    grid = ctx.grid
    arr, tag = ctx.ensemble(n, grid)
    rows = []
    for r in range(n):
        fs = simulate.FieldSample(grid, ctx.d, arr[r], ctx.seed, tag)
        io.write_field(ctx.out / f"field_{r:04d}.mfbs", fs)
        rows.append([r, float(arr[r].min()), float(arr[r].max()), float(arr[r].mean())])
    io.write_csv(ctx.out / "fields.csv", ["replicate", "min", "max", "mean"], rows)
    out = {"n_replicates": n, "sampler": tag}
    if tag == "white-noise":
        plan = simulate.plan_whitenoise(ctx.h, grid, ctx.noise_spacing)
        out["max_variance_defect"] = float(plan.defect.max())
    return out


def _ordered_configs(ctx, rng, n_configs, n_points, mode="axis", ell=0):
    """Random configurations sorted along ``ell`` or dominated by the last point."""
    iv = np.asarray(ctx.interval, dtype=float)
    lo, width = iv[:, 0], iv[:, 1] - iv[:, 0]
    out = []
    for _ in range(n_configs):
        P = lo + width * rng.random((n_points, ctx.h.n_dims))
        if mode == "sectorial":
            top = P.max(axis=0)
            P[:-1] = lo + (top - lo) * rng.random((n_points - 1, ctx.h.n_dims))
            P[-1] = top
        else:
            P = P[np.argsort(P[:, ell], kind="stable")]
        out.append(P)
    return out


def run_lnd(ctx):
    mode = ctx.p.get("mode", "axis")
    ell = int(ctx.p.get("ell", 0))
    rng = np.random.default_rng(ctx.seed)
    sizes = ctx.p.get("sizes", [3, 5, 10])
    n_configs = int(ctx.p.get("n_configs", 20))
    rows = []
    for n in sizes:
        for c, P in enumerate(_ordered_configs(ctx, rng, n_configs, int(n), mode, ell)):
            cert = gaussian.lnd_certificate(ctx.h, P, ell, ctx.p.get("eps"), mode)
            rows.append([int(n), c, cert.cond_variance, cert.lower_bound_ref, cert.ratio])
    io.write_csv(ctx.out / "lnd.csv", ["n", "config", "cond_variance", "reference", "ratio"],
                 rows)
    r = np.array([row[4] for row in rows])
    per_n = {int(n): float(min(row[4] for row in rows if row[0] == n)) for n in sizes}
    return {"mode": mode, "r_min": float(r.min()), "r_min_per_n": per_n,
            "stability": float(max(per_n.values()) / min(per_n.values()))}


def run_increments(ctx):
    n_pairs = int(ctx.p.get("n_pairs", 500))
    delta = float(ctx.p.get("delta", 0.1))
    reps = {}
    for dl in (delta, delta / 2):
        reps[dl] = gaussian.increment_bounds_report(ctx.h, ctx.interval, n_pairs, dl, ctx.seed)
    rows = []
    for dl, rep in reps.items():
        rows += [[dl, i, float(r)] for i, r in enumerate(rep.ratios)]
    io.write_csv(ctx.out / "increments.csv", ["delta", "pair", "ratio"], rows)
    a, b = reps[delta], reps[delta / 2]
    stab = max(a.ratio_max, b.ratio_max) / min(a.ratio_max, b.ratio_max)
    stab_lo = max(a.ratio_min, b.ratio_min) / min(a.ratio_min, b.ratio_min)
    return {"delta": a, "half_delta": b, "stability_max": stab, "stability_min": stab_lo}


def run_localtime(ctx):
    n = int(ctx.p.get("n_paths", 200))
    grid = ctx.grid
    arr, tag = ctx.ensemble(n, grid)
    fs = simulate.FieldSample(grid, ctx.d, arr[0], ctx.seed, tag)
    est = localtime.mollified_local_time(fs)
    if ctx.d == 1:
        io.write_csv(ctx.out / "local_time_path0.csv", ["x", "value"],
                     zip(est.x_grid[0].tolist(), est.values.tolist()))
    out = {"sampler": tag, "mass_path0": est.mass(), "time_measure": est.time_measure,
           "existence": localtime.existence_predicate(ctx.h, ctx.interval, ctx.d)}
    if "ball" in ctx.p:
        b = ctx.p["ball"]
        fit = localtime.ball_scaling_fit(arr, ctx.h, b["center"], b["radii"], grid,
                                         b.get("x_mode", "random"), b.get("k_rule", "default"))
        _emit_fit(ctx, "ball_scaling", fit=fit, title="local time on balls")
        out["ball_scaling"] = fit
    if "moment" in ctx.p:
        mo = ctx.p["moment"]
        fit = localtime.moment_scaling_fit(arr, ctx.h, mo.get("x", 0.0), mo["side_lengths"],
                                           grid, mo.get("n", 2), mo.get("a"),
                                           mo.get("k_rule", "default"))
        _emit_fit(ctx, "moment_scaling", fit=fit, title="local-time moments")
        out["moment_scaling"] = fit
    return out


def run_levelset(ctx):
    rep = levelset.dimension_experiment(
        ctx.h, ctx.interval, ctx.d, ctx.p.get("x", 0.0), int(ctx.p.get("n_paths", 30)),
        ctx.resolution, ctx.seed, ctx.sampler, float(ctx.p.get("c_thr", 1.0)),
        int(ctx.p.get("n_halvings", 7)))
    if rep.regime == "exists":
        io.write_csv(ctx.out / "dimension.csv",
                     ["scale", "median_count", "median_slope", "ci_halfwidth", "theoretical"],
                     [[s, c, rep.slope, rep.ci_halfwidth, rep.theoretical]
                      for s, c in zip(rep.scales, rep.counts)])
        io.write_csv(ctx.out / "path_slopes.csv", ["path", "slope"], enumerate(rep.slopes))
        _emit_fit(ctx, "dimension_fit", report=rep, title="box counting (median counts)")
    elif rep.regime == "empty":
        io.write_csv(ctx.out / "empty_regime.csv", ["c_thr", "nonempty_fraction"],
                     zip(rep.thresholds, rep.nonempty_fraction))
    return rep


def run_dimension_map(ctx):
    m = levelset.local_dimension_map(
        ctx.h, ctx.interval, ctx.d, float(ctx.p["window"]), ctx.resolution,
        int(ctx.p.get("n_paths", 30)), ctx.seed, ctx.sampler, float(ctx.p.get("c_thr", 1.0)),
        ctx.p.get("centers"))
    n = ctx.h.n_dims
    header = [f"center_{i + 1}" for i in range(n)] + ["theoretical", "empirical"]
    csv = io.write_csv(ctx.out / "dimension_map.csv", header,
                       [list(c) + [t, e] for c, t, e in zip(m.centers, m.theoretical,
                                                            m.empirical)])
    plot_map_csv(csv, ctx.out / "dimension_map.svg")
    return m


def run_verify_lemmas(ctx):
    reports = [
        kernel.verify_double_integral_bound(0.25, 0.6, 2.0, [1e-2, 1e-3, 1e-4], 0.1),
        kernel.verify_single_integral_bound(1.0, 2.0, 1.0, [1e-2, 1e-3, 1e-4, 1e-5], 1.0),
        kernel.verify_single_integral_bound(0.5, 2.0, 1.0, [1e-2, 1e-3, 1e-4, 1e-5], 1.0),
        kernel.verify_single_integral_bound(0.5, 1.0, 0.3, [1e-2, 1e-3, 1e-4, 1e-5], 1.0),
        kernel.verify_simplex_integral_bound(1.0, 0.25, [0.5], 0.5),
        kernel.verify_simplex_integral_bound(1.0, 0.2, [0.5, 0.5], 0.5),
    ]
    rows = []
    for rep in reports:
        for s, l, sh, r in zip(rep.sweep, rep.lhs, rep.shape, rep.ratios):
            rows.append([rep.name, rep.case, s, l, sh, r, rep.stability, int(rep.passed)])
    io.write_csv(ctx.out / "lemmas.csv", ["lemma", "case", "sweep", "lhs", "shape", "ratio",
                                          "stability", "passed"], rows)
    n_draws = int(ctx.p.get("n_split_draws", 1000))
    rng = np.random.default_rng(ctx.seed)
    worst_sum, worst_ratio, done = 0.0, 0.0, 0
    while done < n_draws:
        N = int(rng.integers(1, 5))
        Hb = rng.uniform(0.05, 0.95, N)
        d = int(rng.integers(1, 6))
        if np.sum(1 / Hb) <= d + 1e-6:
            continue
        sp = hurst.holder_split(Hb, d, float(rng.uniform(0.01, 0.5)))
        worst_sum = max(worst_sum, abs(float(np.sum(1 / sp.p)) - 1.0))
        Hs = np.sort(Hb)[:sp.certificate.tau]
        worst_ratio = max(worst_ratio, float(np.max(Hs * d / np.asarray(sp.certificate.p))))
        done += 1
    return {"reports": reports, "split_draws": n_draws, "split_max_sum_error": worst_sum,
            "split_max_hd_over_p": worst_ratio,
            "all_passed": all(r.passed for r in reports) and worst_ratio < 1}


RUNNERS = {
    "validate-hurst": run_validate_hurst, "covariance": run_covariance,
    "simulate": run_simulate, "lnd": run_lnd, "increments": run_increments,
    "localtime": run_localtime, "levelset": run_levelset,
    "dimension-map": run_dimension_map, "verify-lemmas": run_verify_lemmas,
}


def run_manifest(manifest: dict, out, manifest_text=None, threads=None) -> dict:
    """Execute one validated manifest and write every artifact to ``out``."""
    import yaml

    manifest = validate_manifest(manifest)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    text = manifest_text if manifest_text is not None else yaml.safe_dump(manifest,
                                                                         sort_keys=True)
    (out / "manifest.yaml").write_text(text)
    write_json(out / "version.json", version_stamp(threads))
    ctx = Context(manifest, out)
    summary = RUNNERS[manifest["kind"]](ctx)
    write_json(out / "summary.json", {"kind": manifest["kind"], "result": summary})
    return jsonable(summary)
