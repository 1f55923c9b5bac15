"""Config-driven Monte Carlo campaigns over the slope field.

Every campaign follows the same discipline: sample i is keyed by
(master_seed, i) and computed independently, aggregation runs in index
order, and anything time-dependent stays out of the result tables.  A
rerun from a manifest therefore reproduces results.csv and result.json
byte for byte, whatever the worker count.

Coupling conventions: comparisons across a swept parameter (window side,
endpoint distance, cutoff radius) evaluate every value of the sweep on
the same field realization, so monotone statements can be tested sample
by sample instead of across independent noise.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError
from .excursion import Box, _auto_margin, crossing, threshold
from .field import convolve_field, draw_field, grid_for_kernel, sample_white_noise, truncated_field
from .geometry import grid_distances, multi_source_distances
from .kernels import Kernel
from .slope import slope_field, truncated_slope_field
from .stats import bootstrap_ci, wilson_interval

Array = np.ndarray


@dataclass(frozen=True)
class ExperimentConfig:
    """Scientific parameters of one campaign; worker count stays outside.

    level is the excursion level most campaigns run at; lambdas are square
    sides in cells for the crossing sweep; z_norms are endpoint distances
    in cells; radii are cutoff diameters for the truncation study;
    c_values are length-ratio thresholds; epsilon doubles as the endpoint
    ball exponent (global structure) and the sup-difference threshold
    (truncation study).
    """

    kernel: Kernel
    spacing: float = 0.5
    level: float | None = None
    lambdas: tuple[int, ...] = (8, 12, 18, 27, 40)
    z_norms: tuple[int, ...] = (32, 64, 128, 256)
    radii: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    c_values: tuple[float, ...] = (1.0, 1.25, 1.5, 2.0, 3.0)
    epsilon: float = 0.1
    n_samples: int = 400
    master_seed: int = 0
    margin: int | None = None
    truncation: float | None = None

    def __post_init__(self):
        if self.spacing <= 0:
            raise ConfigError("spacing must be positive")
        if self.n_samples < 1:
            raise ConfigError("need at least one sample")
        if self.level is not None and not math.isfinite(self.level):
            raise ConfigError("level must be finite")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        for name in ("lambdas", "z_norms"):
            vals = getattr(self, name)
            if any(int(v) < 1 for v in vals):
                raise ConfigError(f"{name} entries must be positive cells")

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "spacing": self.spacing,
            "level": self.level,
            "lambdas": list(self.lambdas),
            "z_norms": list(self.z_norms),
            "radii": list(self.radii),
            "c_values": list(self.c_values),
            "epsilon": self.epsilon,
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "margin": self.margin,
            "truncation": self.truncation,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        try:
            kernel = Kernel.from_dict(d["kernel"])
        except KeyError:
            raise ConfigError("config is missing the kernel table") from None
        kw = {}
        for name, cast in (("spacing", float), ("level", float),
                           ("epsilon", float), ("n_samples", int),
                           ("master_seed", int), ("margin", int),
                           ("truncation", float)):
            if name in d and d[name] is not None:
                kw[name] = cast(d[name])
        for name, cast in (("lambdas", int), ("z_norms", int),
                           ("radii", float), ("c_values", float)):
            if name in d and d[name] is not None:
                kw[name] = tuple(cast(v) for v in d[name])
        return ExperimentConfig(kernel=kernel, **kw)


@dataclass(frozen=True)
class ExperimentResult:
    """One campaign's table plus its deterministic summary.

    rows align with columns; seconds is wall clock and never enters the
    result files.
    """

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    summary: dict
    config: ExperimentConfig
    seconds: float


def _parallel_map(fn, n: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _margin(cfg: ExperimentConfig) -> int:
    if cfg.margin is not None:
        return cfg.margin
    return _auto_margin(cfg.kernel, cfg.spacing)


def _ols_slope(x: Array, y: Array) -> tuple[float, float, float] | None:
    """Slope with a 95% normal interval; None below three points."""
    if x.size < 3:
        return None
    xc = x - x.mean()
    denom = float((xc * xc).sum())
    if denom == 0.0:
        return None
    slope = float((xc * y).sum() / denom)
    resid = y - y.mean() - slope * xc
    s2 = float((resid * resid).sum() / (x.size - 2))
    half = 1.959963984540054 * math.sqrt(s2 / denom)
    return slope, slope - half, slope + half


def run_crossing_decay(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """1 - p_hat of the horizontal square crossing along a side sweep.

    All sides are evaluated on one field per sample (the window is sized
    to the largest), so the sweep is coupled.
    """
    if cfg.level is None:
        raise ConfigError("crossing decay needs a level")
    t0 = time.perf_counter()
    lams = tuple(sorted(set(int(v) for v in cfg.lambdas)))
    side = lams[-1]
    margin = _margin(cfg)
    spec = grid_for_kernel(cfg.kernel, cfg.spacing, side + margin, side,
                           truncation=cfg.truncation)

    def one(i: int) -> tuple[int, ...]:
        fs = draw_field(cfg.kernel, spec, cfg.master_seed, i, cfg.truncation)
        mask = threshold(slope_field(fs, margin=margin), cfg.level)
        return tuple(int(crossing(mask, Box(0, 0, lam, lam), "horizontal"))
                     for lam in lams)

    bits = np.array(_parallel_map(one, cfg.n_samples, threads), dtype=np.int64)
    rows = []
    for j, lam in enumerate(lams):
        hits = int(bits[:, j].sum())
        lo, hi = wilson_interval(hits, cfg.n_samples)
        rows.append((lam, cfg.n_samples, hits, hits / cfg.n_samples,
                     lo, hi, cfg.master_seed))
    usable = [(lam, 1.0 - r[3]) for lam, r in zip(lams, rows) if 0 < r[2] < r[1]]
    fit = None
    if len(usable) >= 3:
        xs = np.array([u[0] for u in usable], dtype=np.float64)
        ys = np.log([u[1] for u in usable])
        fit = _ols_slope(xs, ys)
    summary = {
        "level": cfg.level,
        "fit_points": len(usable),
        "fit_slope": None if fit is None else fit[0],
        "fit_slope_low": None if fit is None else fit[1],
        "fit_slope_high": None if fit is None else fit[2],
    }
    return ExperimentResult(
        "crossing-decay",
        ("lambda", "n", "hits", "p_hat", "ci_low", "ci_high", "seed"),
        tuple(rows), summary, cfg, time.perf_counter() - t0)


def _paired_drop(a: Array, b: Array) -> dict:
    """Mean of a - b over coupled samples with a 95% normal interval."""
    d = a.astype(np.float64) - b.astype(np.float64)
    n = d.size
    mean = float(d.mean())
    se = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    half = 1.959963984540054 * se
    return {"drop_mean": mean, "drop_low": mean - half, "drop_high": mean + half}


def run_chemical_scaling(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Connection and length-ratio statistics along an endpoint sweep.

    Each sample draws one window wide enough for the farthest endpoint;
    one shortest-path run per sample serves every distance, so the sweep
    is coupled.  Ratios are path length over straight-line length.
    """
    if cfg.level is None:
        raise ConfigError("chemical scaling needs a level")
    t0 = time.perf_counter()
    zs = tuple(sorted(set(int(v) for v in cfg.z_norms)))
    zmax = zs[-1]
    h = cfg.spacing
    margin = _margin(cfg)
    nrows = max(24, zmax // 4)
    mid = nrows // 2
    spec = grid_for_kernel(cfg.kernel, h, zmax + 1 + margin, nrows,
                           truncation=cfg.truncation)

    def one(i: int) -> tuple[float, ...]:
        fs = draw_field(cfg.kernel, spec, cfg.master_seed, i, cfg.truncation)
        mask = threshold(slope_field(fs, margin=margin), cfg.level)
        dist = grid_distances(mask.open, (0, mid), h)
        return tuple(float(dist[mid, z]) for z in zs)

    dists = np.array(_parallel_map(one, cfg.n_samples, threads))
    ratios = dists / (np.array(zs, dtype=np.float64) * h)[None, :]
    conn = np.isfinite(ratios)

    rows = []
    per_z = {}
    pooled = np.sort(ratios[conn]) if conn.any() else np.array([])
    pooled_med = float(np.quantile(pooled, 0.5)) if pooled.size else math.nan
    for j, z in enumerate(zs):
        got = np.sort(ratios[conn[:, j], j])
        n_conn = int(got.size)
        stat = {"n_conn": n_conn,
                "conn_rate": n_conn / cfg.n_samples,
                "median": math.nan, "median_low": math.nan,
                "median_high": math.nan, "q99": math.nan,
                "q99_low": math.nan, "q99_high": math.nan}
        if n_conn >= 2:
            stat["median"] = float(np.quantile(got, 0.5))
            stat["q99"] = float(np.quantile(got, 0.99))
            boot_seed = cfg.master_seed + 7919 * z
            lo, hi = bootstrap_ci(got, lambda v: np.quantile(v, 0.5),
                                  seed=boot_seed)
            stat["median_low"], stat["median_high"] = lo, hi
            lo, hi = bootstrap_ci(got, lambda v: np.quantile(v, 0.99),
                                  seed=boot_seed + 1)
            stat["q99_low"], stat["q99_high"] = lo, hi
        per_z[str(z)] = stat
        for c in cfg.c_values:
            hits = int((conn[:, j] & (ratios[:, j] >= c)).sum())
            lo, hi = wilson_interval(hits, cfg.n_samples)
            rows.append((z, float(c), cfg.n_samples, n_conn, hits,
                         hits / cfg.n_samples, lo, hi, cfg.master_seed))

    exceed2 = {}
    pair_stats = []
    if math.isfinite(pooled_med):
        c2 = 2.0 * pooled_med
        flags = conn & (ratios >= c2)
        for j, z in enumerate(zs):
            hits = int(flags[:, j].sum())
            lo, hi = wilson_interval(hits, cfg.n_samples)
            exceed2[str(z)] = {"p_hat": hits / cfg.n_samples,
                               "ci_low": lo, "ci_high": hi}
        for j in range(len(zs) - 1):
            d = _paired_drop(flags[:, j], flags[:, j + 1])
            d["z_low"], d["z_high"] = zs[j], zs[j + 1]
            pair_stats.append(d)
    q99s = [per_z[str(z)]["q99"] for z in zs]
    finite_q99 = [q for q in q99s if math.isfinite(q)]
    spread = math.nan
    if len(finite_q99) == len(zs) and min(finite_q99) > 0:
        spread = (max(finite_q99) - min(finite_q99)) / min(finite_q99)
    summary = {
        "level": cfg.level,
        "per_z": per_z,
        "pooled_median": pooled_med,
        "exceed_at_2median": exceed2,
        "exceed_pairs": pair_stats,
        "c_star": q99s[-1],
        "q99_rel_spread": spread,
    }
    return ExperimentResult(
        "chemical-scaling",
        ("z_cells", "c", "n", "n_conn", "hits", "p_hat", "ci_low", "ci_high",
         "seed"),
        tuple(rows), summary, cfg, time.perf_counter() - t0)


def run_global_structure(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Ball-to-ball path search: success and length ratio per endpoint pair.

    Endpoint balls have radius (z h)^epsilon in grid length, so success
    means some open path joins the neighborhoods of 0 and z; the ratio
    compares the shortest such path against the straight-line length.
    """
    if cfg.level is None:
        raise ConfigError("global structure needs a level")
    t0 = time.perf_counter()
    zs = tuple(sorted(set(int(v) for v in cfg.z_norms)))
    zmax = zs[-1]
    h = cfg.spacing
    margin = _margin(cfg)
    nrows = max(24, zmax // 4)
    mid = nrows // 2
    ncols = zmax + 1
    spec = grid_for_kernel(cfg.kernel, h, ncols + margin, nrows,
                           truncation=cfg.truncation)

    cols = np.arange(ncols)
    rows_idx = np.arange(nrows)

    def ball(center_col: int, rho: float) -> list[tuple[int, int]]:
        dx = (cols - center_col)[None, :] * h
        dy = (rows_idx - mid)[:, None] * h
        rr, cc = np.nonzero(dx * dx + dy * dy <= rho * rho)
        return list(zip(cc.tolist(), rr.tolist()))

    balls = {}
    for z in zs:
        rho = (z * h) ** cfg.epsilon
        balls[z] = (ball(0, rho), ball(z, rho))

    def one(i: int) -> tuple[float, ...]:
        fs = draw_field(cfg.kernel, spec, cfg.master_seed, i, cfg.truncation)
        mask = threshold(slope_field(fs, margin=margin), cfg.level)
        trusted = mask.open[:, :ncols]
        out = []
        for z in zs:
            srcs, snks = balls[z]
            open_srcs = [p for p in srcs if trusted[p[1], p[0]]]
            if not open_srcs:
                out.append(math.inf)
                continue
            dist = multi_source_distances(trusted, open_srcs, h)
            best = min((float(dist[r, c]) for c, r in snks), default=math.inf)
            out.append(best)
        return tuple(out)

    lengths = np.array(_parallel_map(one, cfg.n_samples, threads))
    ratios = lengths / (np.array(zs, dtype=np.float64) * h)[None, :]
    success = np.isfinite(ratios)

    rows = []
    per_z = {}
    for j, z in enumerate(zs):
        got = np.sort(ratios[success[:, j], j])
        stat = {"success_rate": float(success[:, j].mean()),
                "q25": math.nan, "q50": math.nan, "q75": math.nan,
                "iqr": math.nan}
        if got.size >= 4:
            q25, q50, q75 = (float(np.quantile(got, q)) for q in (0.25, 0.5, 0.75))
            stat.update({"q25": q25, "q50": q50, "q75": q75, "iqr": q75 - q25})
        per_z[str(z)] = stat
        for c in cfg.c_values:
            hits = int((success[:, j] & (ratios[:, j] <= c)).sum())
            lo, hi = wilson_interval(hits, cfg.n_samples)
            rows.append((z, float(c), cfg.n_samples, hits,
                         hits / cfg.n_samples, lo, hi, cfg.master_seed))
    iqrs = [per_z[str(z)]["iqr"] for z in zs]
    finite = [v for v in iqrs if math.isfinite(v)]
    summary = {
        "level": cfg.level,
        "epsilon": cfg.epsilon,
        "per_z": per_z,
        "iqr_nonincreasing": (len(finite) == len(iqrs)
                              and all(b <= a + 1e-12 for a, b in zip(finite, finite[1:]))),
    }
    return ExperimentResult(
        "global-structure",
        ("z_cells", "c", "n", "hits", "p_hat", "ci_low", "ci_high", "seed"),
        tuple(rows), summary, cfg, time.perf_counter() - t0)


def run_truncation_study(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """P(sup over the unit box |alpha - alpha_R| >= epsilon) along the R sweep.

    Every cutoff is applied to the same noise grid as the full field, so
    consecutive radii are compared sample by sample.  The sup location is
    tracked to confirm it falls inside the trusted window.
    """
    radii = tuple(float(r) for r in cfg.radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("cutoff radii must be strictly increasing")
    t0 = time.perf_counter()
    h = cfg.spacing
    eps = cfg.epsilon
    ub = int(round(1.0 / h)) + 1
    margin = _margin(cfg)
    spec = grid_for_kernel(cfg.kernel, h, ub + margin, ub)

    def one(i: int):
        noise = sample_white_noise(spec, cfg.master_seed, i)
        fs = convolve_field(noise, cfg.kernel, spec, (cfg.master_seed, i))
        sf = slope_field(fs, margin=margin)
        sups = []
        for R in radii:
            fsr = truncated_field(noise, cfg.kernel, spec, R,
                                  (cfg.master_seed, i))
            sfr = truncated_slope_field(fsr, R)
            d = np.abs(sf.alpha[:, :ub] - sfr.alpha[:, :ub])
            flat = int(np.argmax(d))
            sups.append((float(d.ravel()[flat]), flat % ub, flat // ub))
        return sups

    per = _parallel_map(one, cfg.n_samples, threads)
    sups = np.array([[s[0] for s in row] for row in per])
    hits = (sups >= eps).astype(np.int64)

    rows = []
    for j, R in enumerate(radii):
        hj = int(hits[:, j].sum())
        lo, hi = wilson_interval(hj, cfg.n_samples)
        peak = int(np.argmax(sups[:, j]))
        px, py = per[peak][j][1], per[peak][j][2]
        rows.append((R, cfg.n_samples, hj, hj / cfg.n_samples, lo, hi,
                     float(sups[:, j].mean()), float(sups[peak, j]),
                     px * h, py * h, cfg.master_seed))

    pairs = []
    for j in range(len(radii) - 1):
        d = _paired_drop(hits[:, j], hits[:, j + 1])
        d["r_low"], d["r_high"] = radii[j], radii[j + 1]
        pairs.append(d)
    total = _paired_drop(hits[:, 0], hits[:, -1])
    summary = {
        "epsilon": eps,
        "pairs": pairs,
        "total_drop": total,
        "monotone_within_ci": all(p["drop_high"] >= 0.0 for p in pairs),
        "strict_total_drop": total["drop_low"] > 0.0,
    }
    return ExperimentResult(
        "truncation-study",
        ("radius", "n", "hits", "p_hat", "ci_low", "ci_high", "mean_sup",
         "max_sup", "max_sup_x", "max_sup_y", "seed"),
        tuple(rows), summary, cfg, time.perf_counter() - t0)


def _hessian_norm(fs) -> Array:
    a, b, c = fs.d2f11, fs.d2f12, fs.d2f22
    return np.abs(0.5 * (a + c)) + np.hypot(0.5 * (a - c), b)


def run_lipschitz_probe(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Grid Lipschitz constant of alpha on the unit box against the
    sampled Hessian sup over the maximizer range.

    The bound compares max |d alpha| / h over axis neighbors with the sup
    of the field's Hessian spectral norm on x in [0, T_max + 1], y in
    [0, 1], both read off the same sample.
    """
    t0 = time.perf_counter()
    h = cfg.spacing
    ub = int(round(1.0 / h)) + 1
    margin = _margin(cfg)
    spec = grid_for_kernel(cfg.kernel, h, ub + margin, ub)

    def one(i: int) -> tuple[float, float, float]:
        fs = draw_field(cfg.kernel, spec, cfg.master_seed, i)
        sf = slope_field(fs, margin=margin)
        box = sf.alpha[:ub, :ub]
        lip = 0.0
        if ub > 1:
            lip = max(float(np.abs(np.diff(box, axis=1)).max()),
                      float(np.abs(np.diff(box, axis=0)).max())) / h
        tmax = float(sf.argmax_t[:ub, :ub].max())
        cols = min(spec.nx, int(math.ceil((tmax + 1.0) / h)) + 1)
        m = float(_hessian_norm(fs)[:ub, :cols].max())
        return lip, tmax, m

    per = _parallel_map(one, cfg.n_samples, threads)
    rows = []
    ratios = []
    for i, (lip, tmax, m) in enumerate(per):
        ratio = lip / m if m > 0 else math.inf
        ratios.append(ratio)
        rows.append((i, lip, tmax, m, ratio, cfg.master_seed))
    arr = np.array(ratios)
    summary = {
        "frac_ratio_le_1": float((arr <= 1.0).mean()),
        "max_ratio": float(arr.max()),
        "mean_lip": float(np.mean([r[1] for r in rows])),
    }
    return ExperimentResult(
        "lipschitz-probe",
        ("sample", "lip", "t_max", "hessian_sup", "ratio", "seed"),
        tuple(rows), summary, cfg, time.perf_counter() - t0)


RUNNERS = {
    "crossing-decay": run_crossing_decay,
    "chemical-scaling": run_chemical_scaling,
    "global-structure": run_global_structure,
    "truncation-study": run_truncation_study,
    "lipschitz-probe": run_lipschitz_probe,
}


def run_experiment(name: str, cfg: ExperimentConfig,
                   threads: int = 1) -> ExperimentResult:
    try:
        runner = RUNNERS[name]
    except KeyError:
        known = ", ".join(sorted(RUNNERS))
        raise ConfigError(f"unknown experiment {name!r}; one of {known}") from None
    return runner(cfg, threads=threads)


def _jsonsafe(obj):
    """Plain-python json content: numpy scalars unboxed, non-finite to None."""
    if isinstance(obj, dict):
        return {str(k): _jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonsafe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    return obj


def _csv_cell(v) -> str:
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return str(int(v))
    return str(v)


def result_csv_bytes(result: ExperimentResult) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def result_json_bytes(result: ExperimentResult) -> bytes:
    doc = {
        "name": result.name,
        "columns": list(result.columns),
        "rows": _jsonsafe([list(r) for r in result.rows]),
        "summary": _jsonsafe(result.summary),
        "config": result.config.to_dict(),
        "tool_version": __version__,
        "manifest": "manifest.json",
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def config_sha256(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_result(result: ExperimentResult, out_dir,
                 threads_used: int = 1) -> dict:
    """Write results.csv, result.json, and manifest.json; returns the manifest.

    The two result files are deterministic; timestamps and wall clock
    live only in the manifest.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    outputs = {}
    for name, blob in (("results.csv", result_csv_bytes(result)),
                       ("result.json", result_json_bytes(result))):
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(blob)
        outputs[name] = hashlib.sha256(blob).hexdigest()
    manifest = {
        "manifest_version": 1,
        "name": result.name,
        "config": result.config.to_dict(),
        "config_sha256": config_sha256(result.config),
        "master_seed": result.config.master_seed,
        "tool_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "wall_clock_s": result.seconds,
        "threads_used": threads_used,
        "outputs": outputs,
    }
    blob = (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode("utf-8")
    with open(os.path.join(out_dir, "manifest.json"), "wb") as fh:
        fh.write(blob)
    return manifest


def run_from_manifest(manifest, threads: int = 1) -> ExperimentResult:
    """Rerun the campaign a manifest describes; results are bitwise stable."""
    if not isinstance(manifest, dict):
        with open(manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    if "name" not in manifest or "config" not in manifest:
        raise ConfigError("manifest needs 'name' and 'config' entries")
    cfg = ExperimentConfig.from_dict(manifest["config"])
    return run_experiment(str(manifest["name"]), cfg, threads=threads)
