"""Acceptance gate: the ten end-to-end checks the project promises.

Every test prints one [PASS]/[FAIL] line with its headline number and wall
time, so `pytest tests/test_acceptance.py` doubles as a report.  Each check
also enforces its time budget.  Seeds are frozen; the statistical checks
were calibrated once and are expected to be stable under rerun, not flaky.
"""

import itertools
import math
import tempfile
import time
from pathlib import Path

import numpy as np

from shadowlab.excursion import (Box, _auto_margin, crossing,
                                 estimate_critical_level, threshold)
from shadowlab.experiments import (ExperimentConfig, result_csv_bytes,
                                   result_json_bytes, run_chemical_scaling,
                                   run_experiment, run_from_manifest,
                                   write_result)
from shadowlab.field import (FieldSample, GridSpec, convolve_field,
                             draw_field, grid_for_kernel, sample_white_noise,
                             truncated_field)
from shadowlab.geometry import (chemical_distance, coarea_check,
                                kac_rice_experiment, level_set_lengths)
from shadowlab.kernels import (Covariance, _covariance_numeric, covariance_at,
                               make_kernel)
from shadowlab.slope import (slope_field, slope_gradient_grid, slope_row_hull,
                             slope_row_bruteforce, truncated_slope_field,
                             window_steps)

GAUSS = make_kernel("gaussian", (1.0, 1.0))


def _report(capsys, num: int, label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {num:02d} {label}: {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def test_01_hull_sweep_matches_bruteforce(capsys):
    h = 0.1
    warm = np.zeros(4)
    slope_row_hull(warm, warm, h)  # budget covers the check, not the JIT
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(1000):
        f = rng.standard_normal(512)
        df1 = rng.standard_normal(512)
        a1, t1 = slope_row_hull(f, df1, h)
        a2, t2 = slope_row_bruteforce(f, df1, h)
        if not (np.array_equal(a1, a2) and np.array_equal(t1, t2)):
            bad += 1
    n_rows = 1000
    # every sign pattern up to length 8, where ties between shifts are dense
    for n in range(2, 9):
        for signs in itertools.product((-1.0, 1.0), repeat=n):
            f = np.array(signs)
            for d in (np.zeros(n), np.full(n, 0.5)):
                a1, t1 = slope_row_hull(f, d, h)
                a2, t2 = slope_row_bruteforce(f, d, h)
                if not (np.array_equal(a1, a2) and np.array_equal(t1, t2)):
                    bad += 1
                n_rows += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 5.0
    _report(capsys, 1, "hull sweep equals bruteforce (values and argmax)", ok,
            f"{bad} mismatched rows of {n_rows}, {dt:.1f}s (budget 5s)")


def test_02_coarea_identity(capsys):
    t0 = time.perf_counter()
    # analytic case: f quadratic in x with negative curvature, so the sup
    # sits at t = 0 and alpha is the plane -x + 2y exactly
    spec = GridSpec((0.0, 0.0), 0.1, 60, 40, 0)
    ys, xs = np.meshgrid(np.arange(40) * 0.1, np.arange(60) * 0.1,
                         indexing="ij")
    zero = np.zeros_like(xs)
    fs = FieldSample(spec, GAUSS, (0, 0), None,
                     f=-xs ** 2 / 2 + 2 * xs * ys, df1=-xs + 2 * ys,
                     df2=2 * xs, d2f11=zero - 1.0, d2f12=zero + 2.0,
                     d2f22=zero)
    sf = slope_field(fs, margin=0)
    box = Box(2, 2, 25, 30)
    a = sf.alpha[box.row0:box.row0 + box.nrows + 1,
                 box.col0:box.col0 + box.ncols + 1]
    corners = np.array([a[0, 0], a[0, -1], a[-1, 0], a[-1, -1]])
    # contour length of a plane is piecewise linear in the level with kinks
    # at the box corner values; trapezoid nodes there make the rhs exact
    levels = np.unique(np.concatenate(
        [np.linspace(corners.min(), corners.max(), 201), np.sort(corners)]))
    plane_err = coarea_check(sf, fs, box,
                             lambda u: np.ones_like(u), levels).rel_err

    h, margin, ny = 0.1, 150, 40
    spec = grid_for_kernel(GAUSS, h, 26 + margin, ny)
    box = Box(0, 5, 25, 30)
    errs = []
    for i in range(50):
        fs = draw_field(GAUSS, spec, 77, i)
        sf = slope_field(fs, margin=margin)
        a = sf.alpha[box.row0:box.row0 + box.nrows + 1,
                     box.col0:box.col0 + box.ncols + 1]
        lo, hi = float(a.min()), float(a.max())
        mid, s = (lo + hi) / 2, (hi - lo) / 8
        rep = coarea_check(sf, fs, box,
                           lambda u: np.exp(-0.5 * ((u - mid) / s) ** 2),
                           np.linspace(lo, hi, 200))
        errs.append(rep.rel_err)
    frac = float(np.mean(np.asarray(errs) <= 0.05))
    dt = time.perf_counter() - t0
    ok = plane_err <= 1e-6 and frac >= 0.9 and dt < 120.0
    _report(capsys, 2, "coarea identity, analytic plane and sampled fields", ok,
            f"plane rel_err={plane_err:.2e}, {frac:.0%} of 50 samples "
            f"within 5%, {dt:.1f}s (budget 120s)")


def test_03_maximizer_gradient_matches_central_differences(capsys):
    t0 = time.perf_counter()
    h, trusted, ny = 0.025, 128, 128
    margin = _auto_margin(GAUSS, h)
    spec = grid_for_kernel(GAUSS, h, trusted + margin, ny)
    nx = spec.nx
    n_ok = n_qual = 0
    for i in range(20):
        fs = draw_field(GAUSS, spec, 123, i)
        sf = slope_field(fs, margin=margin)
        gx, gy = slope_gradient_grid(fs, sf)
        cy, cx = np.gradient(sf.alpha, h)
        k = np.rint(sf.argmax_t / h).astype(np.int64)
        t = sf.argmax_t
        # qualified: runner-up gap at least h/2, maximizer well inside the
        # ray window, and no argmax branch swap against any grid neighbor
        # (central differences straddle the swap otherwise)
        interior = (np.arange(nx)[None, :] + k) <= nx - 6
        jump = np.zeros_like(t, dtype=bool)
        d = np.abs(np.diff(t, axis=1)) > 4 * h
        jump[:, 1:] |= d
        jump[:, :-1] |= d
        d = np.abs(np.diff(t, axis=0)) > 4 * h
        jump[1:, :] |= d
        jump[:-1, :] |= d
        qual = interior & ~jump & (sf.gap >= 0.5 * h)
        qual[:, trusted:] = False
        qual[0, :] = qual[-1, :] = False
        qual[:, 0] = qual[:, -1] = False
        rel = np.hypot(gx - cx, gy - cy) / np.maximum(np.hypot(cx, cy), 1e-12)
        n_qual += int(qual.sum())
        n_ok += int((rel[qual] <= 5e-2).sum())
    frac = n_ok / n_qual
    dt = time.perf_counter() - t0
    ok = frac >= 0.95 and n_qual >= 10000 and dt < 60.0
    _report(capsys, 3, "maximizer gradient vs central differences", ok,
            f"{frac:.2%} of {n_qual} qualified cells within 5e-2 over "
            f"20 samples, {dt:.1f}s (budget 60s)")


def test_04_contour_lengths(capsys):
    t0 = time.perf_counter()
    h, n = 0.05, 81
    xs = (np.arange(n) - (n - 1) / 2) * h
    X, Y = np.meshgrid(xs, xs)
    box = Box(0, 0, n - 1, n - 1)
    circ = level_set_lengths(np.hypot(X, Y), [1.0], h, box)[0]
    circ_rel = abs(circ - 2 * math.pi) / (2 * math.pi)
    line = level_set_lengths(Y, [0.0], h, box)[0]
    line_err = abs(line - (n - 1) * h)
    dt = time.perf_counter() - t0
    ok = circ_rel <= 0.01 and line_err <= 1e-12 and dt < 1.0
    _report(capsys, 4, "marching squares circle and axis line", ok,
            f"circle rel={circ_rel:.2e}, line err={line_err:.1e}, "
            f"{dt:.2f}s (budget 1s)")


def test_05_covariance_consistency(capsys):
    t0 = time.perf_counter()
    k0 = covariance_at(Covariance(GAUSS), np.zeros(2))
    kq = _covariance_numeric(GAUSS, np.zeros(2), GAUSS.params[0] / 32.0)
    quad_rel = abs(kq - k0) / k0
    spec = grid_for_kernel(GAUSS, 0.5, 256, 256)
    acc = 0.0
    for i in range(200):
        f = draw_field(GAUSS, spec, 31, i).f
        acc += float(np.mean(f * f))
    var_rel = abs(acc / 200 - k0) / k0
    dt = time.perf_counter() - t0
    ok = var_rel <= 0.03 and quad_rel <= 1e-6 and dt < 60.0
    _report(capsys, 5, "field variance against (q*q)(0)", ok,
            f"var rel dev={var_rel:.4f} over 200 samples at 256^2, "
            f"quadrature rel={quad_rel:.1e}, {dt:.1f}s (budget 60s)")


def test_06_monotonicity_suite(capsys):
    t0 = time.perf_counter()
    h, trusted, ny = 0.5, 40, 40
    margin = _auto_margin(GAUSS, h)
    spec = grid_for_kernel(GAUSS, h, trusted + margin, ny)
    levels = (0.6, 1.0, 1.4, 1.8, 2.2)
    radii = (2.0, 4.0, 8.0)
    cut = spec.nx - window_steps(radii[-1], h)
    v_nest = v_cross = v_trunc = v_chem = 0
    n_finite = 0
    for i in range(100):
        fs = draw_field(GAUSS, spec, 808, i)
        sf = slope_field(fs, margin=margin)
        masks = [threshold(sf, lv) for lv in levels]
        for m1, m2 in zip(masks, masks[1:]):
            if np.any(m1.open & ~m2.open):
                v_nest += 1
        cr = [crossing(mk, Box(0, 0, trusted, ny)) for mk in masks]
        for c1, c2 in zip(cr, cr[1:]):
            if c1 and not c2:
                v_cross += 1
        als = [truncated_slope_field(fs, R).alpha for R in radii]
        for a1, a2 in zip(als, als[1:]):
            if np.any(a1[:, :cut] > a2[:, :cut]):
                v_trunc += 1
        if np.any(als[-1][:, :trusted] > sf.alpha[:, :trusted]):
            v_trunc += 1
        a, b = (0, ny // 2), (trusted - 1, ny // 2)
        ds = [chemical_distance(mk, a, b).length for mk in masks]
        n_finite += sum(1 for d in ds if math.isfinite(d))
        for d1, d2 in zip(ds, ds[1:]):
            if d2 > d1:
                v_chem += 1
    dt = time.perf_counter() - t0
    viol = v_nest + v_cross + v_trunc + v_chem
    ok = viol == 0 and n_finite > 0 and dt < 120.0
    _report(capsys, 6, "coupled monotonicity (masks, crossings, windows, paths)", ok,
            f"0 violations expected, got nest={v_nest} cross={v_cross} "
            f"window={v_trunc} path={v_chem} over 100 samples "
            f"({n_finite} finite paths), {dt:.1f}s (budget 120s)")


def test_07_kac_rice_levels(capsys):
    t0 = time.perf_counter()
    rep = kac_rice_experiment(GAUSS, spacing=0.25, n_origin=2000,
                              n_draws=200, n_levels=25, box_cells=32,
                              master_seed=2026)
    dt = time.perf_counter() - t0
    ok = (rep.frac_overlap >= 0.8 and rep.n_origin >= 2000
          and rep.n_draws >= 200 and dt < 1800.0)
    _report(capsys, 7, "expected level-set length, two independent estimates", ok,
            f"CI overlap on {rep.frac_overlap:.0%} of {len(rep.rows)} bulk "
            f"levels ({rep.n_origin} origin samples, {rep.n_draws} draws), "
            f"{dt:.0f}s (budget 1800s)")


def test_08_chemical_distance_scaling(capsys):
    t0 = time.perf_counter()
    cl = estimate_critical_level(GAUSS, spacing=0.5, square_cells=32,
                                 bracket=(0.0, 2.0), tol=0.1, n_samples=200,
                                 master_seed=404)
    level = cl.estimate + 3.0 * (cl.level_high - cl.level_low)
    cfg = ExperimentConfig(kernel=GAUSS, spacing=0.5, level=level,
                           z_norms=(64, 128, 256), n_samples=8000,
                           master_seed=505)
    s = run_chemical_scaling(cfg, threads=4).summary
    spread = s["q99_rel_spread"]
    ps = [s["exceed_at_2median"][str(z)]["p_hat"] for z in (64, 128, 256)]
    strict = (all(p1 > p2 for p1, p2 in zip(ps, ps[1:]))
              and all(p["drop_low"] > 0.0 for p in s["exceed_pairs"]))
    dt = time.perf_counter() - t0
    ok = spread <= 0.25 and strict and dt < 3600.0
    _report(capsys, 8, "path length ratio scaling at a fixed excursion level", ok,
            f"level={level:.3f}, q99 spread={spread:.3f} (bar 0.25), "
            f"exceedance at 2x median={ps} strictly decreasing at 95%: "
            f"{strict}, {dt:.0f}s (budget 3600s)")


def test_09_truncation_decay(capsys):
    t0 = time.perf_counter()
    kern = make_kernel("power_tail", (1.0, 1.0, 2.6), trunc_radius=64.0)
    cfg = ExperimentConfig(kernel=kern, spacing=0.5,
                           radii=(4.0, 8.0, 16.0, 32.0), epsilon=0.1,
                           n_samples=400, master_seed=606)
    res = run_experiment("truncation-study", cfg, threads=4)
    ps = [row[3] for row in res.rows]
    strict = all(p1 > p2 for p1, p2 in zip(ps, ps[1:]))
    within_ci = res.summary["monotone_within_ci"]
    total = res.summary["strict_total_drop"]

    # exact case: the window is shorter than the cutoff, so the windowed
    # sup sees identical candidates and the two fields share every byte
    spec = grid_for_kernel(GAUSS, 0.5, 64, 24)
    exact = True
    for i in range(5):
        noise = sample_white_noise(spec, 909, i)
        fs = convolve_field(noise, GAUSS, spec, (909, i))
        fsr = truncated_field(noise, GAUSS, spec, 34.0, (909, i))
        same = np.array_equal(slope_field(fs, margin=0).alpha,
                              truncated_slope_field(fsr, 34.0).alpha)
        exact = exact and same
    dt = time.perf_counter() - t0
    ok = strict and within_ci and total and exact and dt < 600.0
    _report(capsys, 9, "windowed-field error decays in the cutoff", ok,
            f"p_hats={ps} strictly decreasing={strict} within coupled "
            f"CIs={within_ci and total}, full-window case bitwise={exact}, "
            f"{dt:.0f}s (budget 600s)")


def test_10_manifest_reruns_bitwise(capsys):
    t0 = time.perf_counter()
    cases = [
        ("crossing-decay",
         ExperimentConfig(kernel=GAUSS, spacing=0.5, level=1.0,
                          lambdas=(8, 12, 18), n_samples=40, master_seed=11)),
        ("truncation-study",
         ExperimentConfig(kernel=GAUSS, spacing=0.5, radii=(2.0, 4.0),
                          epsilon=0.1, n_samples=20, master_seed=12)),
    ]
    n_same = 0
    for name, cfg in cases:
        res1 = run_experiment(name, cfg, threads=1)
        with tempfile.TemporaryDirectory() as d:
            write_result(res1, d, threads_used=1)
            out = Path(d)
            csv1 = (out / "results.csv").read_bytes()
            json1 = (out / "result.json").read_bytes()
            res2 = run_from_manifest(out / "manifest.json", threads=4)
            if (result_csv_bytes(res2) == csv1
                    and result_json_bytes(res2) == json1):
                n_same += 1
    dt = time.perf_counter() - t0
    ok = n_same == len(cases) and dt < 300.0
    _report(capsys, 10, "experiments rerun from manifests, any thread count", ok,
            f"{n_same}/{len(cases)} experiment types bitwise identical "
            f"under threads 1 vs 4, {dt:.1f}s (budget 300s)")
