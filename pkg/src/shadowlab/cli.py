"""Single-binary front end; one subcommand per module operation.

A config file is a JSON object whose keys mirror the long flag names;
flags override the file. The seed falls back to the SHADOWLAB_SEED
environment variable, then to 0. Every run that writes files also
writes a manifest.json beside them recording the resolved config, its
hash, the master seed, and the sha256 of each output, so any result is
reproducible from the manifest alone; JSON payloads carry a pointer
back to that manifest. Passing '-' as the output directory streams the
result header to standard output instead of writing anything.

Result-producing subcommands write both a CSV table and a JSON document;
--format picks which of the two is streamed when the output is '-'.

Exit codes: 0 when all requested outputs were written, 2 for config,
bounds, or consistency problems, 3 for a malformed snapshot. All
diagnostics go to the error stream.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

from . import __version__
from .errors import BoundsError, ComponentError, ConfigError, SupportError
from .excursion import Box, crossing, estimate_critical_level, threshold
from .experiments import (ExperimentConfig, RUNNERS, _csv_cell, _jsonsafe,
                          result_csv_bytes, result_json_bytes, run_experiment,
                          write_result)
from .field import FieldSample, draw_field, grid_for_kernel
from .geometry import chemical_distance, kac_rice_experiment
from .kernels import Kernel, KernelError, make_kernel
from .render import mask_svg
from .slope import SlopeField, slope_field
from .snapshot import SnapshotFormatError, field_header, read_snapshot, write_snapshot


# --------------------------------------------------------------------------
# config resolution: flag, then config-file key, then default


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return doc


def _get(args, cfg: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is None:
        v = cfg.get(key)
    return default if v is None else v


def _require(args, cfg: dict, key: str):
    v = _get(args, cfg, key)
    if v is None:
        raise ConfigError(f"missing required config field {key!r}")
    return v


def _parse_seed(v) -> int:
    try:
        s = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {v!r}") from None
    if not 0 <= s < 2 ** 64:
        raise ConfigError("seed must fit an unsigned 64-bit integer")
    return s


def _resolve_seed(args, cfg: dict) -> int:
    if getattr(args, "seed", None) is not None:
        return _parse_seed(args.seed)
    if cfg.get("seed") is not None:
        return _parse_seed(cfg["seed"])
    env = os.environ.get("SHADOWLAB_SEED")
    if env is not None:
        return _parse_seed(env)
    return 0


def _resolve_kernel(args, cfg: dict) -> Kernel:
    """Kernel from flags over a config entry, which may be a table or a name."""
    entry = cfg.get("kernel")
    table = entry if isinstance(entry, dict) else {}
    family = getattr(args, "kernel", None)
    if family is None:
        family = entry if isinstance(entry, str) else table.get("family")
    if family is None:
        raise ConfigError("missing required config field 'kernel'")
    base = list(table.get("params") or [])

    def pick(flag, idx, fallback):
        if flag is not None:
            return float(flag)
        if idx < len(base):
            return float(base[idx])
        return fallback

    params = [pick(getattr(args, "scale", None), 0, 1.0),
              pick(getattr(args, "amplitude", None), 1, 1.0)]
    if family == "power_tail":
        params.append(pick(getattr(args, "beta", None), 2, 3.0))
    trunc = getattr(args, "trunc_radius", None)
    if trunc is None:
        trunc = table.get("trunc_radius")
    return make_kernel(str(family), params, trunc)


def _parse_grid(v) -> tuple[int, int]:
    if isinstance(v, int):
        return v, v
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError("grid needs one size or a pair")
        return int(v[0]), int(v[1])
    parts = str(v).lower().split("x")
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise ConfigError(f"cannot parse grid size {v!r}")


def _parse_pair(v, name: str) -> tuple[int, int]:
    if v is None:
        raise ConfigError(f"missing required config field {name!r}")
    vals = v if isinstance(v, (list, tuple)) else str(v).split(",")
    if len(vals) != 2:
        raise ConfigError(f"{name} needs col,row")
    return int(vals[0]), int(vals[1])


def _parse_box(v) -> Box | None:
    if v is None:
        return None
    vals = v if isinstance(v, (list, tuple)) else str(v).split(",")
    if len(vals) != 4:
        raise ConfigError("box needs col0,row0,ncols,nrows")
    return Box(int(vals[0]), int(vals[1]), int(vals[2]), int(vals[3]))


# --------------------------------------------------------------------------
# output plumbing


def _sha(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def _csv_table(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_doc(name: str, columns, rows, summary: dict, config: dict) -> bytes:
    doc = {
        "name": name,
        "columns": list(columns),
        "rows": _jsonsafe([list(r) for r in rows]),
        "summary": _jsonsafe(summary),
        "config": _jsonsafe(config),
        "tool_version": __version__,
        "manifest": "manifest.json",
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _write_run(out_dir, files: dict, subcommand: str, config: dict, seed: int) -> dict:
    """Write payloads plus the manifest that makes them reproducible."""
    os.makedirs(out_dir, exist_ok=True)
    outputs = {}
    for name, blob in files.items():
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(blob)
        outputs[name] = _sha(blob)
    config = _jsonsafe(config)
    manifest = {
        "manifest_version": 1,
        "subcommand": subcommand,
        "config": config,
        "config_sha256": _sha(json.dumps(config, sort_keys=True).encode("utf-8")),
        "master_seed": seed,
        "tool_version": __version__,
        "out_dir": str(out_dir),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest


def _emit_result(args, cfg: dict, name: str, columns, rows, summary: dict,
                 config: dict, seed: int, extra_files: dict | None = None) -> int:
    """Stream to stdout for out '-', otherwise write csv+json+manifest."""
    out = _get(args, cfg, "out", ".")
    fmt = _get(args, cfg, "format", "csv")
    if out == "-":
        if fmt == "json":
            sys.stdout.write(_json_doc(name, columns, rows, summary, config).decode("utf-8"))
        else:
            sys.stdout.write(_csv_table(columns, rows).decode("utf-8"))
        return 0
    files = {f"{name}.csv": _csv_table(columns, rows),
             f"{name}.json": _json_doc(name, columns, rows, summary, config)}
    if extra_files:
        files.update(extra_files)
    _write_run(out, files, name, config, seed)
    return 0


def _read_slope(path) -> SlopeField:
    obj = read_snapshot(path)
    if not isinstance(obj, SlopeField):
        raise ConfigError(f"{path} holds a field snapshot; this command needs a slope snapshot")
    return obj


def _input_echo(path) -> dict:
    with open(path, "rb") as fh:
        return {"path": str(path), "sha256": _sha(fh.read())}


# --------------------------------------------------------------------------
# subcommands


def cmd_field(args) -> int:
    cfg = _load_config(args.config)
    kernel = _resolve_kernel(args, cfg)
    seed = _resolve_seed(args, cfg)
    nx, ny = _parse_grid(_require(args, cfg, "grid"))
    spacing = float(_get(args, cfg, "spacing", 0.5))
    truncation = _get(args, cfg, "truncation")
    truncation = None if truncation is None else float(truncation)
    count = int(_get(args, cfg, "count", 1))
    if count < 1:
        raise ConfigError("count must be at least 1")
    spec = grid_for_kernel(kernel, spacing, nx, ny, truncation=truncation)
    samples = [draw_field(kernel, spec, seed, i, truncation) for i in range(count)]
    out = _get(args, cfg, "out", ".")
    if out == "-":
        for fs in samples:
            print(json.dumps(field_header(fs), sort_keys=True))
        return 0
    files = {}
    for i, fs in enumerate(samples):
        buf = io.BytesIO()
        write_snapshot(buf, fs)
        files[f"field_{i:03d}.shdw"] = buf.getvalue()
    config = {"kernel": kernel.to_dict(), "grid": [nx, ny], "spacing": spacing,
              "truncation": truncation, "count": count, "seed": seed}
    _write_run(out, files, "field", config, seed)
    return 0


def cmd_slope(args) -> int:
    cfg = _load_config(args.config)
    obj = read_snapshot(args.snapshot)
    if not isinstance(obj, FieldSample):
        raise ConfigError(f"{args.snapshot} holds a slope snapshot; slope needs a field snapshot")
    level_floor = _get(args, cfg, "level_floor")
    level_floor = None if level_floor is None else float(level_floor)
    margin = _get(args, cfg, "margin")
    margin = None if margin is None else int(margin)
    sf = slope_field(obj, level_floor=level_floor, margin=margin)
    buf = io.BytesIO()
    header = write_snapshot(buf, sf)
    out = _get(args, cfg, "out", ".")
    if out == "-":
        print(json.dumps(header, sort_keys=True))
        return 0
    config = {"input": _input_echo(args.snapshot), "level_floor": level_floor,
              "margin": sf.margin}
    _write_run(out, {"slope.shdw": buf.getvalue()}, "slope", config, obj.seed[0])
    return 0


def cmd_perc(args) -> int:
    cfg = _load_config(args.config)
    sf = _read_slope(args.snapshot)
    level = float(_require(args, cfg, "level"))
    direction = _get(args, cfg, "direction", "horizontal")
    connectivity = _get(args, cfg, "connectivity", "eight")
    box = _parse_box(_get(args, cfg, "box"))
    mask = threshold(sf, level, connectivity)
    crossed = crossing(mask, box, direction)
    box_list = None if box is None else [box.col0, box.row0, box.ncols, box.nrows]
    columns = ("level", "direction", "connectivity", "crossing", "n_components")
    rows = [(level, direction, connectivity, int(crossed), mask.n_components)]
    summary = {"crossing": bool(crossed), "n_components": mask.n_components,
               "box": box_list, "spacing": sf.spec.spacing, "margin": mask.margin}
    config = {"input": _input_echo(args.snapshot), "level": level,
              "direction": direction, "connectivity": connectivity, "box": box_list}
    extra = None
    svg_name = _get(args, cfg, "svg")
    if svg_name is not None:
        extra = {str(svg_name): mask_svg(mask).encode("utf-8")}
    return _emit_result(args, cfg, "perc", columns, rows, summary, config,
                        sf.seed[0], extra)


def cmd_chemdist(args) -> int:
    cfg = _load_config(args.config)
    sf = _read_slope(args.snapshot)
    level = float(_require(args, cfg, "level"))
    a = _parse_pair(_get(args, cfg, "a"), "a")
    b = _parse_pair(_get(args, cfg, "b"), "b")
    mask = threshold(sf, level, "eight")
    res = chemical_distance(mask, a, b)
    columns = ("level", "a_col", "a_row", "b_col", "b_row", "found", "length", "n_cells")
    rows = [(level, a[0], a[1], b[0], b[1], int(res.found), res.length, len(res.cells))]
    summary = {"found": res.found, "length": res.length,
               "euclid": ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5 * sf.spec.spacing}
    config = {"input": _input_echo(args.snapshot), "level": level,
              "a": list(a), "b": list(b)}
    return _emit_result(args, cfg, "chemdist", columns, rows, summary, config,
                        sf.seed[0])


def cmd_kacrice(args) -> int:
    cfg = _load_config(args.config)
    kernel = _resolve_kernel(args, cfg)
    seed = _resolve_seed(args, cfg)
    spacing = float(_get(args, cfg, "spacing", 0.25))
    truncation = _get(args, cfg, "truncation")
    truncation = None if truncation is None else float(truncation)
    n_origin = int(_get(args, cfg, "n_origin", 2000))
    n_draws = int(_get(args, cfg, "n_draws", 200))
    n_levels = int(_get(args, cfg, "n_levels", 25))
    box_cells = int(_get(args, cfg, "box_cells", 32))
    report = kac_rice_experiment(
        kernel, spacing=spacing, n_origin=n_origin, n_draws=n_draws,
        n_levels=n_levels, box_cells=box_cells, master_seed=seed,
        truncation=truncation)
    columns = ("level", "lhs", "lhs_low", "lhs_high", "rhs", "rhs_low",
               "rhs_high", "overlap")
    rows = [(r.level, r.lhs, r.lhs_low, r.lhs_high, r.rhs, r.rhs_low,
             r.rhs_high, int(r.overlap)) for r in report.rows]
    summary = {"frac_overlap": report.frac_overlap, "bandwidth": report.bandwidth,
               "vol": report.vol, "n_origin": report.n_origin,
               "n_draws": report.n_draws, "confidence": report.confidence}
    config = {"kernel": kernel.to_dict(), "spacing": spacing,
              "truncation": truncation, "n_origin": n_origin,
              "n_draws": n_draws, "n_levels": n_levels,
              "box_cells": box_cells, "seed": seed}
    return _emit_result(args, cfg, "kacrice", columns, rows, summary, config, seed)


def cmd_lc(args) -> int:
    cfg = _load_config(args.config)
    kernel = _resolve_kernel(args, cfg)
    seed = _resolve_seed(args, cfg)
    spacing = float(_get(args, cfg, "spacing", 0.5))
    truncation = _get(args, cfg, "truncation")
    truncation = None if truncation is None else float(truncation)
    square_cells = int(_get(args, cfg, "square_cells", 32))
    raw = _require(args, cfg, "bracket")
    vals = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
    if len(vals) != 2:
        raise ConfigError("bracket needs lo,hi")
    bracket = (float(vals[0]), float(vals[1]))
    tol = float(_get(args, cfg, "tol", 0.05))
    n_samples = int(_get(args, cfg, "n_samples", 200))
    direction = _get(args, cfg, "direction", "horizontal")
    margin = _get(args, cfg, "margin")
    margin = None if margin is None else int(margin)
    res = estimate_critical_level(
        kernel, spacing=spacing, square_cells=square_cells, bracket=bracket,
        tol=tol, n_samples=n_samples, master_seed=seed, truncation=truncation,
        margin=margin, direction=direction)
    columns = ("level", "p_hat")
    rows = [(lv, p) for lv, p in res.probes]
    summary = {"estimate": res.estimate, "level_low": res.level_low,
               "level_high": res.level_high, "tol": res.tol,
               "n_samples": res.n_samples, "square_cells": res.square_cells,
               "monotone_ok": res.monotone_ok}
    config = {"kernel": kernel.to_dict(), "spacing": spacing,
              "truncation": truncation, "square_cells": square_cells,
              "bracket": list(bracket), "tol": tol, "n_samples": n_samples,
              "direction": direction, "margin": margin, "seed": seed}
    return _emit_result(args, cfg, "lc", columns, rows, summary, config, seed)


def cmd_experiment(args) -> int:
    if args.config is None:
        raise ConfigError("missing required config field 'config'")
    doc = _load_config(args.config)
    if "manifest_version" in doc or ("name" in doc and "config" in doc):
        if str(doc.get("name")) != args.name:
            raise ConfigError(
                f"manifest describes {doc.get('name')!r}, not {args.name!r}")
        cfg_doc = doc["config"]
    else:
        cfg_doc = doc
    if not isinstance(cfg_doc, dict):
        raise ConfigError("experiment config must be a JSON object")
    ecfg = ExperimentConfig.from_dict(cfg_doc)
    over = {}
    if args.seed is not None:
        over["master_seed"] = _parse_seed(args.seed)
    elif "master_seed" not in cfg_doc:
        env = os.environ.get("SHADOWLAB_SEED")
        if env is not None:
            over["master_seed"] = _parse_seed(env)
    if args.level is not None:
        over["level"] = float(args.level)
    if args.n_samples is not None:
        over["n_samples"] = int(args.n_samples)
    if over:
        ecfg = replace(ecfg, **over)
    threads = 1 if args.threads is None else int(args.threads)
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    result = run_experiment(args.name, ecfg, threads=threads)
    out = args.out if args.out is not None else "."
    if out == "-":
        blob = result_json_bytes(result) if args.format == "json" else result_csv_bytes(result)
        sys.stdout.write(blob.decode("utf-8"))
        return 0
    write_result(result, out, threads_used=threads)
    return 0


# --------------------------------------------------------------------------
# parser and entry point


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="shadowlab",
        description="Simulation lab for the directional slope field of a "
                    "smoothed white-noise plane.")
    top.add_argument("--version", action="version",
                     version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="cmd", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config; flags override its keys")
    common.add_argument("--seed", type=int,
                        help="master seed (fallback: SHADOWLAB_SEED, then 0)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory, or '-' for stdout (default .)")
    common.add_argument("--threads", type=int,
                        help="worker cap for experiment campaigns")
    common.add_argument("--format", choices=("csv", "json"),
                        help="serialization streamed when --out is '-'")

    kern = argparse.ArgumentParser(add_help=False)
    kern.add_argument("--kernel", metavar="FAMILY",
                      help="gaussian, bump, or power_tail")
    kern.add_argument("--scale", type=float, help="kernel length scale")
    kern.add_argument("--amplitude", type=float)
    kern.add_argument("--beta", type=float,
                      help="tail decay exponent (power_tail only)")
    kern.add_argument("--trunc-radius", type=float, dest="trunc_radius",
                      help="override the kernel support radius")
    kern.add_argument("--truncation", type=float,
                      help="cutoff diameter applied when sampling the field")
    kern.add_argument("--spacing", type=float, help="grid spacing h")

    p = sub.add_parser("field", parents=[common, kern],
                       help="draw field snapshots")
    p.add_argument("--grid", help="window size in cells, N or NXxNY")
    p.add_argument("--count", type=int, help="independent samples to draw")

    p = sub.add_parser("slope", parents=[common],
                       help="slope field of a field snapshot")
    p.add_argument("snapshot", help="input field snapshot")
    p.add_argument("--level-floor", type=float, dest="level_floor",
                   help="lowest level the censoring margin must protect")
    p.add_argument("--margin", type=int, help="explicit margin columns")

    p = sub.add_parser("perc", parents=[common],
                       help="threshold mask, components, box crossing")
    p.add_argument("snapshot", help="input slope snapshot")
    p.add_argument("--level", type=float)
    p.add_argument("--direction", choices=("horizontal", "vertical"))
    p.add_argument("--connectivity", choices=("eight", "four"))
    p.add_argument("--box", help="col0,row0,ncols,nrows")
    p.add_argument("--svg", metavar="NAME",
                   help="also render the mask to NAME in the output dir")

    p = sub.add_parser("chemdist", parents=[common],
                       help="shortest open path between two cells")
    p.add_argument("snapshot", help="input slope snapshot")
    p.add_argument("--level", type=float)
    p.add_argument("--a", help="start cell, col,row")
    p.add_argument("--b", help="end cell, col,row")

    p = sub.add_parser("kacrice", parents=[common, kern],
                       help="contour length against the pointwise rate")
    p.add_argument("--n-origin", type=int, dest="n_origin")
    p.add_argument("--n-draws", type=int, dest="n_draws")
    p.add_argument("--n-levels", type=int, dest="n_levels")
    p.add_argument("--box-cells", type=int, dest="box_cells")

    p = sub.add_parser("lc", parents=[common, kern],
                       help="bisect the level where square crossing hits 1/2")
    p.add_argument("--square-cells", type=int, dest="square_cells")
    p.add_argument("--bracket", help="level bracket lo,hi")
    p.add_argument("--tol", type=float)
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--direction", choices=("horizontal", "vertical"))
    p.add_argument("--margin", type=int)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a named campaign")
    p.add_argument("name", metavar="NAME", help=", ".join(sorted(RUNNERS)))
    p.add_argument("--level", type=float, help="override the excursion level")
    p.add_argument("--n-samples", type=int, dest="n_samples",
                   help="override the sample count")
    return top


_DISPATCH = {
    "field": cmd_field,
    "slope": cmd_slope,
    "perc": cmd_perc,
    "chemdist": cmd_chemdist,
    "kacrice": cmd_kacrice,
    "lc": cmd_lc,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _DISPATCH[args.cmd](args)
    except SnapshotFormatError as e:
        print(f"snapshot format error: {e}", file=sys.stderr)
        return 3
    except BoundsError as e:
        print(f"bounds error: {e}", file=sys.stderr)
        return 2
    except (ConfigError, KernelError, SupportError, ComponentError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
