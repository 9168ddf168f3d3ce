"""Batch front end: ``nma <verb> --config <file> [--out DIR] [...]``.

Verbs
-----
``crb``          worst-case bounds for one case/geometry (+ optional grid search)
``optimize``     antenna-position optimization (closed form or sampling)
``music``        seeded Monte Carlo MSE against the bounds
``correlation``  steering-correlation maps and lobe metrics
``sweep``        re-optimized scheme comparison along an snr/antennas/aperture axis

Every output file embeds the fully resolved configuration and the package
version, so runs are self-describing; identical config + seed reproduces
identical bytes.  Exit status: 0 all requested cells succeeded, 1 some sweep
cells failed, 2 configuration or validation error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__, channel, correlation, crb, music, optimize
from .config import (
    ConfigError,
    RunConfig,
    config_from_dict,
    config_header_lines,
    load_config,
)
from .geometry import (
    BENCHMARK_KINDS,
    Geometry,
    Scenario,
    TargetParams1D,
    TargetParams2D,
    benchmark_geometry,
    geometry_from_csv,
    geometry_to_csv,
    validate,
)
from .music import GridSpec


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _csv_text(header_lines: list[str], columns: list[str], rows: list[Mapping[str, Any]]) -> str:
    out = [f"# {line}" for line in header_lines]
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(_fmt(row.get(c)) for c in columns))
    return "\n".join(out) + "\n"


def _json_text(payload: dict, resolved: dict) -> str:
    doc = {"nma_version": __version__, "config": resolved, **payload}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _target_params(cfg: RunConfig):
    sc, t = cfg.scenario, cfg.target
    r = t.get("r", sc.r_max)
    if sc.ndim == 1:
        return TargetParams1D(u=t.get("u", 0.0), r=r)
    return TargetParams2D(u=t.get("u", 0.0), v=t.get("v", 0.0), r=r)


def _resolve_geometry(spec: Any, sc: Scenario, case: str, cfg: RunConfig) -> Geometry:
    """Geometry from a config value: benchmark kind, 'closed-form', 'optimized', or CSV path."""
    if spec is None:
        spec = "closed-form" if sc.ndim == 1 else "sparse-upa"
    if isinstance(spec, str):
        s = spec.lower()
        if s in BENCHMARK_KINDS:
            return benchmark_geometry(s, sc)
        if s == "closed-form":
            if sc.ndim != 1:
                raise ConfigError("closed-form geometry exists only for linear arrays")
            return optimize.closed_form_apv(sc)
        if s == "optimized":
            return _optimized_geometry(case, sc, cfg.target, cfg.verb_options("optimize"))
        p = Path(spec)
        if p.exists():
            return geometry_from_csv(p.read_text())
    raise ConfigError(f"cannot resolve geometry {spec!r}")


def _optimized_geometry(
    case: str, sc: Scenario, target: Mapping[str, float], opts: Mapping[str, Any]
) -> Geometry:
    """Best geometry for a case: closed form where it is optimal, sampling otherwise."""
    if case in ("c11", "c12"):
        return optimize.closed_form_apv(sc)
    sweeps = int(opts.get("sweeps", 1))
    m = opts.get("grid_points")
    init_kind = opts.get("init", "sparse-ula" if sc.ndim == 1 else "sparse-upa")
    init = benchmark_geometry(init_kind, sc)
    if sc.ndim == 1:
        grid = optimize.default_grid_1d(sc, int(m) if m else None)
        trace = optimize.optimize_sampling_1d(case, sc, init, grid, sweeps=sweeps, known=target)
    else:
        grid = optimize.default_grid_2d(sc, int(m) if m else None)
        trace = optimize.optimize_sampling_2d(case, sc, init, grid, sweeps=sweeps, known=target)
    return trace.geometry


# -- verbs -------------------------------------------------------------------


def run_crb(cfg: RunConfig, out: Path, dump_steering: bool = False) -> int:
    opts = cfg.verb_options("crb")
    sc, case = cfg.scenario, cfg.case
    geometry_spec = opts.get("geometry", "closed-form" if sc.ndim == 1 else "sparse-upa")
    geom = _resolve_geometry(geometry_spec, sc, case, cfg)
    bad = validate(geom, sc)
    if bad:
        raise ConfigError(f"geometry fails validation: {bad}")
    rep = crb.report(
        case, sc, geom, known=cfg.target, search_resolution=int(opts.get("search_resolution", 0))
    )
    resolved = cfg.resolved_dict()
    resolved["crb"] = {
        "geometry": str(geometry_spec),
        "search_resolution": int(opts.get("search_resolution", 0)),
        "dump_steering": bool(dump_steering or opts.get("dump_steering", False)),
    }
    _atomic_write(out / "crb_report.json", _json_text(rep.to_json_dict(), resolved))
    if dump_steering or opts.get("dump_steering"):
        alpha = channel.steering_vector(geom, _target_params(cfg), sc.wavelength)
        rows = [
            {"index": i + 1, "re": float(a.real), "im": float(a.imag)}
            for i, a in enumerate(alpha)
        ]
        text = _csv_text(
            config_header_lines(resolved, __version__), ["index", "re", "im"], rows
        )
        _atomic_write(out / "steering.csv", text)
    return 0


def run_optimize(cfg: RunConfig, out: Path, method: str | None = None) -> int:
    opts = cfg.verb_options("optimize")
    sc, case = cfg.scenario, cfg.case
    method = (method or opts.get("method", "sampling")).lower()
    resolved = cfg.resolved_dict()
    resolved["optimize"] = {
        "method": method,
        "init": str(opts.get("init", "sparse-ula" if sc.ndim == 1 else "sparse-upa")),
        "grid_points": int(opts.get("grid_points") or 10 * (sc.n_antennas - 1) + 1),
        "sweeps": int(opts.get("sweeps", 1)),
        "order": str(opts.get("order", "ascending")),
    }
    header = config_header_lines(resolved, __version__)
    if method == "closed-form":
        if sc.ndim != 1:
            raise ConfigError("closed-form optimization exists only for linear arrays")
        geom: Geometry = optimize.closed_form_apv(sc)
        _atomic_write(out / "geometry.csv", geometry_to_csv(geom, header))
        return 0
    if method != "sampling":
        raise ConfigError(f"unknown optimization method {method!r}")
    init = _resolve_geometry(
        opts.get("init", "sparse-ula" if sc.ndim == 1 else "sparse-upa"), sc, case, cfg
    )
    sweeps = int(opts.get("sweeps", 1))
    m = opts.get("grid_points")
    order = opts.get("order", "ascending")
    rng = np.random.default_rng(cfg.seed) if order == "random" else None
    if sc.ndim == 1:
        grid = optimize.default_grid_1d(sc, int(m) if m else None)
        trace = optimize.optimize_sampling_1d(
            case, sc, init, grid, sweeps=sweeps, order=order, rng=rng, known=cfg.target
        )
    else:
        grid = optimize.default_grid_2d(sc, int(m) if m else None)
        trace = optimize.optimize_sampling_2d(
            case, sc, init, grid, sweeps=sweeps, order=order, rng=rng, known=cfg.target
        )
    _atomic_write(out / "geometry.csv", geometry_to_csv(trace.geometry, header))
    _atomic_write(out / "trace.json", _json_text(trace.to_json_dict(), resolved))
    return 0


def run_music(cfg: RunConfig, out: Path) -> int:
    opts = cfg.verb_options("music")
    sc, case = cfg.scenario, cfg.case
    geom = _resolve_geometry(opts.get("geometry"), sc, case, cfg)
    trials = int(opts.get("trials", 100))
    refine = int(opts.get("refine_passes", 2))
    step_frac = float(opts.get("grid_step_frac", 1e-3))
    snrs = opts.get("snr_db", [10.0 * np.log10(sc.snr)])
    if isinstance(snrs, (int, float)):
        snrs = [snrs]
    resolved = cfg.resolved_dict()
    resolved["music"] = {
        "geometry": str(opts.get("geometry", "closed-form" if sc.ndim == 1 else "sparse-upa")),
        "trials": trials,
        "snr_db": [float(s) for s in snrs],
        "grid_step_frac": step_frac,
        "refine_passes": refine,
    }
    rows = []
    for snr_db in snrs:
        sc_i = sc.with_updates(tx_power=1.0, noise_power=1.0,
                               gain_sq=10.0 ** (float(snr_db) / 10.0))
        eta = _target_params(cfg)
        spec = music.default_grid_spec(case, sc_i, known=cfg.target, step_frac=step_frac)
        res = music.monte_carlo_mse(sc_i, geom, eta, case, trials, cfg.seed,
                                    grid_spec=spec, refine_passes=refine)
        bounds = crb.crb_at_params(case, sc_i, geom, eta)
        rows.append({
            "snr_db": float(snr_db),
            "trials": trials,
            "mse_u": res.mse.get("u"),
            "mse_v": res.mse.get("v"),
            "mse_r": res.mse.get("r"),
            "crb_u": bounds.get("u"),
            "crb_v": bounds.get("v"),
            "crb_r": bounds.get("r"),
        })
    cols = ["snr_db", "trials", "mse_u", "mse_v", "mse_r", "crb_u", "crb_v", "crb_r"]
    text = _csv_text(config_header_lines(resolved, __version__), cols, rows)
    _atomic_write(out / "mse.csv", text)
    return 0


def run_correlation(cfg: RunConfig, out: Path) -> int:
    opts = cfg.verb_options("correlation")
    sc, case = cfg.scenario, cfg.case
    geom = _resolve_geometry(opts.get("geometry"), sc, case, cfg)
    eta = _target_params(cfg)
    axes_names = opts.get("axes", list(crb.case_unknowns(case)))
    npts = int(opts.get("grid_points", 1001))
    projection = opts.get("projection", "parameter")
    axes: dict[str, np.ndarray] = {}
    for p in axes_names:
        lo, hi = {
            "u": (-sc.u_max, sc.u_max),
            "v": (-(sc.v_max or 0.0), sc.v_max or 0.0),
            "r": (sc.r_min, sc.r_max),
        }[p]
        rng_cfg = opts.get(f"{p}_range")
        if rng_cfg:
            lo, hi = float(rng_cfg[0]), float(rng_cfg[1])
        axes[p] = np.linspace(lo, hi, npts)
    fixed = {p: getattr(eta, p) for p in ("u", "v", "r") if hasattr(eta, p) and p not in axes}
    cmap = correlation.correlation_map(
        geom, eta, GridSpec(axes=axes, fixed=fixed), sc.wavelength, projection=projection
    )
    resolved = cfg.resolved_dict()
    resolved["correlation"] = {
        "geometry": str(opts.get("geometry", "closed-form" if sc.ndim == 1 else "sparse-upa")),
        "axes": list(axes_names),
        "grid_points": npts,
        "projection": projection,
        **{f"{p}_range": [float(a[0]), float(a[-1])] for p, a in axes.items()},
    }
    header = config_header_lines(resolved, __version__)
    names = list(axes)
    grids = np.meshgrid(*axes.values(), indexing="ij")
    rows = []
    flat_vals = cmap.values.ravel()
    for i in range(flat_vals.size):
        row = {p: float(g.ravel()[i]) for p, g in zip(names, grids)}
        row["R"] = float(flat_vals[i])
        if cmap.cartesian is not None:
            row["x"], row["y"] = float(cmap.cartesian[i, 0]), float(cmap.cartesian[i, 1])
        rows.append(row)
    cols = names + ["R"] + (["x", "y"] if cmap.cartesian is not None else [])
    _atomic_write(out / "map.csv", _csv_text(header, cols, rows))
    try:
        metrics = correlation.lobe_metrics(cmap).to_json_dict()
    except correlation.AmbiguityError as e:
        metrics = {"error": str(e), "peaks": e.peaks}
    _atomic_write(out / "lobes.json", _json_text({"lobes": metrics}, resolved))
    return 0


# -- sweep --------------------------------------------------------------------

_AXIS_KEYS = {"snr": "snr_db", "antennas": "antennas", "aperture": "aperture"}


def _sweep_cell(raw: dict, axis: str, value: float, scheme: str) -> dict:
    """One (axis value, scheme) cell; runs in a worker process."""
    import copy

    data = copy.deepcopy(raw)
    table = data["scenario"]
    table[_AXIS_KEYS[axis]] = value
    if axis == "snr":
        table.pop("tx_power", None)
        table.pop("noise_power", None)
        table.pop("gain_sq", None)
    cfg = config_from_dict(data)
    sc, case = cfg.scenario, cfg.case
    row = {
        "case": case,
        "scheme": scheme,
        "axis": axis,
        "axis_value": float(value),
        "antennas": sc.n_antennas,
        "aperture_m": sc.aperture,
        "snr_db": 10.0 * np.log10(sc.snr),
        "error": None,
    }
    try:
        if scheme == "proposed":
            geom = _optimized_geometry(case, sc, cfg.target, cfg.verb_options("optimize"))
        else:
            geom = benchmark_geometry(scheme, sc)
        values = crb.worst_case_crb(case, sc, geom, known=cfg.target)
        row.update(
            crb_u=values.get("u"),
            crb_v=values.get("v"),
            crb_r=values.get("r"),
            crb_sum=float(sum(values.values())),
        )
    except Exception as e:  # per-cell failures become data, the sweep continues
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def run_sweep(cfg: RunConfig, out: Path, threads: int | None = None) -> int:
    opts = cfg.verb_options("sweep")
    axis = str(opts.get("axis", "snr")).lower()
    if axis not in _AXIS_KEYS:
        raise ConfigError(f"sweep axis must be one of {sorted(_AXIS_KEYS)}, got {axis!r}")
    values = opts.get("values")
    if not values:
        raise ConfigError("[sweep] values list is required")
    schemes = opts.get("schemes", ["proposed", "ula", "sparse-ula"])
    cells = [(float(v), str(s)) for v in values for s in schemes]
    workers = threads or int(os.environ.get("NMA_THREADS", "0")) or os.cpu_count() or 1
    workers = max(1, min(workers, len(cells)))
    rows: list[dict]
    if workers == 1:
        rows = [_sweep_cell(cfg.raw, axis, v, s) for v, s in cells]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, cfg.raw, axis, v, s) for v, s in cells]
            rows = [f.result() for f in futures]  # deterministic submit order
    cols = [
        "case", "scheme", "axis", "axis_value", "antennas", "aperture_m",
        "snr_db", "crb_u", "crb_v", "crb_r", "crb_sum", "error",
    ]
    resolved = cfg.resolved_dict()
    resolved["sweep"] = {
        "axis": axis,
        "values": [float(v) for v in values],
        "schemes": [str(s) for s in schemes],
        "workers": workers,
    }
    text = _csv_text(config_header_lines(resolved, __version__), cols, rows)
    _atomic_write(out / "sweep.csv", text)
    return 1 if any(r["error"] for r in rows) else 0


# -- entry point ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nma", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"nma {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in ("crb", "optimize", "music", "correlation", "sweep"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for sweep cells (default: NMA_THREADS or cores)")
        if verb == "optimize":
            p.add_argument("--method", choices=["closed-form", "sampling"], default=None)
        if verb == "crb":
            p.add_argument("--dump-steering", action="store_true",
                           help="also write the steering vector at the target params")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = RunConfig(
                scenario=cfg.scenario, target=cfg.target, case=cfg.case,
                seed=args.seed, options=cfg.options, raw=cfg.raw,
            )
        out = Path(args.out)
        if args.verb == "crb":
            return run_crb(cfg, out, dump_steering=args.dump_steering)
        if args.verb == "optimize":
            return run_optimize(cfg, out, method=args.method)
        if args.verb == "music":
            return run_music(cfg, out)
        if args.verb == "correlation":
            return run_correlation(cfg, out)
        return run_sweep(cfg, out, threads=args.threads)
    except (ConfigError, ValueError, crb.SingularFimError) as e:
        print(f"nma {args.verb}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
