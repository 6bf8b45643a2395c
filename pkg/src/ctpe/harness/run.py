"""Seeded experiment cells, sweeps and their on-disk outputs.

Output files of :func:`run_experiment` (stable columns):

``results.csv``
    experiment, cell, preset, estimator, seed, h, integrated_rmse, t0_rmse,
    wall_time, rho, C0, C_ms, min_sigma, status, config_hash
``profile.csv``
    cell, estimator, seed, n, t_n, rmse
``diagnostics.csv``
    cell, estimator, seed, n, sigma_min, gamma_sum, bandwidth_scores
``aggregate.csv`` / ``summary.txt``
    see :mod:`ctpe.harness.report`
``config.ini``
    the resolved configuration

:func:`run_sweep` additionally writes one sub-directory per cell under
``cells/`` (with a ``DONE`` marker), long-format ``results.csv`` carrying
the axis values, ``gains.csv`` and, for a ``dt`` sweep, ``slopes.csv``.
"""

from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..diagnostics import classify_regime, log_slope, metrics, ns_floor, recursion_constants
from ..dynamics.models import LinearGaussianModel, make_grid
from ..dynamics.presets import get_preset
from ..dynamics.simulate import simulate
from ..dynamics.truth import analytic_truth, mc_ground_truth, perturb_controller
from ..estimators.anchors import fit_mb_anchor, mb_value
from ..estimators.bandwidth import select_bandwidth
from ..estimators.moments import PoolingWindow
from ..estimators.recursions import fit_bellman, fit_gen
from ..features import make_features
from ..stencil import solve_stencil
from .config import SWEEP_AXES, ExperimentConfig
from .report import AGGREGATE_COLUMNS, emit_report, fmt, gain_percent, read_csv, summary_lines, write_csv

RESULT_COLUMNS = ["experiment", "cell", "preset", "estimator", "seed", "h", "integrated_rmse", "t0_rmse",
                  "wall_time", "rho", "C0", "C_ms", "min_sigma", "status", "config_hash"]
PROFILE_COLUMNS = ["cell", "estimator", "seed", "n", "t_n", "rmse"]
DIAG_COLUMNS = ["cell", "estimator", "seed", "n", "sigma_min", "gamma_sum", "bandwidth_scores"]


def build_models(cfg: ExperimentConfig):
    """``(target, logging)`` models; they differ only under a perturbation."""
    overrides = {"zeta": cfg.zeta, "horizon": cfg.resolved_horizon()}
    if cfg.discount is not None:
        overrides["discount"] = cfg.discount
    target = get_preset(cfg.preset, **overrides)
    pert = cfg.perturbation_spec()
    return target, (perturb_controller(target, pert) if pert is not None else target)


def _truth(cfg, model, grid, states, seed):
    analytic = isinstance(model, LinearGaussianModel)
    if cfg.truth == "analytic" or (cfg.truth == "auto" and analytic):
        return analytic_truth(model, grid, states)
    return mc_ground_truth(model, grid, states, cfg.truth_rollouts, seed, substeps=cfg.truth_substeps)


def _fitter(cfg, est, fmap, model):
    if est == "BE":
        return lambda batch, h: fit_bellman(batch, fmap, model, PoolingWindow(h), cfg.ridge, cfg.transitions)
    order = int(est[3:])
    return lambda batch, h: fit_gen(batch, fmap, order, model, PoolingWindow(h), cfg.ridge, cfg.startup,
                                    cfg.transitions)


def run_cell(cfg: ExperimentConfig, seed: int, cell: str = ""):
    """All estimators for one seed; returns ``(rows, profile_rows, diag_rows)``."""
    target, logging_model = build_models(cfg)
    grid = make_grid(cfg.resolved_horizon(), cfg.dt)
    train = simulate(logging_model, grid, cfg.train, seed, cfg.substeps, split="train")
    val = simulate(logging_model, grid, cfg.val, seed, cfg.substeps, split="val")
    test = simulate(target, grid, min(cfg.test, cfg.max_states), seed, cfg.substeps, split="test")
    truth = _truth(cfg, target, grid, test.states, seed)
    fmap = make_features(cfg.features, target.dim)
    chash = cfg.config_hash()
    rows, profiles, diags = [], [], []
    for est in cfg.estimators:
        row = {"experiment": cfg.name, "cell": cell, "preset": cfg.preset, "estimator": est, "seed": str(seed),
               "h": "", "integrated_rmse": "nan", "t0_rmse": "nan", "wall_time": "", "rho": "", "C0": "",
               "C_ms": "", "min_sigma": "", "status": "ok", "config_hash": chash}
        start = time.perf_counter()
        try:
            if est.startswith("MB"):
                dyn = fit_mb_anchor(train, "linear" if est == "MBLinear" else "quadratic")
                table = mb_value(dyn, target, grid, truth.states, cfg.truth_rollouts, seed, cfg.truth_substeps)
                if table.provenance == "invalid":
                    raise FloatingPointError("fitted dynamics blew up during valuation")
                report = metrics(table, truth, seed, chash)
            else:
                fit = _fitter(cfg, est, fmap, logging_model)
                h, scores = cfg.bandwidths[0], {}
                if len(cfg.bandwidths) > 1:
                    h, scores = select_bandwidth(fit, cfg.bandwidths, train, val, logging_model)
                surface = fit(train, h)
                report = metrics(surface, truth, seed, chash)
                row["h"] = str(h)
                if surface.blocks:
                    st = solve_stencil(int(est[3:]))
                    rd = recursion_constants(surface.blocks, st, grid.dt)
                    row.update(rho=fmt(rd.rho), C0=fmt(rd.C0), C_ms=fmt(rd.C_ms), min_sigma=fmt(rd.m_min))
                    sc = json.dumps({str(k): v for k, v in scores.items()})
                    for b, s_min, g in zip(surface.blocks, rd.sigma_min, rd.gamma):
                        diags.append({"cell": cell, "estimator": est, "seed": str(seed), "n": str(b.n),
                                      "sigma_min": fmt(s_min), "gamma_sum": fmt(g.sum()), "bandwidth_scores": sc})
            row["integrated_rmse"] = fmt(report.integrated)
            row["t0_rmse"] = fmt(report.t0)
            for n, (t, r) in enumerate(zip(grid.times, report.profile)):
                profiles.append({"cell": cell, "estimator": est, "seed": str(seed), "n": str(n), "t_n": fmt(t),
                                 "rmse": fmt(r)})
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
            row["status"] = f"error: {type(err).__name__}: {err}".replace("\n", " ")
        row["wall_time"] = fmt(round(time.perf_counter() - start, 6))
        rows.append(row)
    return rows, profiles, diags


def _run_seed(args):
    cfg, seed, cell = args
    return run_cell(cfg, seed, cell)


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int = 1, cell: str = ""):
    """Run every seed of ``cfg``; write outputs to ``out_dir`` if given.

    Returns ``(rows, profile_rows, diag_rows)``, sorted deterministically so
    the worker count never changes the output.
    """
    jobs = [(cfg, seed, cell) for seed in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_seed, jobs))
    else:
        parts = [_run_seed(job) for job in jobs]
    est_rank = {e: k for k, e in enumerate(cfg.estimators)}
    key = lambda r: (est_rank[r["estimator"]], int(r["seed"]), int(r.get("n", 0) or 0))
    rows = sorted((r for p in parts for r in p[0]), key=key)
    profiles = sorted((r for p in parts for r in p[1]), key=key)
    diags = sorted((r for p in parts for r in p[2]), key=key)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(os.path.join(out_dir, "results.csv"), rows, RESULT_COLUMNS)
        write_csv(os.path.join(out_dir, "profile.csv"), profiles, PROFILE_COLUMNS)
        write_csv(os.path.join(out_dir, "diagnostics.csv"), diags, DIAG_COLUMNS)
        cfg.write(os.path.join(out_dir, "config.ini"))
        emit_report(rows, out_dir, _header(cfg))
    return rows, profiles, diags


def _header(cfg: ExperimentConfig) -> list[str]:
    return [f"experiment {cfg.name}: preset={cfg.preset} dt={cfg.dt} zeta={cfg.zeta} M={cfg.train} "
            f"seeds={len(cfg.seeds)} features={cfg.features} config_hash={cfg.config_hash()}"]


def apply_axes(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    """Config for one sweep cell."""
    changes = {"sweep": {}}
    for axis, value in values.items():
        fieldname = SWEEP_AXES[axis]
        if axis == "order":
            changes["estimators"] = ["BE", f"Gen{int(value)}"]
        else:
            changes[fieldname] = value
    return cfg.replace(**changes)


def cell_id(values: dict) -> str:
    return "_".join(f"{k}={v}" for k, v in values.items()) or "base"


def run_sweep(cfg: ExperimentConfig, out_dir, workers: int = 1):
    """Cross product over ``cfg.sweep`` axes; resumable via per-cell ``DONE`` markers.

    Returns the long-format result rows.
    """
    axes = list(cfg.sweep.items())
    if not axes:
        rows, _, _ = run_experiment(cfg, out_dir, workers)
        return rows
    os.makedirs(out_dir, exist_ok=True)
    cfg.write(os.path.join(out_dir, "config.ini"))
    names = [a for a, _ in axes]
    all_rows, all_prof, all_diag, cells = [], [], [], []
    for combo in itertools.product(*[v for _, v in axes]):
        values = dict(zip(names, combo))
        cid = cell_id(values)
        ccfg = apply_axes(cfg, values)
        cdir = os.path.join(out_dir, "cells", cid)
        marker = os.path.join(cdir, "DONE")
        if not os.path.exists(marker):
            run_experiment(ccfg, cdir, workers, cell=cid)
            with open(marker, "w") as fh:
                fh.write(ccfg.config_hash() + "\n")
        extra = {f"axis_{k}": str(v) for k, v in values.items()}
        for name, bucket in (("results.csv", all_rows), ("profile.csv", all_prof), ("diagnostics.csv", all_diag)):
            for r in read_csv(os.path.join(cdir, name)):
                bucket.append({**extra, **r})
        cells.append((cid, values, ccfg))
    axis_cols = [f"axis_{k}" for k in names]
    write_csv(os.path.join(out_dir, "results.csv"), all_rows, axis_cols + RESULT_COLUMNS)
    write_csv(os.path.join(out_dir, "profile.csv"), all_prof, axis_cols + PROFILE_COLUMNS)
    write_csv(os.path.join(out_dir, "diagnostics.csv"), all_diag, axis_cols + DIAG_COLUMNS)
    agg = emit_report(all_rows, None)
    gains = gain_table(agg, cells)
    write_csv(os.path.join(out_dir, "gains.csv"), gains)
    lines = _header(cfg) + [f"sweep axes: {', '.join(names)}"]
    lines += summary_lines(agg)
    lines += pivot_lines(gains, names)
    if names == ["dt"]:
        slopes = slope_table(agg, cells)
        write_csv(os.path.join(out_dir, "slopes.csv"), slopes, ["estimator", "t0_slope", "integrated_slope"])
        lines.append("log-log slopes of error vs dt:")
        lines += [f"  {s['estimator']:<12} t0 {float(s['t0_slope']):.3f}  integrated {float(s['integrated_slope']):.3f}"
                  for s in slopes]
    write_csv(os.path.join(out_dir, "aggregate.csv"), agg, AGGREGATE_COLUMNS)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return all_rows


def gain_table(agg, cells) -> list[dict]:
    """Per cell and non-BE estimator: percentage reduction vs BE plus the regime label."""
    by_cell = {}
    for row in agg:
        by_cell.setdefault(row["cell"], {})[row["estimator"]] = row
    out = []
    for cid, values, ccfg in cells:
        ests = by_cell.get(cid, {})
        target, _ = build_models(ccfg)
        L = target.time_lipschitz() if hasattr(target, "time_lipschitz") else 0.0
        F = ns_floor(target.dim, L, ccfg.dt, ccfg.train)
        label, _ = classify_regime(F, ccfg.dt)
        base = ests.get("BE")
        for est, row in ests.items():
            if est == "BE":
                continue
            gain = float("nan")
            if base is not None and base["n"] != "0" and row["n"] != "0":
                gain = gain_percent(float(base["mean_integrated_rmse"]), float(row["mean_integrated_rmse"]))
            out.append({**{f"axis_{k}": str(v) for k, v in values.items()}, "cell": cid, "estimator": est,
                        "gain_pct": fmt(gain), "F_ns": fmt(F), "regime": label})
    return out


def pivot_lines(gains, names) -> list[str]:
    if not gains:
        return []
    est = "Gen2" if any(g["estimator"] == "Gen2" for g in gains) else gains[0]["estimator"]
    rows = [g for g in gains if g["estimator"] == est]
    lines = [f"gain of {est} over BE (%):"]
    if len(names) == 1:
        for g in rows:
            lines.append(f"  {names[0]}={g['axis_' + names[0]]}: {float(g['gain_pct']):.1f} (regime {g['regime']})")
        return lines
    a, b = names
    cols = list(dict.fromkeys(g[f"axis_{b}"] for g in rows))
    lines.append(f"  {a} \\ {b}: " + "  ".join(cols))
    for av in dict.fromkeys(g[f"axis_{a}"] for g in rows):
        cells = {g[f"axis_{b}"]: g for g in rows if g[f"axis_{a}"] == av}
        lines.append(f"  {av}: " + "  ".join(f"{float(cells[c]['gain_pct']):.1f}({cells[c]['regime']})"
                                            if c in cells else "-" for c in cols))
    return lines


def slope_table(agg, cells) -> list[dict]:
    dts = {cid: ccfg.dt for cid, _, ccfg in cells}
    by_est = {}
    for row in agg:
        if row["n"] != "0":
            by_est.setdefault(row["estimator"], []).append(row)
    out = []
    for est, items in by_est.items():
        if len(items) < 3:
            continue
        t0 = [(dts[r["cell"]], float(r["mean_t0_rmse"])) for r in items]
        integ = [(dts[r["cell"]], float(r["mean_integrated_rmse"])) for r in items]
        out.append({"estimator": est, "t0_slope": fmt(log_slope(t0)), "integrated_slope": fmt(log_slope(integ))})
    return out
