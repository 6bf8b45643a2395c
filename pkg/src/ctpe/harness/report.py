"""Aggregation of result rows into CI tables and plain-text summaries."""

from __future__ import annotations

import csv
import math
import os
from collections import OrderedDict

import numpy as np

Z95 = 1.959963984540054

AGGREGATE_COLUMNS = ["cell", "estimator", "n", "mean_integrated_rmse", "sd_integrated_rmse", "ci95_low",
                     "ci95_high", "ci95_halfwidth", "mean_t0_rmse", "mean_wall_time"]


def write_csv(path, rows, columns=None) -> None:
    """Write dict rows with a fixed column order (union of keys by default)."""
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fmt(x) -> str:
    """Canonical float text so results round-trip through CSV unchanged."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def mean_ci(values) -> tuple[float, float, float]:
    """``(mean, sd, halfwidth)`` with the normal-approximation 95% interval."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values to aggregate")
    mean = float(v.mean())
    if v.size == 1:
        return mean, 0.0, 0.0
    sd = float(v.std(ddof=1))
    return mean, sd, Z95 * sd / math.sqrt(v.size)


def _ok(row) -> bool:
    return row.get("status", "ok") == "ok" and math.isfinite(float(row.get("integrated_rmse", "nan")))


def aggregate(rows) -> list[dict]:
    """One row per ``(cell, estimator)`` over the successful seeds."""
    groups: OrderedDict = OrderedDict()
    for row in rows:
        groups.setdefault((row.get("cell", ""), row["estimator"]), []).append(row)
    out = []
    for (cell, est), items in groups.items():
        good = [r for r in items if _ok(r)]
        entry = {"cell": cell, "estimator": est, "n": str(len(good))}
        if good:
            mean, sd, half = mean_ci([float(r["integrated_rmse"]) for r in good])
            entry.update(mean_integrated_rmse=fmt(mean), sd_integrated_rmse=fmt(sd), ci95_low=fmt(mean - half),
                         ci95_high=fmt(mean + half), ci95_halfwidth=fmt(half),
                         mean_t0_rmse=fmt(np.mean([float(r["t0_rmse"]) for r in good])),
                         mean_wall_time=fmt(np.mean([float(r.get("wall_time", 0) or 0) for r in good])))
        out.append(entry)
    return out


def gain_percent(base: float, other: float) -> float:
    """Percentage reduction of ``other`` relative to ``base``."""
    return 100.0 * (base - other) / base if base > 0 else float("nan")


def summary_lines(agg) -> list[str]:
    lines = []
    cells: OrderedDict = OrderedDict()
    for row in agg:
        cells.setdefault(row["cell"], []).append(row)
    for cell, items in cells.items():
        if cell:
            lines.append(f"[{cell}]")
        base = None
        for row in items:
            if row["n"] == "0":
                lines.append(f"  {row['estimator']:<12} no successful fits")
                continue
            mean = float(row["mean_integrated_rmse"])
            if row["estimator"] == "BE":
                base = mean
            ci = "n=1" if row["n"] == "1" else f"+/- {float(row['ci95_halfwidth']):.4g} (n={row['n']})"
            lines.append(f"  {row['estimator']:<12} integrated RMSE {mean:.4g} {ci}; t0 RMSE "
                         f"{float(row['mean_t0_rmse']):.4g}")
        if base is not None:
            for row in items:
                if row["estimator"] != "BE" and row["n"] != "0":
                    g = gain_percent(base, float(row["mean_integrated_rmse"]))
                    lines.append(f"  gain of {row['estimator']} over BE: {g:.1f}%")
    return lines


def emit_report(rows, out_dir=None, extra_lines=()) -> list[dict]:
    """Write ``aggregate.csv`` and ``summary.txt``; return the aggregate rows."""
    if not rows:
        raise ValueError("no result rows to report")
    agg = aggregate(rows)
    if out_dir is not None:
        write_csv(os.path.join(out_dir, "aggregate.csv"), agg, AGGREGATE_COLUMNS)
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write("\n".join(summary_lines(agg) + list(extra_lines)) + "\n")
    return agg
