import os

import numpy as np
import pytest

from ctpe.cli import main
from ctpe.harness import (
    RECIPES,
    ExperimentConfig,
    apply_axes,
    emit_report,
    get_recipe,
    load_config,
    mean_ci,
    parse_config,
    run_cell,
    run_experiment,
    run_sweep,
)
from ctpe.harness.report import read_csv

SMALL = """
[experiment]
name = small
preset = ou1
dt = 0.1
[data]
train = 32
val = 16
test = 8
seeds = 2
[estimators]
names = BE
features = linear
"""


def _strip_wall(path):
    rows = read_csv(path)
    for r in rows:
        r.pop("wall_time", None)
        r.pop("mean_wall_time", None)
    return rows


def test_parse_config_fields():
    cfg = parse_config(SMALL + "[sweep]\nkappa = 0.5, 1.5\nM = 16, 32\n")
    assert cfg.preset == "ou1" and cfg.train == 32 and cfg.seeds == [0, 1]
    assert cfg.estimators == ["BE"] and cfg.features == "linear"
    assert cfg.sweep == {"kappa": [0.5, 1.5], "M": [16, 32]}
    assert parse_config("[data]\nseeds = 3, 5-7\n").seeds == [3, 5, 6, 7]


@pytest.mark.parametrize("bad", [
    "[experiment]\npreset = nowhere\n",
    "[estimators]\nnames = BE, Gen9\n",
    "[estimators]\nfeatures = cubic\n",
    "[experiment]\ndt = 0.3\n",
    "[sweep]\nwidth = 1, 2\n",
    "[sweep]\nM = 1\nzeta = 0\ndt = 0.1\n",
    "[experiment]\ndt = 0.5\n[estimators]\nnames = Gen3\n",
    "[data]\nseeds = 1, 1\n",
    "[perturbation]\nkind = twist\n",
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        parse_config(bad)


def test_config_ini_round_trip(tmp_path):
    cfg = parse_config(SMALL + "[sweep]\nzeta = 0, 2\n")
    cfg.write(tmp_path / "c.ini")
    back = load_config(tmp_path / "c.ini")
    assert back == cfg.replace(horizon=1.0)
    assert back.config_hash() == cfg.replace(horizon=1.0).config_hash()


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_recipes_parse(name):
    cfg = get_recipe(name, seeds=2)
    assert cfg.seeds == [0, 1]


def test_run_experiment_rows(tmp_path):
    cfg = parse_config(SMALL)
    rows, profiles, diags = run_experiment(cfg, tmp_path)
    assert len(rows) == 2 and all(r["status"] == "ok" for r in rows)
    assert len(profiles) == 2 * 11
    for name in ("results.csv", "profile.csv", "diagnostics.csv", "summary.txt", "aggregate.csv", "config.ini"):
        assert (tmp_path / name).exists()
    assert load_config(tmp_path / "config.ini").config_hash() == cfg.replace(horizon=1.0).config_hash()


def test_run_experiment_deterministic(tmp_path):
    cfg = parse_config(SMALL.replace("names = BE", "names = BE, Gen2"))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b", workers=2)
    for name in ("results.csv", "aggregate.csv"):
        assert _strip_wall(tmp_path / "a" / name) == _strip_wall(tmp_path / "b" / name)
    for name in ("profile.csv", "diagnostics.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_isolation():
    cfg = parse_config(SMALL)
    a, _, _ = run_cell(cfg, 0)
    b, _, _ = run_experiment(cfg.replace(seeds=[0, 5]))
    assert a[0]["integrated_rmse"] == b[0]["integrated_rmse"]


def test_failures_recorded_not_raised():
    cfg = parse_config(SMALL.replace("features = linear", "features = richer")).replace(ridge=0.0, train=2)
    rows, _, _ = run_experiment(cfg)
    assert all(r["status"].startswith("error") for r in rows)
    agg = emit_report(rows)
    assert agg[0]["n"] == "0"


def test_gen_rows_carry_diagnostics():
    cfg = parse_config(SMALL.replace("names = BE", "names = BE, Gen2, MBLinear")).replace(seeds=[0])
    rows, _, diags = run_experiment(cfg)
    gen = [r for r in rows if r["estimator"] == "Gen2"][0]
    assert float(gen["C_ms"]) >= 1.0 and gen["rho"] != ""
    assert len(diags) == 10 - 2 + 1
    assert all(r["status"] == "ok" for r in rows)


def test_mismatch_uses_target_for_truth():
    cfg = parse_config(SMALL + "[perturbation]\nkind = gain_shift\nmagnitude = 1.5\n")
    rows, _, _ = run_experiment(cfg.replace(seeds=[0]))
    base, _, _ = run_experiment(parse_config(SMALL).replace(seeds=[0]))
    assert rows[0]["integrated_rmse"] != base[0]["integrated_rmse"]


def test_emit_report_examples(tmp_path):
    one = [{"cell": "", "estimator": "BE", "seed": "0", "integrated_rmse": "0.3", "t0_rmse": "0.2", "status": "ok"}]
    agg = emit_report(one, tmp_path)
    assert agg[0]["ci95_halfwidth"] == "0.0"
    assert "n=1" in (tmp_path / "summary.txt").read_text()
    two = [dict(one[0], integrated_rmse="0.4"), dict(one[0], seed="1", integrated_rmse="0.6")]
    assert float(emit_report(two)[0]["mean_integrated_rmse"]) == pytest.approx(0.5)
    vals = [0.2, 0.5, 0.35]
    three = [dict(one[0], seed=str(k), integrated_rmse=str(v)) for k, v in enumerate(vals)]
    agg = emit_report(three)[0]
    half = 1.959963984540054 * np.std(vals, ddof=1) / np.sqrt(3)
    assert float(agg["ci95_low"]) == pytest.approx(np.mean(vals) - half)
    assert float(agg["ci95_high"]) == pytest.approx(np.mean(vals) + half)
    with pytest.raises(ValueError):
        emit_report([])


def test_mean_ci():
    assert mean_ci([2.0]) == (2.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        mean_ci([])


def test_apply_axes():
    cfg = parse_config(SMALL)
    cell = apply_axes(cfg, {"order": 3, "M": 64, "kappa": 0.5})
    assert cell.estimators == ["BE", "Gen3"] and cell.train == 64 and cell.magnitude == 0.5
    assert cell.sweep == {}


def test_sweep_one_by_one_matches_run(tmp_path):
    cfg = parse_config(SMALL + "[sweep]\nzeta = 1.0\n")
    rows = run_sweep(cfg, tmp_path / "s")
    plain, _, _ = run_experiment(cfg.replace(sweep={}))
    keys = ["estimator", "seed", "integrated_rmse", "t0_rmse", "status"]
    assert [{k: r[k] for k in keys} for r in rows] == [{k: r[k] for k in keys} for r in plain]


def test_sweep_resumable(tmp_path):
    cfg = parse_config(SMALL.replace("names = BE", "names = BE, Gen2") + "[sweep]\nM = 16, 32\n")
    run_sweep(cfg, tmp_path)
    first = (tmp_path / "aggregate.csv").read_bytes()
    gains = read_csv(tmp_path / "gains.csv")
    assert {g["axis_M"] for g in gains} == {"16", "32"}
    assert all(g["regime"] in ("i", "ii", "iii") for g in gains)
    marker = tmp_path / "cells" / "M=16" / "DONE"
    stamp = os.path.getmtime(tmp_path / "cells" / "M=16" / "results.csv")
    assert marker.exists()
    run_sweep(cfg, tmp_path)
    assert os.path.getmtime(tmp_path / "cells" / "M=16" / "results.csv") == stamp
    assert (tmp_path / "aggregate.csv").read_bytes() == first


def test_dt_sweep_writes_slopes(tmp_path):
    cfg = parse_config(SMALL.replace("seeds = 2", "seeds = 1") + "[sweep]\ndt = 0.2, 0.1, 0.05\n")
    run_sweep(cfg, tmp_path)
    slopes = read_csv(tmp_path / "slopes.csv")
    assert [s["estimator"] for s in slopes] == ["BE"]
    assert "log-log slopes" in (tmp_path / "summary.txt").read_text()


def test_cli_smoke(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text(SMALL)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "run"), "--seeds", "1"]) == 0
    assert len(read_csv(tmp_path / "run" / "results.csv")) == 1
    assert "integrated RMSE" in capsys.readouterr().out
    assert main(["stencil", "--orders", "1", "2", "--out", str(tmp_path / "st")]) == 0
    st = read_csv(tmp_path / "st" / "stencils.csv")
    assert float(st[1]["a_0"]) == -1.5
    assert main(["recipe", "--list"]) == 0
    assert "calibrate-order" in capsys.readouterr().out
    assert main(["recipe", "mismatch", "--show"]) == 0
    assert "[sweep]" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main(["sweep", "--config", str(path), "--out", str(tmp_path / "sw")])
    path.write_text(SMALL + "[sweep]\nM = 16\n")
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "sw"), "--seeds", "1"]) == 0
    assert (tmp_path / "sw" / "gains.csv").exists()


def test_cli_requires_out(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(SMALL)
    with pytest.raises(SystemExit):
        main(["run", "--config", str(path)])


def test_default_config_valid():
    assert ExperimentConfig().estimators == ["BE", "Gen2"]
