import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from infdef.cli import main
from infdef.config import load_config, parse_config
from infdef.errors import ConfigError, NumericalError
from infdef import runner
from infdef.evaluation import GriddedDensity
from infdef.runner import load_grid_csv, save_grid_csv


def tiny_config(tmp_path, **extra):
    cfg = {
        "schema_version": 1,
        "manifold": {"name": "s1"},
        "density": {"name": "vonmises", "params": {"kappa": 8.0}},
        "noise": {"kind": "nid", "sigma2": 0.01},
        "methods": ["nid"],
        "sigma2_grid": [0.01, 1.0],
        "n_train": 1500,
        "seeds": [0],
        "flow": {"hidden_dim": 16, "iterations": 200, "val_every": 50},
        "bounds": {"n_samples": 500},
        "out_dir": str(tmp_path / "run"),
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


def test_config_validation_errors(tmp_path):
    path, raw = tiny_config(tmp_path)
    bad = json.loads(path.read_text())
    bad["flow"]["mystery"] = 1
    p2 = tmp_path / "bad.json"
    p2.write_text(json.dumps(bad))
    with pytest.raises(ConfigError, match="mystery"):
        load_config(p2)
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({"schema_version": 99, "manifold": {"name": "s1"}, "density": {"name": "uniform"}})
    with pytest.raises(ConfigError, match="sorted"):
        parse_config({
            "schema_version": 1, "manifold": {"name": "s1"},
            "density": {"name": "vonmises"}, "sigma2_grid": [1.0, 0.1],
        })
    assert main(["generate", "--config", str(tmp_path / "missing.json")]) == 2


def test_generate_outputs_and_determinism(tmp_path):
    path, raw = tiny_config(tmp_path)
    assert main(["generate", "--config", str(path)]) == 0
    run = Path(raw["out_dir"])
    u = np.loadtxt(run / "data/seed0/u.csv", delimiter=",", skiprows=2)
    x = np.loadtxt(run / "data/seed0/x.csv", delimiter=",", skiprows=2)
    xt = np.loadtxt(run / "data/seed0/xtilde.csv", delimiter=",", skiprows=2)
    assert (run / "data/seed0/u.csv").read_text().startswith("# infdef-data-v1 config_hash=")
    assert u.shape == (1500,)
    assert x.shape == (1500, 2)
    assert xt.shape == (1500, 2)
    before = (run / "data/seed0/x.csv").read_bytes()
    assert main(["generate", "--config", str(path)]) == 0
    assert (run / "data/seed0/x.csv").read_bytes() == before
    meta = json.loads((run / "data/seed0/meta.json").read_text())
    assert meta["streams"] == {"latent": [0, 0], "noise": [0, 1]}


def test_generate_common_random_numbers(tmp_path):
    path_nid, raw_nid = tiny_config(tmp_path, out_dir=str(tmp_path / "nid"))
    assert main(["generate", "--config", str(path_nid)]) == 0
    cfg_iid = json.loads(path_nid.read_text())
    cfg_iid["noise"] = {"kind": "iid", "sigma2": 0.01}
    cfg_iid["out_dir"] = str(tmp_path / "iid")
    p2 = tmp_path / "iid.json"
    p2.write_text(json.dumps(cfg_iid))
    assert main(["generate", "--config", str(p2)]) == 0
    def body(p):
        return "\n".join(Path(p).read_text().splitlines()[1:])

    assert body(tmp_path / "nid/data/seed0/x.csv") == body(tmp_path / "iid/data/seed0/x.csv")
    assert body(tmp_path / "nid/data/seed0/xtilde.csv") != body(tmp_path / "iid/data/seed0/xtilde.csv")


def test_mixed_config_directory_rejected(tmp_path):
    path, raw = tiny_config(tmp_path)
    assert main(["bounds", "--config", str(path)]) == 0
    other = json.loads(path.read_text())
    other["n_train"] = 999  # different config, same out_dir
    p2 = tmp_path / "other.json"
    p2.write_text(json.dumps(other))
    assert main(["bounds", "--config", str(p2)]) == 2


def test_sweep_rows_resume_and_summary(tmp_path):
    path, raw = tiny_config(tmp_path)
    cfg = load_config(path)
    def strip_timing(text):
        out = []
        for line in text.strip().splitlines():
            cells = line.split(",")
            del cells[runner.SWEEP_COLUMNS.index("wall_time_s")]
            out.append(",".join(cells))
        return "\n".join(out)

    sweep_path = runner.cmd_sweep(cfg)
    full = sweep_path.read_text()
    rows = full.strip().splitlines()
    assert len(rows) == 1 + 2  # header + 2 sigma2 cells
    header = rows[0].split(",")
    assert header == runner.SWEEP_COLUMNS
    # interrupt simulation: drop the last row, rerun; identical up to timing
    sweep_path.write_text("\n".join(rows[:-1]) + "\n")
    runner.cmd_sweep(cfg)
    assert strip_timing(sweep_path.read_text()) == strip_timing(full)
    # rerunning a complete sweep changes nothing at all
    unchanged = sweep_path.read_text()
    runner.cmd_sweep(cfg)
    assert sweep_path.read_text() == unchanged
    summary = (Path(raw["out_dir"]) / "sweep_summary.csv").read_text().strip().splitlines()
    assert summary[0] == "method,sigma2,ks_mean,ks_stderr,n_seeds"
    assert len(summary) == 3
    with open(sweep_path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    assert all(r["status"] == "ok" for r in recs)
    assert all(r["config_hash"] == cfg.content_hash() for r in recs)
    ck = Path(recs[0]["checkpoint"])
    assert ck.exists()
    from infdef.flow import FlowModel

    flow, header = FlowModel.load(ck)
    assert header["D"] == 2


def test_oracle_deflate_cli_and_constant_hook(tmp_path):
    path, raw = tiny_config(tmp_path)
    assert main(["oracle-deflate", "--config", str(path)]) == 0
    out = json.loads((Path(raw["out_dir"]) / "oracle.json").read_text())
    assert out["ks"] < 1e-6
    cfg = load_config(path)
    # the hook mis-scales the oracle's inflated density by c, so the
    # deflated estimate has mass c and the KS floor is |1 - c|
    for c in (0.5, 2.0):
        runner.cmd_oracle_deflate(cfg, constant_scale=c)
        out2 = json.loads((Path(raw["out_dir"]) / "oracle.json").read_text())
        assert abs(out2["ks"] - abs(1.0 - c)) < 1e-7


def test_reachability_cli(tmp_path):
    path, raw = tiny_config(tmp_path, reachability={"n_probes": 120, "grid_resolution": 128,
                                                    "interval": [-1.0, 1.0]})
    assert main(["reachability", "--config", str(path)]) == 0
    rep = json.loads((Path(raw["out_dir"]) / "reachability.json").read_text())
    assert rep["violation_fraction"] == 0.0


def test_baseline_fom_cli_uniform_path(tmp_path):
    path, raw = tiny_config(
        tmp_path,
        manifold={"name": "s1"},
        density={"name": "uniform", "params": {"bounds": [[-math.pi / 2, math.pi / 2]]}},
        n_train=2000,
    )
    assert main(["baseline-fom", "--config", str(path)]) == 0
    rep = json.loads((Path(raw["out_dir"]) / "fom.json").read_text())
    assert rep["ks"] <= 0.05
    gd, h = load_grid_csv(Path(raw["out_dir"]) / "fom_grid.csv")
    assert gd.values.shape == (1000,)
    assert h == rep["config_hash"]


def test_sweep_worker_pool_matches_serial(tmp_path):
    path, raw = tiny_config(tmp_path)
    cfg = load_config(path)
    serial = runner.cmd_sweep(cfg, workers=1).read_text()
    import shutil

    shutil.rmtree(raw["out_dir"])
    pooled = runner.cmd_sweep(cfg, workers=2).read_text()

    def strip_timing(text):
        out = []
        for line in text.strip().splitlines():
            cells = line.split(",")
            del cells[runner.SWEEP_COLUMNS.index("wall_time_s")]
            out.append(",".join(cells))
        return "\n".join(out)

    assert strip_timing(serial) == strip_timing(pooled)


def test_exit_code_numerical(tmp_path, monkeypatch):
    path, raw = tiny_config(tmp_path)

    def boom(cfg):
        raise NumericalError("synthetic")

    monkeypatch.setattr(runner, "cmd_bounds", boom)
    assert main(["bounds", "--config", str(path)]) == 3


def test_grid_csv_roundtrip(tmp_path):
    axes = (np.linspace(0, 1, 7), np.linspace(-1, 1, 5))
    vals = np.random.default_rng(0).random((7, 5))
    gd = GriddedDensity(axes=axes, values=vals)
    p = tmp_path / "grid.csv"
    save_grid_csv(gd, p, "cafebabe")
    back, h = load_grid_csv(p)
    assert h == "cafebabe"
    assert all(np.array_equal(a, b) for a, b in zip(gd.axes, back.axes))
    assert np.array_equal(gd.values, back.values)


def test_density_mismatch_rejected(tmp_path):
    path, raw = tiny_config(tmp_path, density={"name": "s2_mixture4"})
    assert main(["generate", "--config", str(path)]) == 2


def test_generate_multi_chart_manifold(tmp_path):
    path, raw = tiny_config(
        tmp_path,
        manifold={"name": "hs2"},
        density={"name": "hs2_mixture3"},
        noise={"kind": "nid", "sigma2": 0.01},
        n_train=200,
    )
    assert main(["generate", "--config", str(path)]) == 0
    x = np.loadtxt(Path(raw["out_dir"]) / "data/seed0/x.csv", delimiter=",", skiprows=2)
    assert x.shape == (200, 3)
    # points from both charts: hyperboloid half has x3 >= 0 and |x| >= 1,
    # sphere half has x3 <= 0
    assert np.any(x[:, 2] > 0.05) and np.any(x[:, 2] < -0.05)


def test_cli_seed_override_changes_hash(tmp_path):
    path, raw = tiny_config(tmp_path)
    cfg_a = load_config(path)
    cfg_b = load_config(path, {"seed": 5})
    assert cfg_a.content_hash() != cfg_b.content_hash()
    assert cfg_b.seeds == [5]
