"""Config-driven experiment execution: generate, sweep, bounds, baselines.

Sweep cells (method x sigma^2 x seed) are independent jobs; rows are
appended to the results CSV in canonical cell order as cells finish, so
an interrupted sweep resumes by skipping the (method, sigma2, seed) keys
already present and ends up byte-identical to an uninterrupted run.
Latent draws and noise draws use separate seeded streams, so runs with
different noise kinds share the exact same on-manifold points.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, check_lock
from .densities import LatentDensity, make_density
from .errors import ConfigError, InfdefError
from .evaluation import (
    AnalyticInflatedDensity,
    GriddedDensity,
    deflate,
    fom_baseline,
    grid_true_density,
    induced_latent,
    ks_statistic,
    latent_grid_axes,
    nearest_neighbor_distances,
    sigma_upper_bound,
)
from .flow import FlowHyper, FlowModel
from .manifolds import embed, get_manifold, sqrt_gram
from .noise import NormalUniformInterval, deflation_constant, inflate_batch, noise_from_config, reachability_check
from .training import TrainConfig, train

FLOAT_FMT = "%.17g"

SWEEP_COLUMNS = [
    "config_hash", "manifold", "density", "method", "sigma2", "seed", "status",
    "ks", "best_val_nll", "sigma_lower_sq", "sigma_lower", "sigma_upper",
    "wall_time_s", "n_train", "iterations", "checkpoint",
]


def _fmt(x) -> str:
    if isinstance(x, float):
        return FLOAT_FMT % x
    return str(x)


def _latent_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 0]))


def _noise_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 1]))


def _build(cfg: ExperimentConfig):
    manifold = get_manifold(cfg.manifold_name, **cfg.manifold_params)
    density = make_density(cfg.density_name, cfg.density_params)
    if density.d != manifold.d:
        raise ConfigError(
            f"density {cfg.density_name} is {density.d}-D but manifold "
            f"{cfg.manifold_name} has intrinsic dimension {manifold.d}"
        )
    return manifold, density


def _eval_axes(cfg: ExperimentConfig, density: LatentDensity):
    return latent_grid_axes(density.domain, cfg.eval_resolution_1d, cfg.eval_resolution_2d)


def _write_matrix_csv(path: Path, header: list, mat: np.ndarray, config_hash: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# infdef-data-v1 config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.atleast_2d(mat):
            w.writerow([_fmt(float(v)) for v in row])


def save_grid_csv(gd: GriddedDensity, path: Path, config_hash: str):
    """Axis coordinate rows, then density values row-major (see README)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# infdef-grid-v1 d={gd.d} config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        for ax in gd.axes:
            w.writerow([_fmt(float(v)) for v in ax])
        vals = np.atleast_2d(gd.values)
        for row in vals:
            w.writerow([_fmt(float(v)) for v in row])


def load_grid_csv(path: Path):
    lines = Path(path).read_text().strip().splitlines()
    head = lines[0]
    if not head.startswith("# infdef-grid-v1"):
        raise ConfigError(f"{path}: not an infdef grid CSV")
    d = int(head.split("d=")[1].split()[0])
    config_hash = head.split("config_hash=")[1].split()[0]
    rows = [np.array([float(v) for v in ln.split(",")]) for ln in lines[1:]]
    axes = tuple(rows[:d])
    vals = np.array(rows[d:])
    if d == 1:
        vals = vals.reshape(-1)
    return GriddedDensity(axes=axes, values=vals), config_hash


# ---------------------------------------------------------------------------
# generate


def cmd_generate(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)
    noise_proto = dict(cfg.noise)
    for seed in cfg.seeds:
        noise = noise_from_config(noise_proto, d=manifold.d, D=manifold.D)
        U = density.sample(cfg.n_train, rng_seed=int(_latent_rng(seed).integers(2**62)))
        charts = np.array([manifold.select_chart(u) for u in U]) if manifold.chart_selector else np.zeros(len(U), dtype=int)
        X = np.empty((len(U), manifold.D))
        Xt = np.empty_like(X)
        V = None
        rng_noise = _noise_rng(seed)
        for ci in np.unique(charts):
            m = charts == ci
            Xc, Xtc, Vc = inflate_batch(noise, manifold, int(ci), U[m], rng_noise)
            X[m], Xt[m] = Xc, Xtc
            if V is None:
                V = np.empty((len(U), Vc.shape[1]))
            V[m] = Vc
        d_dir = out / "data" / f"seed{seed}"
        d_dir.mkdir(parents=True, exist_ok=True)
        _write_matrix_csv(d_dir / "u.csv", [f"u{i}" for i in range(manifold.d)], U, h)
        _write_matrix_csv(d_dir / "x.csv", [f"x{i}" for i in range(manifold.D)], X, h)
        _write_matrix_csv(d_dir / "xtilde.csv", [f"x{i}" for i in range(manifold.D)], Xt, h)
        meta = {
            "config_hash": h,
            "seed": seed,
            "n": cfg.n_train,
            "noise": noise_proto,
            "streams": {"latent": [seed, 0], "noise": [seed, 1]},
        }
        (d_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


# ---------------------------------------------------------------------------
# sweep


def _cell_key(method: str, sigma2: float, seed: int) -> tuple:
    return (method, _fmt(float(sigma2)), str(seed))


def run_sweep_cell(payload: dict) -> dict:
    """One (method, sigma2, seed) training cell; importable for worker pools."""
    cfg = payload["cfg"]
    method, sigma2, seed = payload["method"], payload["sigma2"], payload["seed"]
    manifold, density = _build(cfg)
    t0 = time.perf_counter()
    row = {
        "config_hash": payload["hash"], "manifold": cfg.manifold_name,
        "density": cfg.density_name, "method": method, "sigma2": sigma2, "seed": seed,
        "status": "ok", "ks": math.nan, "best_val_nll": math.nan,
        "sigma_lower_sq": payload["sigma_lower_sq"], "sigma_lower": payload["sigma_lower"],
        "sigma_upper": payload["sigma_upper"], "wall_time_s": math.nan,
        "n_train": cfg.n_train, "iterations": 0, "checkpoint": "",
    }
    try:
        noise = noise_from_config({"kind": method, "sigma2": sigma2}, d=manifold.d, D=manifold.D)
        U = density.sample(cfg.n_train, rng_seed=int(_latent_rng(seed).integers(2**62)))
        ci = 0
        _, Xt, _ = inflate_batch(noise, manifold, ci, U, _noise_rng(seed))
        D = manifold.D
        hyper = FlowHyper(D=D, hidden_dim=cfg.flow.resolved_hidden(D),
                          n_hidden_layers=cfg.flow.n_hidden_layers)
        iters = cfg.flow.resolved_iterations(D)
        tc = TrainConfig(
            batch_size=cfg.flow.batch_size, max_iterations=iters,
            initial_lr=cfg.flow.initial_lr, lr_decay=cfg.flow.lr_decay,
            lr_patience=cfg.flow.lr_patience, val_fraction=cfg.flow.val_fraction,
            val_every=cfg.flow.val_every, seed=seed,
        )
        flow = FlowModel(hyper, seed=seed, init_scale=cfg.flow.init_scale)
        result = train(flow, Xt, tc)
        axes = _eval_axes(cfg, density)
        pi_true = grid_true_density(density, axes)
        pi_hat = induced_latent(deflate(flow, noise), manifold, ci, axes)
        report = ks_statistic(pi_true, pi_hat)
        ck_dir = Path(cfg.out_dir) / "checkpoints"
        ck_dir.mkdir(parents=True, exist_ok=True)
        ck = ck_dir / f"{method}_sig{payload['sigma_index']}_seed{seed}.flow"
        flow.save(ck, seed=seed, iteration=result.best_iteration, val_nll=result.best_val_nll)
        tr_dir = Path(cfg.out_dir) / "traces"
        tr_dir.mkdir(parents=True, exist_ok=True)
        with open(tr_dir / f"{method}_sig{payload['sigma_index']}_seed{seed}.csv", "w", newline="") as fh:
            fh.write(f"# infdef-trace-v1 config_hash={payload['hash']}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "train_nll", "val_nll", "lr"])
            for r in result.trace:
                w.writerow([r["iter"], _fmt(r["train_nll"]), _fmt(r["val_nll"]), _fmt(r["lr"])])
        row.update(ks=report.ks, best_val_nll=result.best_val_nll,
                   iterations=iters, checkpoint=str(ck),
                   wall_time_s=time.perf_counter() - t0)
    except InfdefError as exc:
        row.update(status=f"error:{type(exc).__name__}", wall_time_s=time.perf_counter() - t0)
    return row


def _read_done_keys(path: Path) -> set:
    done = set()
    if path.exists():
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                done.add((rec["method"], rec["sigma2"], rec["seed"]))
    return done


def cmd_sweep(cfg: ExperimentConfig, workers: int = 1) -> Path:
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)

    # geometry-level bounds are sigma2-independent: computed once, stored per row
    bseed = cfg.seeds[0]
    U0 = density.sample(cfg.bounds_n_samples, rng_seed=int(_latent_rng(bseed).integers(2**62)))
    X0 = embed(manifold, 0, U0)
    nn = nearest_neighbor_distances(X0)
    sigma_lower_sq = float(np.mean(nn**2))
    sigma_lower = float(np.mean(nn))
    sigma_upper = sigma_upper_bound(manifold, 0, density, n_samples=cfg.bounds_n_samples,
                                    rng_seed=bseed)

    cells = [
        {"method": m, "sigma2": s2, "seed": sd, "sigma_index": si}
        for m in cfg.methods
        for si, s2 in enumerate(cfg.sigma2_grid)
        for sd in cfg.seeds
    ]
    sweep_path = out / "sweep.csv"
    done = _read_done_keys(sweep_path)
    pending = [c for c in cells if _cell_key(c["method"], c["sigma2"], c["seed"]) not in done]
    payloads = [
        dict(cfg=cfg, hash=h, sigma_lower_sq=sigma_lower_sq, sigma_lower=sigma_lower,
             sigma_upper=sigma_upper, **c)
        for c in pending
    ]

    new_file = not sweep_path.exists()
    with open(sweep_path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new_file:
            w.writerow(SWEEP_COLUMNS)
            fh.flush()
        if workers <= 1:
            results = map(run_sweep_cell, payloads)
            for row in results:
                w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
                fh.flush()
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(run_sweep_cell, payloads):
                    w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
                    fh.flush()

    _write_summary(sweep_path, out / "sweep_summary.csv")
    return sweep_path


def _write_summary(sweep_path: Path, summary_path: Path):
    rows = []
    with open(sweep_path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    groups: dict = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        groups.setdefault((r["method"], float(r["sigma2"])), []).append(float(r["ks"]))
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "sigma2", "ks_mean", "ks_stderr", "n_seeds"])
        for (method, s2) in sorted(groups, key=lambda t: (t[0], t[1])):
            ks = np.array(groups[(method, s2)])
            stderr = float(ks.std(ddof=1) / math.sqrt(len(ks))) if len(ks) > 1 else 0.0
            w.writerow([method, _fmt(s2), _fmt(float(ks.mean())), _fmt(stderr), len(ks)])


# ---------------------------------------------------------------------------
# bounds / baselines / oracle / reachability


def cmd_bounds(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)
    seed = cfg.seeds[0]
    U = density.sample(cfg.bounds_n_samples, rng_seed=int(_latent_rng(seed).integers(2**62)))
    X = embed(manifold, 0, U)
    nn = nearest_neighbor_distances(X)
    upper = sigma_upper_bound(manifold, 0, density,
                              n_samples=cfg.bounds_n_samples, rng_seed=seed)
    payload = {
        "config_hash": h,
        "sigma_lower_sq": float(np.mean(nn**2)),
        "sigma_lower_raw": float(np.mean(nn)),
        "sigma_upper": "inf" if math.isinf(upper) else upper,  # JSON-safe sentinel
        "n_samples": cfg.bounds_n_samples,
        "seed": seed,
    }
    path = out / "bounds.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def cmd_baseline_fom(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)
    seed = cfg.seeds[0]
    U = density.sample(cfg.n_train, rng_seed=int(_latent_rng(seed).integers(2**62)))
    axes = _eval_axes(cfg, density)
    fom_iter = int(cfg.fom.get("iterations", 8000))
    hyper = None
    if cfg.fom.get("hidden_dim"):
        hyper = FlowHyper(D=density.d, hidden_dim=int(cfg.fom["hidden_dim"]),
                          n_hidden_layers=int(cfg.fom.get("n_hidden_layers", 3)))
    gd = fom_baseline(U, density, axes, seed=seed, flow_hyper=hyper,
                      train_cfg=TrainConfig(max_iterations=fom_iter, seed=seed),
                      kde_bandwidth=cfg.fom.get("kde_bandwidth"))
    pi_true = grid_true_density(density, axes)
    report = ks_statistic(pi_true, gd)
    save_grid_csv(gd, out / "fom_grid.csv", h)
    payload = {"config_hash": h, "ks": report.ks, "seed": seed, "n_train": cfg.n_train}
    (out / "fom.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return out / "fom.json"


def cmd_oracle_deflate(cfg: ExperimentConfig, constant_scale: float = 1.0) -> Path:
    """Flow-free end-to-end identity check via the analytic inflated density."""
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)
    noise = noise_from_config(cfg.noise, d=manifold.d, D=manifold.D)
    oracle = AnalyticInflatedDensity(manifold, 0, density, noise, constant_scale=constant_scale)
    axes = _eval_axes(cfg, density)
    pi_true = grid_true_density(density, axes)
    pts = pi_true.points()
    q0 = deflation_constant(noise)
    p_star = np.exp(oracle.log_density_at_latent(pts) - math.log(q0))
    vals = p_star * np.atleast_1d(sqrt_gram(manifold, 0, pts))
    pi_hat = GriddedDensity(axes=axes, values=vals.reshape(pi_true.values.shape))
    report = ks_statistic(pi_true, pi_hat)
    payload = {
        "config_hash": h,
        "ks": report.ks,
        "ordering_values": list(report.ordering_values),
        "constant_scale": constant_scale,
        "noise": cfg.noise,
    }
    (out / "oracle.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    save_grid_csv(pi_true, out / "true_grid.csv", h)
    save_grid_csv(pi_hat, out / "oracle_grid.csv", h)
    return out / "oracle.json"


def cmd_reachability(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    h = check_lock(cfg, out)
    manifold, density = _build(cfg)
    reach = cfg.reachability
    if "interval" in reach:
        lo, hi = reach["interval"]
        noise = NormalUniformInterval(d=manifold.d, D=manifold.D, lo=float(lo), hi=float(hi))
    else:
        noise = noise_from_config(cfg.noise, d=manifold.d, D=manifold.D)
    result = reachability_check(
        manifold, noise, density,
        n_probes=int(reach.get("n_probes", 1000)),
        grid_resolution=int(reach.get("grid_resolution", 512)),
        rng_seed=cfg.seeds[0],
    )
    result["config_hash"] = h
    (out / "reachability.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return out / "reachability.json"
