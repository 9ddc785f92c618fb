"""Experiment configuration: versioned JSON schema, strict validation, hashing.

Unknown keys are errors at every level; the resolved config (defaults
applied) is content-hashed, and every output file in a run directory
carries that hash so mixed-config directories get rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1

DESK_SIGMA2_GRID = [float(x) for x in np.logspace(-9, 1, 12)]
PAPER_SIGMA2_GRID = [float(x) for x in np.logspace(-9, 1, 24)]


def _check_keys(record: dict, allowed: set, where: str):
    unknown = set(record) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)} (allowed: {sorted(allowed)})")


def _positive(value, where: str):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{where}: must be positive and finite, got {value!r}")
    return value


@dataclass
class FlowSettings:
    preset: str = "desk"
    hidden_dim: Optional[int] = None          # default: 50 * D
    n_hidden_layers: int = 3
    iterations: Optional[int] = None          # default by preset
    batch_size: int = 200
    initial_lr: float = 0.1
    lr_decay: float = 0.5
    lr_patience: int = 2000
    val_fraction: float = 0.1
    val_every: int = 100
    init_scale: float = 1e-2

    def resolved_hidden(self, D: int) -> int:
        return self.hidden_dim if self.hidden_dim is not None else 50 * D

    def resolved_iterations(self, D: int) -> int:
        if self.iterations is not None:
            return self.iterations
        if self.preset == "paper":
            return 100000 if D >= 15 else 70000
        return 20000


@dataclass
class ExperimentConfig:
    manifold_name: str
    manifold_params: dict
    density_name: str
    density_params: dict
    noise: dict
    methods: list
    sigma2_grid: list
    n_train: int
    seeds: list
    flow: FlowSettings
    eval_resolution_1d: int
    eval_resolution_2d: int
    bounds_n_samples: int
    fom: dict
    reachability: dict
    out_dir: str

    def content_hash(self) -> str:
        payload = self.canonical(exclude_out=True)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def canonical(self, exclude_out: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "manifold": {"name": self.manifold_name, "params": self.manifold_params},
            "density": {"name": self.density_name, "params": self.density_params},
            "noise": self.noise,
            "methods": self.methods,
            "sigma2_grid": self.sigma2_grid,
            "n_train": self.n_train,
            "seeds": self.seeds,
            "flow": vars(self.flow),
            "eval": {"resolution_1d": self.eval_resolution_1d,
                     "resolution_2d": self.eval_resolution_2d},
            "bounds": {"n_samples": self.bounds_n_samples},
            "fom": self.fom,
            "reachability": self.reachability,
        }
        if not exclude_out:
            d["out_dir"] = self.out_dir
        return d


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate a config file; CLI overrides applied before hashing."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, overrides or {}, where=str(path))


def parse_config(raw: dict, overrides: Optional[dict] = None, where: str = "config") -> ExperimentConfig:
    overrides = overrides or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: top level must be an object")
    _check_keys(raw, {"schema_version", "manifold", "density", "noise", "methods",
                      "sigma2_grid", "n_train", "seeds", "flow", "eval", "bounds",
                      "fom", "reachability", "out_dir"}, where)
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{where}.schema_version: expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")

    man = raw.get("manifold")
    if not isinstance(man, dict) or "name" not in man:
        raise ConfigError(f"{where}.manifold: need an object with a 'name'")
    _check_keys(man, {"name", "params"}, f"{where}.manifold")

    den = raw.get("density")
    if not isinstance(den, dict) or "name" not in den:
        raise ConfigError(f"{where}.density: need an object with a 'name'")
    _check_keys(den, {"name", "params"}, f"{where}.density")

    noise = raw.get("noise", {"kind": "nid", "sigma2": 1.0})
    _check_keys(noise, {"kind", "sigma2", "k", "tau", "lo", "hi"}, f"{where}.noise")

    methods = raw.get("methods", ["nid", "iid"])
    for m in methods:
        if m not in ("nid", "iid", "chi2", "reach_ball", "interval"):
            raise ConfigError(f"{where}.methods: unknown method {m!r}")

    preset = overrides.get("preset")
    sigma2_grid = raw.get("sigma2_grid")
    if sigma2_grid is None:
        sigma2_grid = PAPER_SIGMA2_GRID if preset == "paper" else DESK_SIGMA2_GRID
    sigma2_grid = [float(s) for s in sigma2_grid]
    if any(s <= 0 for s in sigma2_grid) or sorted(sigma2_grid) != sigma2_grid:
        raise ConfigError(f"{where}.sigma2_grid: must be strictly positive and sorted")

    n_train = int(raw.get("n_train", 100000))
    _positive(n_train, f"{where}.n_train")

    seeds = raw.get("seeds", [0, 1, 2])
    if "seed" in overrides and overrides["seed"] is not None:
        seeds = [int(overrides["seed"])]
    if not seeds:
        raise ConfigError(f"{where}.seeds: must be nonempty")
    seeds = [int(s) for s in seeds]

    flow_raw = dict(raw.get("flow", {}))
    _check_keys(flow_raw, {"preset", "hidden_dim", "n_hidden_layers", "iterations",
                           "batch_size", "initial_lr", "lr_decay", "lr_patience",
                           "val_fraction", "val_every", "init_scale"}, f"{where}.flow")
    if preset:
        flow_raw["preset"] = preset
    flow = FlowSettings(**flow_raw)
    if flow.preset not in ("desk", "paper"):
        raise ConfigError(f"{where}.flow.preset: expected 'desk' or 'paper', got {flow.preset!r}")

    ev = raw.get("eval", {})
    _check_keys(ev, {"resolution_1d", "resolution_2d"}, f"{where}.eval")
    bounds = raw.get("bounds", {})
    _check_keys(bounds, {"n_samples"}, f"{where}.bounds")
    fom = dict(raw.get("fom", {}))
    _check_keys(fom, {"iterations", "kde_bandwidth", "hidden_dim", "n_hidden_layers"}, f"{where}.fom")
    reach = dict(raw.get("reachability", {}))
    _check_keys(reach, {"n_probes", "grid_resolution", "interval", "tau"}, f"{where}.reachability")

    out_dir = overrides.get("out") or raw.get("out_dir", "runs/experiment")

    return ExperimentConfig(
        manifold_name=str(man["name"]),
        manifold_params=dict(man.get("params", {})),
        density_name=str(den["name"]),
        density_params=dict(den.get("params", {})),
        noise=dict(noise),
        methods=list(methods),
        sigma2_grid=sigma2_grid,
        n_train=n_train,
        seeds=seeds,
        flow=flow,
        eval_resolution_1d=int(ev.get("resolution_1d", 1000)),
        eval_resolution_2d=int(ev.get("resolution_2d", 100)),
        bounds_n_samples=int(bounds.get("n_samples", 10000)),
        fom=fom,
        reachability=reach,
        out_dir=str(out_dir),
    )


def check_lock(cfg: ExperimentConfig, out_dir: Path):
    """Create or verify the run directory's config lock (rejects mixed configs)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / "config.lock.json"
    h = cfg.content_hash()
    if lock.exists():
        existing = json.loads(lock.read_text())
        if existing.get("config_hash") != h:
            raise ConfigError(
                f"{out_dir}: existing run has config hash {existing.get('config_hash')}, "
                f"current config hashes to {h}; refusing to mix configs in one directory"
            )
    else:
        lock.write_text(json.dumps({"config_hash": h, "config": cfg.canonical()},
                                   indent=2, sort_keys=True) + "\n")
    return h
