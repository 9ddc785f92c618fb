"""Maximum-likelihood training: Adam, minibatching, patience LR decay.

Training is single-threaded and bit-deterministic for a given seed; the
batch stream and the validation split both come from one seeded
generator.  The best-so-far validation parameters are what the caller
gets back.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, NumericalError, ParamError
from .flow import FlowModel

__all__ = ["TrainConfig", "Adam", "TrainResult", "train", "DESK_PRESET", "PAPER_PRESET"]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 200
    max_iterations: int = 20000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    initial_lr: float = 0.1
    lr_decay: float = 0.5
    lr_patience: int = 2000          # optimization steps without improvement
    improvement_eps: float = 1e-4    # nats of validation NLL that count as progress
    val_fraction: float = 0.1
    val_every: int = 100
    seed: int = 0
    divergence_limit: int = 50

    def __post_init__(self):
        if min(self.batch_size, self.max_iterations, self.lr_patience, self.val_every) <= 0:
            raise ParamError("counts must be positive")
        if not (0.0 < self.lr_decay < 1.0):
            raise ParamError("lr_decay must lie in (0, 1)")
        if not (0.0 < self.val_fraction < 1.0):
            raise ParamError("val_fraction must lie in (0, 1)")
        if self.initial_lr <= 0 or self.eps <= 0:
            raise ParamError("learning rate and eps must be positive")


class Adam:
    """Adam over a list of parameter tensors (first/second moment caches)."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, grads, lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p.data -= lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class TrainResult:
    flow: FlowModel
    trace: list            # rows: {iter, train_nll, val_nll, lr}
    best_val_nll: float
    best_iteration: int
    wall_time_s: float


def train(flow: FlowModel, data: np.ndarray, cfg: TrainConfig) -> TrainResult:
    """Minibatch Adam with a 10% validation holdout and patience LR decay.

    Returns the parameters achieving the best validation NLL.  Raises
    DivergenceError if the loss stays non-finite for
    ``cfg.divergence_limit`` consecutive steps.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != flow.hyper.D:
        raise ParamError(f"data must be (n, {flow.hyper.D})")
    if data.shape[0] < cfg.batch_size:
        raise ParamError("need at least batch_size training points")

    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    n = data.shape[0]
    n_val = max(1, int(round(n * cfg.val_fraction)))
    perm = rng.permutation(n)
    val, tr = data[perm[:n_val]], data[perm[n_val:]]
    if tr.shape[0] < cfg.batch_size:
        raise ParamError("validation split leaves fewer points than batch_size")

    opt = Adam(flow.params, cfg.beta1, cfg.beta2, cfg.eps)
    lr = cfg.initial_lr
    best_val = np.inf
    best_params = flow.param_vector()
    best_iter = 0
    patience_steps = 0
    nonfinite_streak = 0
    trace = []
    interval_losses = []

    for it in range(1, cfg.max_iterations + 1):
        idx = rng.integers(0, tr.shape[0], cfg.batch_size)
        try:
            loss, grads = flow.nll_loss(tr[idx])
        except NumericalError:
            nonfinite_streak += 1
            if nonfinite_streak >= cfg.divergence_limit:
                raise DivergenceError(
                    f"loss non-finite for {nonfinite_streak} consecutive steps at iteration {it}"
                )
            continue
        nonfinite_streak = 0
        opt.step(grads, lr)
        interval_losses.append(loss)

        if it % cfg.val_every == 0 or it == cfg.max_iterations:
            try:
                val_nll = flow.mean_nll(val)
            except NumericalError:
                val_nll = np.inf
            if val_nll < best_val - cfg.improvement_eps:
                best_val = val_nll
                best_params = flow.param_vector()
                best_iter = it
                patience_steps = 0
            else:
                patience_steps += cfg.val_every
                if patience_steps >= cfg.lr_patience:
                    lr *= cfg.lr_decay
                    patience_steps = 0
            trace.append({
                "iter": it,
                "train_nll": float(np.mean(interval_losses)) if interval_losses else np.nan,
                "val_nll": float(val_nll),
                "lr": lr,
            })
            interval_losses = []

    flow.set_param_vector(best_params)
    return TrainResult(flow=flow, trace=trace, best_val_nll=float(best_val),
                       best_iteration=best_iter, wall_time_s=time.perf_counter() - t0)


def desk_hidden(D: int) -> int:
    return 50 * D


DESK_PRESET = {"n_hidden_layers": 3, "hidden_per_dim": 50, "max_iterations": 20000}
PAPER_PRESET = {"n_hidden_layers": 3, "hidden_per_dim": 50, "max_iterations": 70000}
