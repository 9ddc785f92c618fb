"""Noise models that inflate a manifold, and their exact deflation constants.

Normal-space kinds draw a coefficient vector v in R^(D-d) and displace
x = f(u) by A_u v along an orthonormal normal frame; the isotropic kind
adds full-ambient Gaussian noise.  Each kind knows the closed-form value
of its conditional density at zero displacement, q(x|x), which is the
scalar the learned inflated density gets divided by.

Also here: the closed-form expected relative error d/(D-d-2) made by
approximating normal-space Gaussian noise with full ambient Gaussian
noise, its Monte-Carlo counterpart, and the numeric reachability checker
(how often an inflated point admits more than one on-manifold generator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormulaDomainError, ParamError
from .manifolds import (
    ManifoldSpec,
    embed,
    generator_candidates,
    normal_frames,
)

__all__ = [
    "NoiseModel",
    "IsotropicGaussian",
    "NormalGaussian",
    "NormalChiSquared",
    "NormalUniformBall",
    "NormalUniformInterval",
    "noise_from_config",
    "deflation_constant",
    "inflate",
    "inflate_batch",
    "gaussian_vs_normal_error",
    "gaussian_vs_normal_error_mc",
    "error_ratio_samples",
    "reachability_check",
]


@dataclass(frozen=True)
class NoiseModel:
    """Base: dimensions shared by every noise kind."""

    d: int
    D: int

    @property
    def codim(self) -> int:
        return self.D - self.d

    def __post_init__(self):
        if self.codim < 1:
            raise ParamError("noise model needs D > d")

    def is_normal_kind(self) -> bool:
        return True

    def sample_v(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def support_contains(self, v: np.ndarray) -> np.ndarray:
        """Membership of coefficient vectors (n, codim) in the noise support."""
        raise NotImplementedError


@dataclass(frozen=True)
class IsotropicGaussian(NoiseModel):
    """Full-ambient Gaussian: x~ = x + eps, eps ~ N(0, sigma2 I_D)."""

    sigma2: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ParamError("sigma2 must be positive and finite")

    def is_normal_kind(self) -> bool:
        return False

    def sample_v(self, n, rng):
        return math.sqrt(self.sigma2) * rng.standard_normal((n, self.D))

    def support_contains(self, v):
        return np.ones(v.shape[0], dtype=bool)


@dataclass(frozen=True)
class NormalGaussian(NoiseModel):
    """Gaussian restricted to the normal space: v ~ N(0, sigma2 I_(D-d))."""

    sigma2: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ParamError("sigma2 must be positive and finite")

    def sample_v(self, n, rng):
        return math.sqrt(self.sigma2) * rng.standard_normal((n, self.codim))

    def support_contains(self, v):
        return np.ones(v.shape[0], dtype=bool)


@dataclass(frozen=True)
class NormalChiSquared(NoiseModel):
    """Shifted chi-square along the outward normal: v = W - k, W ~ chi2_k.

    Support [-k, inf); only codimension 1 is supported, and the frame's
    first column is sign-fixed outward so the support statement is
    meaningful for circles.
    """

    k: int = 3

    def __post_init__(self):
        super().__post_init__()
        if self.codim != 1:
            raise ParamError("chi-square noise supports codimension 1 only")
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ParamError("k must be an integer >= 1")

    def sample_v(self, n, rng):
        return (rng.chisquare(self.k, size=n) - self.k)[:, None]

    def support_contains(self, v):
        return v[:, 0] >= -self.k


@dataclass(frozen=True)
class NormalUniformBall(NoiseModel):
    """Uniform on the (D-d)-ball of radius tau in the normal space."""

    tau: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ParamError("tau must be positive and finite")

    def sample_v(self, n, rng):
        m = self.codim
        direction = rng.standard_normal((n, m))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = self.tau * rng.random(n) ** (1.0 / m)
        return direction * radius[:, None]

    def support_contains(self, v):
        return np.linalg.norm(v, axis=1) <= self.tau


@dataclass(frozen=True)
class NormalUniformInterval(NoiseModel):
    """Uniform on [lo, hi) along the (sign-fixed) 1-D normal direction."""

    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.codim != 1:
            raise ParamError("interval noise supports codimension 1 only")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ParamError("need lo < hi, both finite")

    def sample_v(self, n, rng):
        return (self.lo + (self.hi - self.lo) * rng.random(n))[:, None]

    def support_contains(self, v):
        return (v[:, 0] >= self.lo) & (v[:, 0] < self.hi)


def noise_from_config(cfg: dict, d: int, D: int) -> NoiseModel:
    """Build a noise model from a config record like {"kind": "nid", "sigma2": 0.01}."""
    kind = cfg.get("kind")
    if kind == "nid":
        return NormalGaussian(d=d, D=D, sigma2=float(cfg.get("sigma2", 1.0)))
    if kind == "iid":
        return IsotropicGaussian(d=d, D=D, sigma2=float(cfg.get("sigma2", 1.0)))
    if kind == "chi2":
        return NormalChiSquared(d=d, D=D, k=int(cfg.get("k", 3)))
    if kind == "reach_ball":
        return NormalUniformBall(d=d, D=D, tau=float(cfg.get("tau", 1.0)))
    if kind == "interval":
        return NormalUniformInterval(d=d, D=D, lo=float(cfg.get("lo", -1.0)), hi=float(cfg.get("hi", 1.0)))
    raise ParamError(f"unknown noise kind {kind!r}")


def deflation_constant(noise: NoiseModel) -> float:
    """q(x|x): the noise density evaluated at zero displacement."""
    m = noise.codim
    if isinstance(noise, (IsotropicGaussian, NormalGaussian)):
        return (2 * math.pi * noise.sigma2) ** (-m / 2.0)
    if isinstance(noise, NormalChiSquared):
        k = noise.k
        return math.exp((k / 2.0 - 1.0) * math.log(k) - k / 2.0 - (k / 2.0) * math.log(2.0) - math.lgamma(k / 2.0))
    if isinstance(noise, NormalUniformBall):
        vol = math.pi ** (m / 2.0) * noise.tau**m / math.gamma(m / 2.0 + 1.0)
        return 1.0 / vol
    if isinstance(noise, NormalUniformInterval):
        return 1.0 / (noise.hi - noise.lo)
    raise ParamError(f"no deflation constant for {type(noise).__name__}")


def inflate_batch(noise: NoiseModel, manifold: ManifoldSpec, chart_index: int,
                  U: np.ndarray, rng: np.random.Generator):
    """Vectorized inflation of latent points: returns (X, X_tilde, V)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    X = embed(manifold, chart_index, U)
    V = noise.sample_v(U.shape[0], rng)
    if noise.is_normal_kind():
        A = normal_frames(manifold, chart_index, U)  # (n, D, D-d)
        Xt = X + np.einsum("nij,nj->ni", A, V)
    else:
        Xt = X + V
    return X, Xt, V


def inflate(noise: NoiseModel, manifold: ManifoldSpec, chart_index: int, u, rng_seed: int):
    """Inflate a single latent point deterministically for the given seed."""
    rng = np.random.default_rng(rng_seed)
    X, Xt, V = inflate_batch(noise, manifold, chart_index, np.atleast_2d(u), rng)
    return X[0], Xt[0], V[0]


def gaussian_vs_normal_error(d: int, D: int) -> float:
    """Expected ||eps_t||^2 / ||eps_n||^2 for isotropic Gaussian noise: d/(D-d-2)."""
    if D - d <= 2:
        raise FormulaDomainError("expectation diverges unless D - d > 2")
    return d / (D - d - 2.0)


def error_ratio_samples(manifold: ManifoldSpec, chart_index: int, u, sigma2: float,
                        n_samples: int, rng_seed: int) -> np.ndarray:
    """Monte-Carlo samples of ||eps_t||^2 / ||eps_n||^2 at a manifold point."""
    rng = np.random.default_rng(rng_seed)
    U = np.atleast_2d(np.asarray(u, dtype=float))
    A = normal_frames(manifold, chart_index, U)[0]
    eps = math.sqrt(sigma2) * rng.standard_normal((n_samples, manifold.D))
    coeff = eps @ A
    nsq = np.sum(coeff**2, axis=1)
    tsq = np.sum(eps**2, axis=1) - nsq
    return tsq / nsq


def gaussian_vs_normal_error_mc(manifold: ManifoldSpec, chart_index: int, u, sigma2: float,
                                n_samples: int = 10**6, rng_seed: int = 0) -> float:
    """Monte-Carlo estimate of the tangent-to-normal squared-error ratio."""
    if manifold.D - manifold.d <= 2:
        raise FormulaDomainError("expectation diverges unless D - d > 2")
    return float(np.mean(error_ratio_samples(manifold, chart_index, u, sigma2, n_samples, rng_seed)))


def _quantile_box(latent_density, q: float = 0.999):
    """Truncate a density's box at the marginal q-quantile on unbounded-ish axes."""
    box = []
    for axis, (lo, hi) in enumerate(latent_density.domain):
        grid = np.linspace(lo, hi, 512)
        cdf = latent_density.cdf_1d(grid, axis=axis)
        hi_q = float(np.interp(q, cdf, grid))
        box.append((lo, max(hi_q, lo + 1e-6)))
    return box


def reachability_check(manifold: ManifoldSpec, noise: NoiseModel, latent_density,
                       n_probes: int = 1000, grid_resolution: int = 512,
                       rng_seed: int = 0, tie_tol: float = 1e-3) -> dict:
    """Fraction of inflated probes with more than one admissible generator.

    A generator of x~ is a latent point whose normal space contains x~
    (a stationary point of the squared distance) with the displacement
    coefficients inside the noise support.  Candidates closer than
    ``tie_tol`` in ambient space are treated as one generator.
    """
    if n_probes < 100:
        raise ParamError("n_probes must be >= 100")
    if not noise.is_normal_kind():
        raise ParamError("reachability is defined for normal-space noise kinds")
    rng = np.random.default_rng(rng_seed)
    U = latent_density.sample(n_probes, rng_seed=rng_seed)
    if U.shape[1] != manifold.d:
        raise ParamError("latent density dimension does not match the manifold")

    violations = 0
    examples = []
    for i in range(n_probes):
        u = U[i]
        ci = manifold.select_chart(u)
        _, xt, _ = inflate_batch(noise, manifold, ci, u[None, :], rng)
        xt = xt[0]
        cands = generator_candidates(manifold, xt, grid_resolution)
        admissible = []
        for cj, uc, _dist in cands:
            A = normal_frames(manifold, cj, uc[None, :])[0]
            r = xt - embed(manifold, cj, uc)
            v = A.T @ r
            if np.linalg.norm(r - A @ v) > 1e-6 * max(1.0, np.linalg.norm(r)):
                continue
            if not noise.support_contains(v[None, :])[0]:
                continue
            x_gen = embed(manifold, cj, uc)
            if any(np.linalg.norm(x_gen - prev) < tie_tol for prev in admissible):
                continue
            admissible.append(x_gen)
        if len(admissible) > 1:
            violations += 1
            if len(examples) < 10:
                examples.append({"x_tilde": xt.tolist(), "n_generators": len(admissible)})
    return {
        "violation_fraction": violations / n_probes,
        "n_probes": n_probes,
        "examples": examples,
    }
