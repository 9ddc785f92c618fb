"""Deflation, induced latent densities, KS statistics, noise-magnitude bounds.

The deflation step divides a learned inflated density by the noise
model's closed-form constant at zero displacement; pulling the result
back through a chart and multiplying by sqrt(det G) yields the induced
latent density that gets compared against the ground truth with a
Kolmogorov-Smirnov statistic (in 2-D: the maximum over all four corner
orderings of the cumulative sums).

Estimates are never renormalized before the comparison: a wrong scaling
factor must show up as a KS floor, not get silently washed out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import gaussian_kde

from .densities import LatentDensity
from .errors import GridMismatchError, ParamError, SingularityError
from .flow import FlowHyper, FlowModel
from .manifolds import (
    ManifoldSpec,
    embed,
    jacobian,
    normal_frames,
    sqrt_gram,
)
from .noise import NoiseModel, deflation_constant
from .training import TrainConfig, train

__all__ = [
    "DensityEstimate",
    "GriddedDensity",
    "KSReport",
    "AnalyticInflatedDensity",
    "deflate",
    "induced_latent",
    "latent_grid_axes",
    "grid_true_density",
    "ks_statistic",
    "sigma2_prop_pointwise",
    "sigma2_gauss_pointwise",
    "principal_curvatures",
    "sigma_upper_bound",
    "sigma_lower_bound",
    "nearest_neighbor_distances",
    "fom_baseline",
]


# --------------------------------------------------------------------------
# density estimates


@dataclass
class DensityEstimate:
    """Deflated on-manifold density estimate p^(x) with provenance."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    log_evaluator: Callable[[np.ndarray], np.ndarray]
    provenance: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(x)


class AnalyticInflatedDensity:
    """Closed-form inflated density for charts with analytic sqrt-Gram.

    On-manifold evaluation uses q(f(u)) = det G(u)^(-1/2) pi_u(u) pi_v(0);
    ambient points are first pulled back through the chart.  This stands in
    for a perfectly trained flow, so pipeline plumbing can be checked with
    no training in the loop.  ``constant_scale`` deliberately mis-scales
    the density (test hook for the KS floor behaviour).
    """

    def __init__(self, manifold: ManifoldSpec, chart_index: int,
                 latent_density: LatentDensity, noise: NoiseModel,
                 constant_scale: float = 1.0):
        self.manifold = manifold
        self.chart_index = chart_index
        self.latent_density = latent_density
        self.noise = noise
        self.constant_scale = float(constant_scale)

    def log_density_at_latent(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        sg = np.atleast_1d(sqrt_gram(self.manifold, self.chart_index, U))
        pi_u = np.atleast_1d(self.latent_density.pdf(U))
        qv0 = deflation_constant(self.noise) * self.constant_scale
        return -np.log(sg) + np.log(pi_u) + math.log(qv0)

    def log_density(self, x) -> np.ndarray:
        from .manifolds import nearest_point

        X = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(X.shape[0])
        for i, xi in enumerate(X):
            ci, u, _dist = nearest_point(self.manifold, xi, grid_resolution=64)[0]
            if ci != self.chart_index:
                raise ParamError("ambient point resolves to a different chart")
            out[i] = self.log_density_at_latent(u[None, :])[0]
        return out if np.asarray(x).ndim != 1 else float(out[0])


def deflate(flow, noise: NoiseModel) -> DensityEstimate:
    """Divide a learned inflated density by the noise constant q(x|x)."""
    q0 = deflation_constant(noise)
    if not (q0 > 0 and np.isfinite(q0)):
        raise ParamError("deflation constant must be positive and finite")
    log_q0 = math.log(q0)

    def log_eval(x):
        return flow.log_density(x) - log_q0

    def evaluator(x):
        return np.exp(log_eval(x))

    prov = {
        "noise": repr(noise),
        "deflation_constant": q0,
        "flow": getattr(flow, "hyper", None) and vars(flow.hyper) or type(flow).__name__,
    }
    return DensityEstimate(evaluator=evaluator, log_evaluator=log_eval, provenance=prov)


# --------------------------------------------------------------------------
# gridded densities and KS


@dataclass
class GriddedDensity:
    """Density values tabulated on an axis-aligned latent grid."""

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(a.size for a in self.axes):
            raise GridMismatchError("values shape does not match axes")

    @property
    def d(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        if self.d == 1:
            return self.axes[0][:, None]
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class KSReport:
    ks: float
    grid_shape: tuple[int, ...]
    ordering_values: tuple[float, ...]


def latent_grid_axes(domain: Sequence[tuple[float, float]], resolution_1d: int = 1000,
                     resolution_2d: int = 100, inset: float = 1e-6):
    """Evenly spaced evaluation axes over a latent box, strictly interior."""
    d = len(domain)
    res = resolution_1d if d == 1 else resolution_2d
    axes = []
    for lo, hi in domain:
        pad = inset * (hi - lo)
        axes.append(np.linspace(lo + pad, hi - pad, res))
    return tuple(axes)


def grid_true_density(density: LatentDensity, axes) -> GriddedDensity:
    gd = GriddedDensity(axes=tuple(axes), values=np.zeros(tuple(a.size for a in axes)))
    vals = density.pdf(gd.points())
    return GriddedDensity(axes=gd.axes, values=vals.reshape(gd.values.shape))


def induced_latent(estimate: DensityEstimate, manifold: ManifoldSpec, chart_index: int,
                   axes) -> GriddedDensity:
    """pi^(u) = p^(f(u)) * sqrt(det G(u)) on the grid, not renormalized.

    Grid points where the chart degenerates are dropped (NaN) and counted
    in the returned object's ``dropped`` attribute.
    """
    gd_shape = tuple(a.size for a in axes)
    pts = GriddedDensity(axes=tuple(axes), values=np.zeros(gd_shape)).points()
    X = embed(manifold, chart_index, pts)
    vals = estimate(X)
    dropped = 0
    try:
        sg = np.atleast_1d(sqrt_gram(manifold, chart_index, pts))
        vals = vals * sg
    except SingularityError:
        out = np.empty(pts.shape[0])
        for i in range(pts.shape[0]):
            try:
                out[i] = vals[i] * sqrt_gram(manifold, chart_index, pts[i])
            except SingularityError:
                out[i] = np.nan
                dropped += 1
        vals = out
    result = GriddedDensity(axes=tuple(axes), values=vals.reshape(gd_shape))
    result.dropped = dropped
    return result


def _cum_trapezoid(vals: np.ndarray, grid: np.ndarray, axis: int) -> np.ndarray:
    v = np.moveaxis(vals, axis, 0)
    dg = np.diff(grid)
    inc = (v[1:] + v[:-1]) / 2.0 * dg.reshape((-1,) + (1,) * (v.ndim - 1))
    out = np.concatenate([np.zeros_like(v[:1]), np.cumsum(inc, axis=0)], axis=0)
    return np.moveaxis(out, 0, axis)


def _orderings_2d(vals: np.ndarray, g1: np.ndarray, g2: np.ndarray):
    """Cumulative mass for the four corner orderings (<=,<=), (<=,>=), (>=,<=), (>=,>=)."""
    out = []
    for flip1 in (False, True):
        for flip2 in (False, True):
            v = vals[::-1] if flip1 else vals
            v = v[:, ::-1] if flip2 else v
            c = _cum_trapezoid(v, g1, 0)
            c = _cum_trapezoid(c, g2, 1)
            out.append(c)
    return out


def ks_statistic(pi_true: GriddedDensity, pi_hat: GriddedDensity) -> KSReport:
    """Sup-distance between cumulative distributions on a shared grid."""
    if pi_true.d != pi_hat.d or any(
        a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=1e-12)
        for a, b in zip(pi_true.axes, pi_hat.axes)
    ):
        raise GridMismatchError("densities tabulated on different grids")
    if np.any(~np.isfinite(pi_true.values)) or np.any(~np.isfinite(pi_hat.values)):
        raise GridMismatchError("non-finite grid values (dropped points?)")
    if pi_true.d == 1:
        g = pi_true.axes[0]
        F = _cum_trapezoid(pi_true.values, g, 0)
        G = _cum_trapezoid(pi_hat.values, g, 0)
        val = float(np.max(np.abs(F - G)))
        return KSReport(ks=val, grid_shape=(g.size,), ordering_values=(val,))
    g1, g2 = pi_true.axes
    vals = []
    for Ft, Gh in zip(_orderings_2d(pi_true.values, g1, g2), _orderings_2d(pi_hat.values, g1, g2)):
        vals.append(float(np.max(np.abs(Ft - Gh))))
    return KSReport(ks=max(vals), grid_shape=(g1.size, g2.size), ordering_values=tuple(vals))


# --------------------------------------------------------------------------
# noise-magnitude bounds


def sigma2_prop_pointwise(manifold: ManifoldSpec, chart_index: int,
                          density: LatentDensity, u) -> float:
    """2 pi(u) / |sum_ij (hess(u) * (J^T J)^-1(u))_ij|; inf when flat."""
    u = np.asarray(u, dtype=float)
    J = jacobian(manifold, chart_index, u)
    Ginv = np.linalg.inv(J.T @ J)
    H = density.hess(u)
    denom = abs(float(np.sum(H * Ginv)))
    if denom < 1e-300:
        return math.inf
    return 2.0 * float(density.pdf(u)) / denom


def principal_curvatures(manifold: ManifoldSpec, chart_index: int, u,
                         h_scale: float = 1e-4) -> np.ndarray:
    """Numeric principal curvatures from the second fundamental form (d <= 2)."""
    u = np.asarray(u, dtype=float)
    d, D = manifold.d, manifold.D
    chart = manifold.chart(chart_index)
    f = chart.chart_map

    def second_partials(ui):
        h = h_scale * np.maximum(1.0, np.abs(ui))
        out = np.empty((d, d, D))
        f0 = f(ui[None, :])[0]
        for a in range(d):
            ea = np.zeros(d)
            ea[a] = h[a]
            out[a, a] = (f(ui[None, :] + ea) + f(ui[None, :] - ea) - 2 * f0)[0] / h[a] ** 2
            for b in range(a + 1, d):
                eb = np.zeros(d)
                eb[b] = h[b]
                mixed = (
                    f(ui[None, :] + ea + eb)[0]
                    - f(ui[None, :] + ea - eb)[0]
                    - f(ui[None, :] - ea + eb)[0]
                    + f(ui[None, :] - ea - eb)[0]
                ) / (4 * h[a] * h[b])
                out[a, b] = mixed
                out[b, a] = mixed
        return out

    J = jacobian(manifold, chart_index, u)
    fpp = second_partials(u)
    if d == 1:
        fp = J[:, 0]
        speed_sq = float(fp @ fp)
        T = fp / math.sqrt(speed_sq)
        curv_vec = fpp[0, 0] - T * (T @ fpp[0, 0])
        return np.array([np.linalg.norm(curv_vec) / speed_sq])
    if d == 2 and D == 3:
        n = normal_frames(manifold, chart_index, u[None, :])[0][:, 0]
        II = np.array([[n @ fpp[0, 0], n @ fpp[0, 1]], [n @ fpp[0, 1], n @ fpp[1, 1]]])
        G = J.T @ J
        S = np.linalg.solve(G, II)
        return np.sort(np.abs(np.real(np.linalg.eigvals(S))))
    raise ParamError("principal curvatures implemented for d=1 (any D) and d=2, D=3")


def sigma2_gauss_pointwise(manifold: ManifoldSpec, chart_index: int, u) -> float:
    """(1 / max |principal curvature|)^2; inf for flat points."""
    u = np.asarray(u, dtype=float)
    if manifold.max_curvature is not None:
        kmax = float(manifold.max_curvature(u[None, :])[0])
    else:
        kmax = float(np.max(principal_curvatures(manifold, chart_index, u)))
    if kmax < 1e-300:
        return math.inf
    return (1.0 / kmax) ** 2


def _sigma2_bound_at(manifold, chart_index, density, u) -> float:
    prop = sigma2_prop_pointwise(manifold, chart_index, density, u)
    gauss = sigma2_gauss_pointwise(manifold, chart_index, u)
    if math.isinf(gauss):
        return prop
    if math.isinf(prop):
        return gauss
    return min(prop, gauss)


def sigma_upper_bound(manifold: ManifoldSpec, chart_index: int, density: LatentDensity,
                      n_samples: int = 10**4, rng_seed: int = 0,
                      method: str = "sample") -> float:
    """Average over the latent density of min(prop bound, curvature bound).

    ``method="sample"`` draws from the density (stratified inverse-CDF in
    1-D, which keeps the Monte-Carlo error negligible at 1e4 points);
    ``method="quadrature"`` integrates on a dense grid (1-D only).
    """
    if method == "quadrature":
        if density.d != 1:
            raise ParamError("quadrature mode is 1-D only")
        lo, hi = density.domain[0]
        pad = 1e-9 * (hi - lo)
        grid = np.linspace(lo + pad, hi - pad, 4096)
        vals = np.array([_sigma2_bound_at(manifold, chart_index, density, np.array([g])) for g in grid])
        pdf = density.pdf(grid[:, None])
        if np.any(np.isinf(vals)):
            return math.inf
        return float(np.trapezoid(vals * pdf, grid) / np.trapezoid(pdf, grid))
    U = density.sample(n_samples, rng_seed=rng_seed, stratified=density.d == 1)
    total = 0.0
    for i in range(n_samples):
        b = _sigma2_bound_at(manifold, chart_index, density, U[i])
        if math.isinf(b):
            return math.inf
        total += b
    return total / n_samples


def nearest_neighbor_distances(data: np.ndarray) -> np.ndarray:
    """L2 distance from each sample to its nearest other sample."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ParamError("need at least two points")
    tree = cKDTree(data)
    dist, _ = tree.query(data, k=2)
    return dist[:, 1]


def sigma_lower_bound(data: np.ndarray) -> float:
    """Mean squared nearest-neighbor distance (lives on the sigma^2 axis)."""
    return float(np.mean(nearest_neighbor_distances(data) ** 2))


# --------------------------------------------------------------------------
# flow-on-latent baseline


def fom_baseline(latent_samples: np.ndarray, latent_density: LatentDensity, axes,
                 seed: int = 0, flow_hyper: Optional[FlowHyper] = None,
                 train_cfg: Optional[TrainConfig] = None,
                 kde_bandwidth: Optional[float] = None) -> GriddedDensity:
    """Baseline latent density estimate: flow on latent samples, or a
    Gaussian KDE when the true latent density is constant."""
    latent_samples = np.asarray(latent_samples, dtype=float)
    if latent_samples.ndim != 2:
        raise ParamError("latent samples must be (n, d)")
    if latent_samples.shape[0] < 1000:
        raise ParamError("need at least 1000 latent samples")
    gd = GriddedDensity(axes=tuple(axes), values=np.zeros(tuple(a.size for a in axes)))
    pts = gd.points()
    if latent_density.is_uniform:
        kde = gaussian_kde(latent_samples.T, bw_method=kde_bandwidth)
        vals = kde(pts.T)
        return GriddedDensity(axes=gd.axes, values=vals.reshape(gd.values.shape))
    d = latent_samples.shape[1]
    hyper = flow_hyper or FlowHyper(D=d, hidden_dim=50 * d, n_hidden_layers=3)
    cfg = train_cfg or TrainConfig(max_iterations=8000, seed=seed)
    flow = FlowModel(hyper, seed=seed)
    train(flow, latent_samples, cfg)
    vals = np.exp(flow.log_density(pts))
    return GriddedDensity(axes=gd.axes, values=vals.reshape(gd.values.shape))
