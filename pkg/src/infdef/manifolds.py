"""Chart-based manifolds embedded in R^D with analytic geometry.

Each manifold is a list of charts.  A chart knows its latent box, the
embedding map, and (when available) the analytic Jacobian and the analytic
square-root Gram determinant used as the reference in geometry tests.
All maps are vectorized over a leading batch axis: ``(n, d) -> (n, D)``.

Registry names: ``s1``, ``s2``, ``t2``, ``h2``, ``thin_spiral``,
``swiss_roll``, ``hs2``, ``so2``.  ``s1:D=<n>`` pads the circle embedding
with zero coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ChartError, DomainError, SingularityError, UnknownManifoldError

FD_STEP_SCALE = 1e-6          # central-difference step: h_i = scale * max(1, |u_i|)
GRAM_DET_FLOOR = 1e-14
FRAME_ORTHO_TOL = 1e-10
TIE_TOL = 1e-3                # ambient-distance tie tolerance for generator counting
MERGE_TOL = 1e-4              # latent-space merge radius for candidate dedup


@dataclass(frozen=True)
class ChartSpec:
    """One chart: latent box plus embedding map and optional analytics.

    ``latent_domain`` is the mathematical domain (axes may be infinite);
    ``grid_domain`` is the bounded box used for gridding and sampling, and
    equals the latent domain whenever that is already bounded.
    ``sample_margin`` shrinks the grid box when drawing random interior
    points so finite differences stay away from singular edges.
    """

    latent_domain: tuple[tuple[float, float], ...]
    chart_map: Callable[[np.ndarray], np.ndarray]
    analytic_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    analytic_sqrt_gram: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grid_domain: Optional[tuple[tuple[float, float], ...]] = None
    periodic: Optional[tuple[bool, ...]] = None
    sample_margin: float = 1e-6

    def __post_init__(self):
        if self.grid_domain is None:
            object.__setattr__(self, "grid_domain", self.latent_domain)
        for lo, hi in self.grid_domain:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError("grid_domain must be a bounded box")
        if self.periodic is None:
            object.__setattr__(self, "periodic", tuple(False for _ in self.latent_domain))


@dataclass(frozen=True)
class ManifoldSpec:
    """A d-dimensional manifold embedded in R^D, covered by ordered charts."""

    name: str
    d: int
    D: int
    charts: tuple[ChartSpec, ...]
    chart_selector: Optional[Callable[[np.ndarray], int]] = None
    max_curvature: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.d >= self.D:
            raise ValueError("intrinsic dimension must be below embedding dimension")
        if not self.charts:
            raise ValueError("at least one chart required")

    def chart(self, index: int) -> ChartSpec:
        if not 0 <= index < len(self.charts):
            raise ChartError(f"{self.name}: chart index {index} out of range")
        return self.charts[index]

    def select_chart(self, u: np.ndarray) -> int:
        if self.chart_selector is None:
            return 0
        return self.chart_selector(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class NormalFrame:
    """Orthonormal basis of the normal space at one manifold point."""

    base_point: np.ndarray
    columns: np.ndarray  # (D, D-d)


def _as_batch(u, d: int) -> tuple[np.ndarray, bool]:
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise DomainError(f"expected point in R^{d}, got shape {arr.shape}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != d:
        raise DomainError(f"expected (n, {d}) batch, got shape {arr.shape}")
    return arr, False


def _check_domain(chart: ChartSpec, U: np.ndarray, strict: bool = False):
    for i, (lo, hi) in enumerate(chart.latent_domain):
        col = U[:, i]
        open_ended = strict and not chart.periodic[i]  # periodic axes wrap, no open-interior rule
        bad = (col <= lo) | (col >= hi) if open_ended else (col < lo) | (col > hi)
        if np.any(bad):
            raise DomainError(
                f"latent coordinate {i} outside {'open ' if open_ended else ''}domain "
                f"[{lo}, {hi}]: offending value {col[np.argmax(bad)]}"
            )


def embed(manifold: ManifoldSpec, chart_index: int, u) -> np.ndarray:
    """Map latent point(s) onto the manifold through the selected chart."""
    chart = manifold.chart(chart_index)
    U, single = _as_batch(u, manifold.d)
    _check_domain(chart, U)
    X = chart.chart_map(U)
    return X[0] if single else X


def finite_difference_jacobian(fn, U: np.ndarray, step_scale: float = FD_STEP_SCALE) -> np.ndarray:
    """Central-difference Jacobian of a vectorized map, shape (n, D, d)."""
    n, d = U.shape
    cols = []
    for i in range(d):
        h = step_scale * np.maximum(1.0, np.abs(U[:, i]))
        Up = U.copy()
        Um = U.copy()
        Up[:, i] += h
        Um[:, i] -= h
        cols.append((fn(Up) - fn(Um)) / (2.0 * h)[:, None])
    return np.stack(cols, axis=-1)


def jacobian(manifold: ManifoldSpec, chart_index: int, u) -> np.ndarray:
    """D x d Jacobian of the chart map (analytic when available)."""
    chart = manifold.chart(chart_index)
    U, single = _as_batch(u, manifold.d)
    _check_domain(chart, U, strict=True)
    if chart.analytic_jacobian is not None:
        J = chart.analytic_jacobian(U)
    else:
        J = finite_difference_jacobian(chart.chart_map, U)
    return J[0] if single else J


def gram_det(manifold: ManifoldSpec, chart_index: int, u):
    """det(J^T J) of the chart at ``u``; raises on degeneracy."""
    J = jacobian(manifold, chart_index, u)
    single = J.ndim == 2
    Jb = J[None] if single else J
    G = np.einsum("nij,nik->njk", Jb, Jb)
    dets = np.linalg.det(G)
    if np.any(dets <= GRAM_DET_FLOOR):
        bad = float(dets[np.argmin(dets)])
        raise SingularityError(f"{manifold.name}: Gram determinant {bad:.3e} at a degenerate point")
    return float(dets[0]) if single else dets


def sqrt_gram(manifold: ManifoldSpec, chart_index: int, u):
    """sqrt(det G); uses the chart's analytic formula when present."""
    chart = manifold.chart(chart_index)
    if chart.analytic_sqrt_gram is not None:
        U, single = _as_batch(u, manifold.d)
        vals = chart.analytic_sqrt_gram(U)
        return float(vals[0]) if single else vals
    g = gram_det(manifold, chart_index, u)
    return math.sqrt(g) if np.isscalar(g) else np.sqrt(g)


def _frames_batch(manifold: ManifoldSpec, chart_index: int, U: np.ndarray) -> np.ndarray:
    """Orthonormal normal frames (n, D, D-d) for a batch of latent points.

    Completes the Jacobian's column space with the standard basis vectors
    least aligned with it, then Gram-Schmidt.  The first column is sign-fixed
    to point away from the ambient origin when that direction is unambiguous.
    Frames are pointwise; no continuity across points is implied.
    """
    D, d = manifold.D, manifold.d
    J = jacobian(manifold, chart_index, U)
    X = embed(manifold, chart_index, U)
    G = np.einsum("nij,nik->njk", J, J)
    dets = np.linalg.det(G)
    if np.any(dets <= GRAM_DET_FLOOR):
        raise SingularityError(f"{manifold.name}: rank-deficient Jacobian in frame construction")
    T, _ = np.linalg.qr(J)  # (n, D, d) orthonormal tangent basis
    align = np.linalg.norm(T, axis=2)  # row norms = |T^T e_k|
    order = np.argsort(align, axis=1, kind="stable")
    chosen = np.sort(order[:, : D - d], axis=1)

    n = U.shape[0]
    A = np.zeros((n, D, D - d))
    for j in range(D - d):
        e = np.zeros((n, D))
        e[np.arange(n), chosen[:, j]] = 1.0
        e -= np.einsum("nik,nk->ni", T, np.einsum("nik,ni->nk", T, e))
        for k in range(j):
            e -= A[:, :, k] * np.sum(A[:, :, k] * e, axis=1)[:, None]
        norms = np.linalg.norm(e, axis=1)
        if np.any(norms < 1e-8):
            raise SingularityError(f"{manifold.name}: basis completion degenerated")
        A[:, :, j] = e / norms[:, None]

    dots = np.sum(A[:, :, 0] * X, axis=1)
    xnorm = np.linalg.norm(X, axis=1)
    flip = np.where(np.abs(dots) > 1e-8 * np.maximum(xnorm, 1.0), np.sign(dots), 1.0)
    A[:, :, 0] *= flip[:, None]
    return A


def normal_frame(manifold: ManifoldSpec, chart_index: int, u) -> NormalFrame:
    """Orthonormal basis of the normal space at f(u)."""
    U, single = _as_batch(u, manifold.d)
    A = _frames_batch(manifold, chart_index, U)
    X = embed(manifold, chart_index, U)
    if single:
        return NormalFrame(base_point=X[0], columns=A[0])
    return [NormalFrame(base_point=x, columns=a) for x, a in zip(X, A)]


def normal_frames(manifold: ManifoldSpec, chart_index: int, U: np.ndarray) -> np.ndarray:
    """Batch variant of :func:`normal_frame` returning the (n, D, D-d) array."""
    U, _ = _as_batch(U, manifold.d)
    return _frames_batch(manifold, chart_index, U)


def sample_box(chart: ChartSpec) -> tuple[tuple[float, float], ...]:
    """Grid box shrunk by the chart's interior margin (for random sampling)."""
    box = []
    for (lo, hi), per in zip(chart.grid_domain, chart.periodic):
        m = chart.sample_margin * max(1.0, abs(hi - lo)) if not per else 0.0
        lo2 = lo if per else lo + max(chart.sample_margin, m)
        hi2 = hi if per else hi - max(chart.sample_margin, m)
        box.append((lo2, hi2))
    return tuple(box)


def sample_interior(manifold: ManifoldSpec, chart_index: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random latent points strictly inside the chart's grid box."""
    box = sample_box(manifold.chart(chart_index))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((n, manifold.d))


def _latent_grid(chart: ChartSpec, resolution: int) -> np.ndarray:
    axes = []
    for (lo, hi), per in zip(chart.grid_domain, chart.periodic):
        if per:
            axes.append(np.linspace(lo, hi, resolution, endpoint=False))
        else:
            margin = chart.sample_margin * max(1.0, hi - lo)
            axes.append(np.linspace(lo + margin, hi - margin, resolution))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _wrap_periodic(chart: ChartSpec, U: np.ndarray) -> np.ndarray:
    U = U.copy()
    for i, ((lo, hi), per) in enumerate(zip(chart.grid_domain, chart.periodic)):
        if per:
            U[:, i] = lo + np.mod(U[:, i] - lo, hi - lo)
    return U


def _clip_to_box(chart: ChartSpec, U: np.ndarray) -> np.ndarray:
    U = _wrap_periodic(chart, U)
    for i, ((lo, hi), per) in enumerate(zip(chart.grid_domain, chart.periodic)):
        if not per:
            margin = chart.sample_margin * max(1.0, hi - lo)
            U[:, i] = np.clip(U[:, i], lo + margin, hi - margin)
    return U


def _merge_candidates(chart: ChartSpec, U: np.ndarray, key: np.ndarray):
    """Dedup rows of U within MERGE_TOL (periodic-aware); keeps best ``key``."""
    order = np.argsort(key, kind="stable")
    kept: list[int] = []
    for idx in order:
        dup = False
        for j in kept:
            delta = U[idx] - U[j]
            for i, ((lo, hi), per) in enumerate(zip(chart.grid_domain, chart.periodic)):
                if per:
                    span = hi - lo
                    delta[i] = (delta[i] + span / 2) % span - span / 2
            if np.linalg.norm(delta) < MERGE_TOL:
                dup = True
                break
        if not dup:
            kept.append(int(idx))
    return kept


def _descend(manifold: ManifoldSpec, chart_index: int, x_tilde: np.ndarray,
             U0: np.ndarray, steps: int = 50) -> np.ndarray:
    """Projected gradient descent on ||f(u) - x~||^2 with backtracking."""
    chart = manifold.chart(chart_index)
    f = chart.chart_map

    def value(U):
        return np.sum((f(U) - x_tilde) ** 2, axis=1)

    U = U0.copy()
    val = value(U)
    eta = np.ones(U.shape[0])
    for _ in range(steps):
        if chart.analytic_jacobian is not None:
            J = chart.analytic_jacobian(U)
        else:
            J = finite_difference_jacobian(f, U)
        grad = 2.0 * np.einsum("nij,ni->nj", J, f(U) - x_tilde)
        for _bt in range(40):
            cand = _clip_to_box(chart, U - eta[:, None] * grad)
            cval = value(cand)
            worse = cval > val
            if not np.any(worse):
                break
            eta = np.where(worse, eta * 0.5, eta)
        better = cval <= val
        U = np.where(better[:, None], cand, U)
        val = np.where(better, cval, val)
        eta = np.where(better, eta * 1.2, eta)
    # Gauss-Newton polish: quadratic convergence once near a stationary point
    for _ in range(8):
        if chart.analytic_jacobian is not None:
            J = chart.analytic_jacobian(U)
        else:
            J = finite_difference_jacobian(f, U)
        r = x_tilde - f(U)
        G = np.einsum("nij,nik->njk", J, J) + 1e-14 * np.eye(U.shape[1])
        step = np.linalg.solve(G, np.einsum("nij,ni->nj", J, r)[..., None])[..., 0]
        cand = _clip_to_box(chart, U + step)
        cval = value(cand)
        improved = cval <= val
        U = np.where(improved[:, None], cand, U)
        val = np.where(improved, cval, val)
    return U


def nearest_point(manifold: ManifoldSpec, x_tilde, grid_resolution: int = 64):
    """All near-minimal-distance latent generators of an ambient point.

    Dense grid per chart, refined by projected gradient descent; returns
    every candidate within TIE_TOL of the minimum distance, merged within
    MERGE_TOL in latent space, as (chart_index, u, distance) triples.
    """
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be at least 16")
    x_tilde = np.asarray(x_tilde, dtype=float)
    results = []
    for ci, chart in enumerate(manifold.charts):
        U0 = _latent_grid(chart, grid_resolution)
        U = _descend(manifold, ci, x_tilde, U0)
        dist = np.linalg.norm(chart.chart_map(U) - x_tilde, axis=1)
        results.append((ci, U, dist))
    dmin = min(float(d.min()) for _, _, d in results)
    out = []
    for ci, U, dist in results:
        mask = dist <= dmin + TIE_TOL
        if not np.any(mask):
            continue
        Um, dm = U[mask], dist[mask]
        for idx in _merge_candidates(manifold.chart(ci), Um, dm):
            out.append((ci, Um[idx].copy(), float(dm[idx])))
    out.sort(key=lambda t: t[2])
    return out


def _stationary_1d(manifold: ManifoldSpec, chart_index: int, x_tilde: np.ndarray,
                   resolution: int) -> np.ndarray:
    """Roots of d/du ||f(u) - x~||^2 via sign-change bracketing + bisection."""
    chart = manifold.chart(chart_index)
    f = chart.chart_map

    def slope(U):
        if chart.analytic_jacobian is not None:
            J = chart.analytic_jacobian(U)
        else:
            J = finite_difference_jacobian(f, U)
        return np.einsum("nij,ni->nj", J, f(U) - x_tilde)[:, 0]

    grid = _latent_grid(chart, resolution)[:, 0]
    g = slope(grid[:, None])
    lo_idx = np.where(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    roots = list(grid[np.where(g == 0.0)[0]])
    if chart.periodic[0]:
        span = chart.grid_domain[0][1] - chart.grid_domain[0][0]
        if np.sign(g[-1]) * np.sign(g[0]) < 0:
            # wrap-around bracket between the last and first grid points
            a, b = grid[-1], grid[0] + span
            ga_sign = np.sign(g[-1])
            for _ in range(80):
                m = 0.5 * (a + b)
                gm = slope(np.array([[m]]))[0]
                if np.sign(gm) == ga_sign:
                    a = m
                else:
                    b = m
            roots.append(0.5 * (a + b))
    a = grid[lo_idx]
    b = grid[lo_idx + 1]
    ga = g[lo_idx]
    for _ in range(80):
        m = 0.5 * (a + b)
        gm = slope(m[:, None])
        left = np.sign(gm) == np.sign(ga)
        a = np.where(left, m, a)
        ga = np.where(left, gm, ga)
        b = np.where(left, b, m)
    roots.extend(list(0.5 * (a + b)))
    if not roots:
        return np.empty((0, 1))
    return _wrap_periodic(chart, np.array(roots)[:, None])


def _stationary_2d(manifold: ManifoldSpec, chart_index: int, x_tilde: np.ndarray,
                   resolution: int) -> np.ndarray:
    """Damped-Newton refinement of grad ||f(u)-x~||^2 = 0 from grid starts."""
    chart = manifold.chart(chart_index)
    f = chart.chart_map

    def grad(U):
        if chart.analytic_jacobian is not None:
            J = chart.analytic_jacobian(U)
        else:
            J = finite_difference_jacobian(f, U)
        return np.einsum("nij,ni->nj", J, f(U) - x_tilde)

    U = _latent_grid(chart, resolution)
    for _ in range(40):
        g = grad(U)
        H = finite_difference_jacobian(grad, U, step_scale=1e-6)  # (n, d, d)
        H = H + 1e-10 * np.eye(manifold.d)
        try:
            delta = np.linalg.solve(H, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = g
        Un = _clip_to_box(chart, U - delta)
        gn = grad(Un)
        improved = np.linalg.norm(gn, axis=1) <= np.linalg.norm(g, axis=1)
        U = np.where(improved[:, None], Un, _clip_to_box(chart, U - 0.1 * g))
    g = grad(U)
    scale = np.maximum(1.0, np.linalg.norm(x_tilde))
    mask = np.linalg.norm(g, axis=1) < 1e-7 * scale
    return U[mask]


def generator_candidates(manifold: ManifoldSpec, x_tilde, grid_resolution: int = 256):
    """All stationary points of the squared distance to ``x_tilde``.

    Unlike :func:`nearest_point` this keeps non-minimal critical points too;
    a point x~ can be generated from any latent u whose normal space contains
    it, which is exactly stationarity of ||f(u) - x~||^2.
    Returns (chart_index, u, distance) triples merged within MERGE_TOL.
    """
    x_tilde = np.asarray(x_tilde, dtype=float)
    out = []
    for ci, chart in enumerate(manifold.charts):
        if manifold.d == 1:
            U = _stationary_1d(manifold, ci, x_tilde, grid_resolution)
        else:
            U = _stationary_2d(manifold, ci, x_tilde, max(grid_resolution // 8, 16))
        if U.shape[0] == 0:
            continue
        dist = np.linalg.norm(chart.chart_map(U) - x_tilde, axis=1)
        for idx in _merge_candidates(chart, U, dist):
            out.append((ci, U[idx].copy(), float(dist[idx])))
    out.sort(key=lambda t: t[2])
    return out


# ---------------------------------------------------------------------------
# chart definitions


def _circle_chart(radius: float, D: int) -> ChartSpec:
    def cmap(U):
        u = U[:, 0]
        X = np.zeros((U.shape[0], D))
        X[:, 0] = radius * np.cos(u)
        X[:, 1] = radius * np.sin(u)
        return X

    def jac(U):
        u = U[:, 0]
        J = np.zeros((U.shape[0], D, 1))
        J[:, 0, 0] = -radius * np.sin(u)
        J[:, 1, 0] = radius * np.cos(u)
        return J

    return ChartSpec(
        latent_domain=((-math.pi, math.pi),),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=lambda U: np.full(U.shape[0], radius),
        periodic=(True,),
    )


def _sphere_chart() -> ChartSpec:
    def cmap(U):
        z1, z2 = U[:, 0], U[:, 1]
        return np.stack([np.cos(z1) * np.sin(z2), np.sin(z1) * np.sin(z2), np.cos(z2)], axis=1)

    def jac(U):
        z1, z2 = U[:, 0], U[:, 1]
        J = np.empty((U.shape[0], 3, 2))
        J[:, 0, 0] = -np.sin(z1) * np.sin(z2)
        J[:, 1, 0] = np.cos(z1) * np.sin(z2)
        J[:, 2, 0] = 0.0
        J[:, 0, 1] = np.cos(z1) * np.cos(z2)
        J[:, 1, 1] = np.sin(z1) * np.cos(z2)
        J[:, 2, 1] = -np.sin(z2)
        return J

    return ChartSpec(
        latent_domain=((0.0, 2 * math.pi), (0.0, math.pi)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=lambda U: np.abs(np.sin(U[:, 1])),
        periodic=(True, False),
    )


def _torus_chart(R: float = 1.0, r: float = 0.6) -> ChartSpec:
    def cmap(U):
        z1, z2 = U[:, 0], U[:, 1]
        ring = R + r * np.cos(z2)
        return np.stack([ring * np.cos(z1), ring * np.sin(z1), r * np.sin(z2)], axis=1)

    def jac(U):
        z1, z2 = U[:, 0], U[:, 1]
        ring = R + r * np.cos(z2)
        J = np.empty((U.shape[0], 3, 2))
        J[:, 0, 0] = -ring * np.sin(z1)
        J[:, 1, 0] = ring * np.cos(z1)
        J[:, 2, 0] = 0.0
        J[:, 0, 1] = -r * np.sin(z2) * np.cos(z1)
        J[:, 1, 1] = -r * np.sin(z2) * np.sin(z1)
        J[:, 2, 1] = r * np.cos(z2)
        return J

    return ChartSpec(
        latent_domain=((0.0, 2 * math.pi), (0.0, 2 * math.pi)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=lambda U: r * (R + r * np.cos(U[:, 1])),
        periodic=(True, True),
    )


def _hyperboloid_chart(z1_grid_max: float = 8.0) -> ChartSpec:
    def cmap(U):
        z1, z2 = U[:, 0], U[:, 1]
        return np.stack([np.sinh(z1) * np.cos(z2), np.sinh(z1) * np.sin(z2), np.cosh(z1)], axis=1)

    def jac(U):
        z1, z2 = U[:, 0], U[:, 1]
        J = np.empty((U.shape[0], 3, 2))
        J[:, 0, 0] = np.cosh(z1) * np.cos(z2)
        J[:, 1, 0] = np.cosh(z1) * np.sin(z2)
        J[:, 2, 0] = np.sinh(z1)
        J[:, 0, 1] = -np.sinh(z1) * np.sin(z2)
        J[:, 1, 1] = np.sinh(z1) * np.cos(z2)
        J[:, 2, 1] = 0.0
        return J

    def sqrt_gram_fn(U):
        z1 = U[:, 0]
        return np.abs(np.sinh(z1)) * np.sqrt(np.sinh(z1) ** 2 + np.cosh(z1) ** 2)

    return ChartSpec(
        latent_domain=((0.0, math.inf), (0.0, 2 * math.pi)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=sqrt_gram_fn,
        grid_domain=((0.0, z1_grid_max), (0.0, 2 * math.pi)),
        periodic=(False, True),
    )


def _thin_spiral_chart(z_grid_max: float = 2.5) -> ChartSpec:
    def cmap(U):
        c = 3 * math.pi * np.sqrt(U[:, 0])
        return np.stack([-c * np.cos(c), c * np.sin(c)], axis=1)

    def jac(U):
        z = U[:, 0]
        c = 3 * math.pi * np.sqrt(z)
        dc = 3 * math.pi / (2.0 * np.sqrt(z))
        J = np.empty((U.shape[0], 2, 1))
        J[:, 0, 0] = dc * (-np.cos(c) + c * np.sin(c))
        J[:, 1, 0] = dc * (np.sin(c) + c * np.cos(c))
        return J

    def sqrt_gram_fn(U):
        z = U[:, 0]
        c = 3 * math.pi * np.sqrt(z)
        return (3 * math.pi / (2.0 * np.sqrt(z))) * np.sqrt(1.0 + c * c)

    return ChartSpec(
        latent_domain=((0.0, math.inf),),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=sqrt_gram_fn,
        grid_domain=((0.0, z_grid_max),),
        sample_margin=1e-2,
    )


def _swiss_roll_chart(alpha: float) -> ChartSpec:
    def cmap(U):
        z1, z2 = U[:, 0], U[:, 1]
        t = alpha + 3 * math.pi * z2
        return np.stack([t * np.cos(t), 21.0 * z1, t * np.sin(t)], axis=1)

    def jac(U):
        z2 = U[:, 1]
        t = alpha + 3 * math.pi * z2
        J = np.zeros((U.shape[0], 3, 2))
        J[:, 1, 0] = 21.0
        J[:, 0, 1] = 3 * math.pi * (np.cos(t) - t * np.sin(t))
        J[:, 2, 1] = 3 * math.pi * (np.sin(t) + t * np.cos(t))
        return J

    def sqrt_gram_fn(U):
        t = alpha + 3 * math.pi * U[:, 1]
        return 63 * math.pi * np.sqrt(1.0 + t * t)

    return ChartSpec(
        latent_domain=((0.0, 1.0), (0.0, 1.0)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=sqrt_gram_fn,
    )


def _hs2_hyperboloid_chart(z1_grid_min: float = -3.0) -> ChartSpec:
    # lower half: z1 <= 0, |z1| enters the hyperbolic functions
    def cmap(U):
        a, z2 = np.abs(U[:, 0]), U[:, 1]
        return np.stack([-np.cosh(a) * np.cos(z2), -np.cosh(a) * np.sin(z2), np.sinh(a)], axis=1)

    def jac(U):
        a, z2 = np.abs(U[:, 0]), U[:, 1]
        s = np.where(U[:, 0] < 0, -1.0, 1.0)  # d|z1|/dz1 for z1 < 0
        J = np.empty((U.shape[0], 3, 2))
        J[:, 0, 0] = -np.sinh(a) * np.cos(z2) * s
        J[:, 1, 0] = -np.sinh(a) * np.sin(z2) * s
        J[:, 2, 0] = np.cosh(a) * s
        J[:, 0, 1] = np.cosh(a) * np.sin(z2)
        J[:, 1, 1] = -np.cosh(a) * np.cos(z2)
        J[:, 2, 1] = 0.0
        return J

    def sqrt_gram_fn(U):
        a = np.abs(U[:, 0])
        return np.cosh(a) * np.sqrt(np.sinh(a) ** 2 + np.cosh(a) ** 2)

    return ChartSpec(
        latent_domain=((-math.inf, 0.0), (0.0, 2 * math.pi)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=sqrt_gram_fn,
        grid_domain=((z1_grid_min, 0.0), (0.0, 2 * math.pi)),
        periodic=(False, True),
    )


def _hs2_sphere_chart() -> ChartSpec:
    def cmap(U):
        z1, z2 = U[:, 0], U[:, 1]
        return np.stack(
            [np.cos(z2) * np.cos(z1 + math.pi), np.sin(z2) * np.cos(z1 + math.pi), np.sin(z1 + math.pi)],
            axis=1,
        )

    def jac(U):
        z1, z2 = U[:, 0], U[:, 1]
        J = np.empty((U.shape[0], 3, 2))
        J[:, 0, 0] = -np.cos(z2) * np.sin(z1 + math.pi)
        J[:, 1, 0] = -np.sin(z2) * np.sin(z1 + math.pi)
        J[:, 2, 0] = np.cos(z1 + math.pi)
        J[:, 0, 1] = -np.sin(z2) * np.cos(z1 + math.pi)
        J[:, 1, 1] = np.cos(z2) * np.cos(z1 + math.pi)
        J[:, 2, 1] = 0.0
        return J

    return ChartSpec(
        latent_domain=((0.0, math.pi / 2), (0.0, 2 * math.pi)),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=lambda U: np.abs(np.cos(U[:, 0] + math.pi)),
        periodic=(False, True),
    )


def _so2_chart() -> ChartSpec:
    def cmap(U):
        u = U[:, 0]
        return np.stack([np.cos(u), np.sin(u), -np.sin(u), np.cos(u)], axis=1)

    def jac(U):
        u = U[:, 0]
        J = np.empty((U.shape[0], 4, 1))
        J[:, 0, 0] = -np.sin(u)
        J[:, 1, 0] = np.cos(u)
        J[:, 2, 0] = -np.cos(u)
        J[:, 3, 0] = -np.sin(u)
        return J

    return ChartSpec(
        latent_domain=((-math.pi, math.pi),),
        chart_map=cmap,
        analytic_jacobian=jac,
        analytic_sqrt_gram=lambda U: np.full(U.shape[0], math.sqrt(2.0)),
        periodic=(True,),
    )


def make_circle(radius: float = 3.0, D: int = 2) -> ManifoldSpec:
    if D < 2:
        raise ValueError("circle needs D >= 2")
    return ManifoldSpec(
        name=f"s1:D={D}" if D != 2 else "s1",
        d=1,
        D=D,
        charts=(_circle_chart(radius, D),),
        max_curvature=lambda U: np.full(U.shape[0], 1.0 / radius),
    )


def make_sphere() -> ManifoldSpec:
    return ManifoldSpec(
        name="s2", d=2, D=3, charts=(_sphere_chart(),),
        max_curvature=lambda U: np.ones(U.shape[0]),
    )


def make_torus() -> ManifoldSpec:
    return ManifoldSpec(name="t2", d=2, D=3, charts=(_torus_chart(),))


def make_hyperboloid() -> ManifoldSpec:
    return ManifoldSpec(name="h2", d=2, D=3, charts=(_hyperboloid_chart(),))


def make_thin_spiral() -> ManifoldSpec:
    return ManifoldSpec(name="thin_spiral", d=1, D=2, charts=(_thin_spiral_chart(),))


def make_swiss_roll(alpha: float = 1.5 * math.pi) -> ManifoldSpec:
    return ManifoldSpec(name="swiss_roll", d=2, D=3, charts=(_swiss_roll_chart(alpha),))


def make_hs2() -> ManifoldSpec:
    def selector(u):
        return 0 if float(np.atleast_1d(u)[0]) <= 0.0 else 1

    return ManifoldSpec(
        name="hs2", d=2, D=3,
        charts=(_hs2_hyperboloid_chart(), _hs2_sphere_chart()),
        chart_selector=selector,
    )


def make_so2() -> ManifoldSpec:
    return ManifoldSpec(
        name="so2", d=1, D=4, charts=(_so2_chart(),),
        max_curvature=lambda U: np.full(U.shape[0], 1.0 / math.sqrt(2.0)),
    )


_REGISTRY = {
    "s1": make_circle,
    "s2": make_sphere,
    "t2": make_torus,
    "h2": make_hyperboloid,
    "thin_spiral": make_thin_spiral,
    "swiss_roll": make_swiss_roll,
    "hs2": make_hs2,
    "so2": make_so2,
}


def get_manifold(name: str, **params) -> ManifoldSpec:
    """Look up a manifold by registry name, e.g. ``"s1"`` or ``"s1:D=10"``."""
    base = name
    if name.startswith("s1:D="):
        try:
            D = int(name.split("=", 1)[1])
        except ValueError as exc:
            raise UnknownManifoldError(f"bad circle lift spec {name!r}") from exc
        return make_circle(D=D, **params)
    if base not in _REGISTRY:
        raise UnknownManifoldError(f"unknown manifold {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[base](**params)


def registry_names():
    return sorted(_REGISTRY)
