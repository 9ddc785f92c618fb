"""Acceptance suite: every exit criterion, one pass/fail line each.

The quick criteria (geometry, identities, closed forms) run in seconds;
the end-to-end criteria train real flows on one CPU core and dominate the
runtime.  Seeds are pinned everywhere, so the asserted thresholds are
deterministic; they were chosen with margin against the pinned runs, not
tuned to them.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ZOO, interior_points, report
from infdef import autodiff as ad
from infdef.densities import make_density
from infdef.evaluation import (
    GriddedDensity,
    deflate,
    fom_baseline,
    grid_true_density,
    induced_latent,
    ks_statistic,
    latent_grid_axes,
    sigma2_gauss_pointwise,
    sigma2_prop_pointwise,
    sigma_upper_bound,
)
from infdef.flow import FlowHyper, FlowModel
from infdef.manifolds import (
    embed,
    finite_difference_jacobian,
    get_manifold,
    gram_det,
    jacobian,
    normal_frame,
    normal_frames,
)
from infdef.noise import (
    IsotropicGaussian,
    NormalGaussian,
    NormalUniformInterval,
    error_ratio_samples,
    gaussian_vs_normal_error,
    inflate_batch,
    reachability_check,
)
from infdef.runner import run_sweep_cell
from infdef.training import TrainConfig, train

VM8 = make_density("vonmises", {"kappa": 8.0})


# --------------------------------------------------------------------------
# 1. geometry oracle suite


@pytest.mark.parametrize("name", ZOO)
def test_accept_geometry_oracle(zoo, name):
    manifold = zoo[name]
    worst_gram, worst_jac = 0.0, 0.0
    for ci, chart in enumerate(manifold.charts):
        U = interior_points(manifold, ci, 1000, seed=101 + ci)
        numeric = np.sqrt(gram_det(manifold, ci, U))
        table = chart.analytic_sqrt_gram(U)
        worst_gram = max(worst_gram, float(np.max(np.abs(numeric - table) / np.abs(table))))
        J = jacobian(manifold, ci, U)
        J_fd = finite_difference_jacobian(chart.chart_map, U)
        scale = np.maximum(np.abs(J), np.max(np.abs(J), axis=(1, 2), keepdims=True) * 1e-3)
        worst_jac = max(worst_jac, float(np.max(np.abs(J - J_fd) / scale)))
    assert worst_gram < 1e-8
    assert worst_jac < 1e-5
    report(f"[PASS] geometry oracle {name}: sqrt-gram vs table {worst_gram:.2e} (<1e-8), "
           f"jacobian FD {worst_jac:.2e} (<1e-5)")


# --------------------------------------------------------------------------
# 2. inflated-map determinant lemma


@pytest.mark.parametrize("name", ZOO)
def test_accept_inflated_determinant_lemma(zoo, name):
    manifold = zoo[name]
    worst = 0.0
    for ci in range(len(manifold.charts)):
        n_pts = 100 // len(manifold.charts)
        U = interior_points(manifold, ci, n_pts, seed=211 + ci)
        A_all = normal_frames(manifold, ci, U)
        for u, A in zip(U, A_all):
            def tilde(W):
                out = np.empty((W.shape[0], manifold.D))
                for i, w in enumerate(W):
                    out[i] = embed(manifold, ci, w[: manifold.d]) + A @ w[manifold.d:]
                return out

            w0 = np.concatenate([u, np.zeros(manifold.D - manifold.d)])
            Jt = finite_difference_jacobian(tilde, w0[None, :])[0]
            det_tilde = float(np.linalg.det(Jt.T @ Jt))
            det_f = gram_det(manifold, ci, u)
            worst = max(worst, abs(det_tilde - det_f) / det_f)
    assert worst < 1e-4
    report(f"[PASS] determinant lemma {name}: max rel err {worst:.2e} (<1e-4) at 100 points")


# --------------------------------------------------------------------------
# 3. tangential/normal error law


@pytest.mark.parametrize("D", [5, 10, 20])
def test_accept_error_law(D):
    manifold = get_manifold(f"s1:D={D}")
    samples = error_ratio_samples(manifold, 0, [0.37], sigma2=1.0, n_samples=10**6,
                                  rng_seed=300 + D)
    mean = samples.mean()
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    target = gaussian_vs_normal_error(1, D)
    assert abs(mean - target) < 3 * se
    report(f"[PASS] error law D={D}: MC {mean:.6f} vs d/(D-d-2)={target:.6f} "
           f"({abs(mean-target)/se:.2f} SE, <3)")


# --------------------------------------------------------------------------
# 4. flow-free deflation exactness


@pytest.mark.parametrize("name,density_name", [
    ("s1", "vonmises"), ("t2", "t2_mixture3"), ("s2", "s2_mixture4"),
])
def test_accept_oracle_deflation(zoo, name, density_name):
    from infdef.evaluation import AnalyticInflatedDensity
    from infdef.manifolds import sqrt_gram
    from infdef.noise import deflation_constant

    manifold = zoo[name]
    density = make_density(density_name, {"kappa": 8.0} if name == "s1" else None)
    noise = NormalGaussian(d=manifold.d, D=manifold.D, sigma2=0.05)
    oracle = AnalyticInflatedDensity(manifold, 0, density, noise)
    axes = latent_grid_axes(density.domain, resolution_1d=1000, resolution_2d=100,
                            inset=1e-4)
    pi_true = grid_true_density(density, axes)
    pts = pi_true.points()
    p_star = np.exp(oracle.log_density_at_latent(pts) - math.log(deflation_constant(noise)))
    vals = p_star * np.atleast_1d(sqrt_gram(manifold, 0, pts))
    pi_hat = GriddedDensity(axes=axes, values=vals.reshape(pi_true.values.shape))
    ks = ks_statistic(pi_true, pi_hat).ks
    assert ks < 1e-6
    report(f"[PASS] oracle deflation {name}: KS {ks:.2e} (<1e-6)")


# --------------------------------------------------------------------------
# 5. noise-magnitude bounds


def test_accept_sigma_bound_pointwise():
    circle = get_manifold("s1")
    r, kappa = 3.0, 8.0
    worst = 0.0
    for u in np.linspace(-1.5, 1.5, 31):
        got = min(sigma2_prop_pointwise(circle, 0, VM8, np.array([u])),
                  sigma2_gauss_pointwise(circle, 0, np.array([u])))
        expected = min(abs(2 * r**2 / (kappa * (kappa * math.sin(u) ** 2 - math.cos(u)))), r**2)
        worst = max(worst, abs(got - expected))
    assert worst < 1e-10
    report(f"[PASS] pointwise sigma^2 bound on the circle: max abs err {worst:.2e} (<1e-10)")


def test_accept_sigma_bound_average():
    circle = get_manifold("s1")
    r, kappa = 3.0, 8.0

    def integrand_num(u):
        term = abs(2 * r**2 / (kappa * (kappa * math.sin(u) ** 2 - math.cos(u))))
        return min(term, r**2) * math.exp(kappa * math.cos(u))

    # breakpoints: divisor sign change and the min() switchover
    pts = []
    c_zero = (-1 + math.sqrt(1 + 4 * 8 * (8 + 1))) / 16  # 8c^2 + c - 8 = 0
    pts += [math.acos(c_zero), -math.acos(c_zero)]
    for rhs in (0.25, -0.25):
        disc = 1 + 4 * 8 * (8 + rhs)
        c = (-1 + math.sqrt(disc)) / 16
        if -1 <= c <= 1:
            pts += [math.acos(c), -math.acos(c)]
    pts = sorted(p for p in pts if -math.pi / 2 < p < math.pi / 2)
    num, _ = quad(integrand_num, -math.pi / 2, math.pi / 2, points=pts, limit=300)
    den, _ = quad(lambda u: math.exp(kappa * math.cos(u)), -math.pi / 2, math.pi / 2, limit=300)
    oracle = num / den

    sampled = sigma_upper_bound(circle, 0, VM8, n_samples=10**4, rng_seed=0)
    rel = abs(sampled - oracle) / oracle
    assert rel < 1e-3
    report(f"[PASS] averaged sigma^2 bound: sampled {sampled:.6f} vs quadrature {oracle:.6f} "
           f"(rel {rel:.2e} < 1e-3)")


# --------------------------------------------------------------------------
# 6. flow correctness


def test_accept_flow_gradients():
    rng = np.random.default_rng(0)
    worst = 0.0
    # primitive ops
    from infdef.autodiff import Tensor, numerical_gradient

    cases = [
        (lambda t: ad.tmean(ad.tanh(t[0])), [Tensor(rng.standard_normal((4, 3)), requires_grad=True)]),
        (lambda t: ad.tmean(ad.log_sech2(t[0])), [Tensor(2 * rng.standard_normal((4, 3)), requires_grad=True)]),
        (lambda t: ad.tmean(ad.exp(t[0])), [Tensor(rng.standard_normal((3, 3)), requires_grad=True)]),
        (lambda t: ad.tmean(ad.logsumexp(t[0])), [Tensor(3 * rng.standard_normal((3, 4, 5)), requires_grad=True)]),
        (lambda t: ad.tmean(ad.log_matmul_exp(t[0], t[1])),
         [Tensor(rng.standard_normal((4, 3, 5)), requires_grad=True),
          Tensor(rng.standard_normal((3, 5, 2)), requires_grad=True)]),
        (lambda t: ad.tmean(ad.matmul(t[0], t[1])),
         [Tensor(rng.standard_normal((3, 4)), requires_grad=True),
          Tensor(rng.standard_normal((4, 2)), requires_grad=True)]),
    ]
    for fn, tensors in cases:
        out = fn(tensors)
        out.backward()
        nums = numerical_gradient(lambda: fn(tensors).item(), tensors)
        for t, num in zip(tensors, nums):
            scale = max(np.max(np.abs(num)), 1e-6)
            worst = max(worst, float(np.max(np.abs(t.grad - num)) / scale))
    # full nll on a small flow
    flow = FlowModel(FlowHyper(D=2, hidden_dim=8, n_hidden_layers=2), seed=3)
    batch = rng.standard_normal((6, 2))
    _, grads = flow.nll_loss(batch)
    flat = np.concatenate([g.ravel() for g in grads])
    v0 = flow.param_vector()
    num = np.zeros_like(v0)
    for i in range(v0.size):
        v = v0.copy()
        v[i] += 1e-5
        flow.set_param_vector(v)
        up = -np.mean(flow.log_density(batch))
        v[i] -= 2e-5
        flow.set_param_vector(v)
        down = -np.mean(flow.log_density(batch))
        num[i] = (up - down) / 2e-5
    flow.set_param_vector(v0)
    worst = max(worst, float(np.max(np.abs(flat - num) / np.maximum(np.abs(num), 1e-6))))
    assert worst < 1e-4
    report(f"[PASS] flow gradients: worst rel err {worst:.2e} (<1e-4)")


def test_accept_flow_logdet_and_normalization():
    worst_logdet = 0.0
    for D in (2, 3, 4):
        flow = FlowModel(FlowHyper(D=D, hidden_dim=4 * D, n_hidden_layers=2), seed=D)
        rng = np.random.default_rng(D)
        for _ in range(5):
            x = rng.standard_normal(D) * 2
            J = np.empty((D, D))
            for j in range(D):
                e = np.zeros(D)
                e[j] = 1e-6
                J[:, j] = (flow.transform(x + e) - flow.transform(x - e)) / 2e-6
            brute = math.log(abs(np.linalg.det(J)))
            worst_logdet = max(worst_logdet, abs(brute - flow.log_det_jacobian(x)))
    assert worst_logdet < 1e-3

    grid = np.linspace(-8, 8, 401)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    worst_mass = 0.0
    for seed in range(3):
        flow = FlowModel(FlowHyper(D=2, hidden_dim=20, n_hidden_layers=3), seed=seed)
        vals = np.exp(flow.log_density(pts)).reshape(401, 401)
        total = np.trapezoid(np.trapezoid(vals, grid, axis=1), grid)
        worst_mass = max(worst_mass, abs(total - 1.0))
    assert worst_mass <= 1e-2
    report(f"[PASS] flow log-det vs brute force {worst_logdet:.2e} (<1e-3); "
           f"2-D normalization off by {worst_mass:.2e} (<=1e-2)")


# --------------------------------------------------------------------------
# 7. end-to-end circle experiment (desk preset)


def _train_circle_cell(kind: str, sigma2: float, seed: int, D: int = 2,
                       n: int = 100_000, iters: int = 20_000, hidden: int = 100,
                       layers: int = 3, lr: float = 0.1, patience: int = 2000,
                       val_every: int = 100, data=None):
    manifold = get_manifold("s1" if D == 2 else f"s1:D={D}")
    noise_cls = NormalGaussian if kind == "nid" else IsotropicGaussian
    noise = noise_cls(d=1, D=D, sigma2=sigma2)
    if data is None:
        U = VM8.sample(n, rng_seed=1000 + seed)
        _, data, _ = inflate_batch(noise, manifold, 0, U, np.random.default_rng(2000 + seed))
    flow = FlowModel(FlowHyper(D=D, hidden_dim=hidden, n_hidden_layers=layers), seed=seed)
    cfg = TrainConfig(max_iterations=iters, val_every=val_every, initial_lr=lr,
                      lr_patience=patience, seed=seed)
    train(flow, data, cfg)
    axes = latent_grid_axes(VM8.domain)
    pi_true = grid_true_density(VM8, axes)
    pi_hat = induced_latent(deflate(flow, noise), manifold, 0, axes)
    return ks_statistic(pi_true, pi_hat).ks


@pytest.fixture(scope="module")
def circle_desk_runs():
    return {
        ("nid", 0.01): _train_circle_cell("nid", 0.01, seed=0),
        ("nid", 1.0): _train_circle_cell("nid", 1.0, seed=0),
        ("iid", 1.0): _train_circle_cell("iid", 1.0, seed=0),
    }


def test_accept_end_to_end_small_noise(circle_desk_runs):
    ks = circle_desk_runs[("nid", 0.01)]
    assert ks <= 0.1
    report(f"[PASS] end-to-end circle, normal noise sigma^2=0.01: KS {ks:.4f} (<=0.1)")


def test_accept_end_to_end_large_noise_ordering(circle_desk_runs):
    ks_nid = circle_desk_runs[("nid", 1.0)]
    ks_iid = circle_desk_runs[("iid", 1.0)]
    assert ks_nid <= 0.15
    assert ks_iid > ks_nid
    report(f"[PASS] end-to-end circle sigma^2=1: normal KS {ks_nid:.4f} (<=0.15) "
           f"< isotropic KS {ks_iid:.4f}")


def test_accept_iid_ks_curve_is_u_shaped():
    # reduced grid: the interior noise level must beat both extremes
    ks = {s2: _train_circle_cell("iid", s2, seed=0, n=30_000, iters=4000, hidden=64)
          for s2 in (1e-7, 1.0, 10.0)}
    assert ks[1.0] < ks[1e-7]
    assert ks[1.0] < ks[10.0]
    report(f"[PASS] isotropic KS curve U-shape: {ks[1e-7]:.3f} > {ks[1.0]:.3f} < {ks[10.0]:.3f}")


# --------------------------------------------------------------------------
# 8. higher embedding dimension: methods approach each other


def _paired_circle_data(D: int, sigma2: float, seed: int, n: int):
    """Normal and isotropic datasets sharing the normal-noise coefficients.

    Isotropic noise is drawn as (normal part) + (tangential part), which is
    distribution-identical to N(0, sigma2 I_D) and pairs the two runs.
    """
    manifold = get_manifold("s1" if D == 2 else f"s1:D={D}")
    U = VM8.sample(n, rng_seed=1000 + seed)
    X = embed(manifold, 0, U)
    A = normal_frames(manifold, 0, U)
    J = jacobian(manifold, 0, U)
    T = J[..., 0] / np.linalg.norm(J[..., 0], axis=1, keepdims=True)
    rng = np.random.default_rng(2000 + seed)
    v = math.sqrt(sigma2) * rng.standard_normal((n, D - 1))
    w = math.sqrt(sigma2) * rng.standard_normal(n)
    data_nid = X + np.einsum("nij,nj->ni", A, v)
    data_iid = data_nid + T * w[:, None]
    return data_nid, data_iid


def test_accept_gap_shrinks_with_embedding_dimension():
    sigma2 = 2.0
    seeds = (0, 1, 2)
    gaps = {}
    for D, hidden, iters, lr, patience, val_every in (
        (2, 100, 8000, 0.1, 2000, 100),
        (20, 200, 8000, 0.01, 250, 50),
    ):
        ks_nid, ks_iid = [], []
        for seed in seeds:
            data_nid, data_iid = _paired_circle_data(D, sigma2, seed, n=100_000)
            ks_nid.append(_train_circle_cell("nid", sigma2, seed, D=D, hidden=hidden,
                                             iters=iters, lr=lr, patience=patience,
                                             val_every=val_every, data=data_nid))
            ks_iid.append(_train_circle_cell("iid", sigma2, seed, D=D, hidden=hidden,
                                             iters=iters, lr=lr, patience=patience,
                                             val_every=val_every, data=data_iid))
        gaps[D] = abs(float(np.mean(ks_nid)) - float(np.mean(ks_iid)))
        report(f"       D={D}: KS nid {np.round(ks_nid,3).tolist()} "
               f"iid {np.round(ks_iid,3).tolist()} gap {gaps[D]:.4f}")
    assert gaps[20] < gaps[2]
    report(f"[PASS] normal/isotropic gap shrinks with D: {gaps[2]:.4f} (D=2) -> "
           f"{gaps[20]:.4f} (D=20)")


# --------------------------------------------------------------------------
# 9. reachability checker


def test_accept_reachability():
    circle = get_manifold("s1")
    inside = NormalUniformInterval(d=1, D=2, lo=-1.0, hi=1.0)
    rep_in = reachability_check(circle, inside, VM8, n_probes=1000, grid_resolution=256,
                                rng_seed=0)
    assert rep_in["violation_fraction"] <= 1e-3
    overlapping = NormalUniformInterval(d=1, D=2, lo=-4.5, hi=3.0)
    rep_over = reachability_check(circle, overlapping, VM8, n_probes=1000,
                                  grid_resolution=256, rng_seed=0)
    assert rep_over["violation_fraction"] >= 0.05
    report(f"[PASS] reachability: interval inside radius {rep_in['violation_fraction']:.4f} "
           f"(<=1e-3); overlapping interval {rep_over['violation_fraction']:.4f} (>=0.05)")


# --------------------------------------------------------------------------
# 10. flow-on-latent baseline


def test_accept_fom_baseline():
    U = VM8.sample(100_000, rng_seed=77)
    axes = latent_grid_axes(VM8.domain)
    gd = fom_baseline(U, VM8, axes, seed=0)
    ks = ks_statistic(grid_true_density(VM8, axes), gd).ks
    assert ks <= 0.05
    report(f"[PASS] latent-flow baseline: KS {ks:.4f} (<=0.05)")
