import math

import numpy as np
import pytest

from infdef.densities import LatentDensity, make_density, registry_names
from infdef.errors import DomainError, ParamError, UnknownDensityError

ALL_NAMES = registry_names()


@pytest.fixture(scope="module")
def every_density():
    return {name: make_density(name) for name in ALL_NAMES}


def test_registry_contents():
    assert {"uniform", "vonmises", "s2_mixture4", "s2_correlated", "t2_mixture3",
            "t2_correlated", "h2_exponential", "h2_correlated", "thin_spiral_exp",
            "swiss_mixture3", "swiss_correlated", "hs2_mixture3", "hs2_correlated",
            "so2_mixture4"} <= set(ALL_NAMES)
    with pytest.raises(UnknownDensityError):
        make_density("nope")
    with pytest.raises(ParamError):
        make_density("vonmises", {"kappa": float("nan")})


@pytest.mark.parametrize("name", ALL_NAMES)
def test_normalization(every_density, name):
    den = every_density[name]
    if den.d == 1:
        grid = np.linspace(den.domain[0][0], den.domain[0][1], 20001)
        total = np.trapezoid(den.pdf(grid[:, None]), grid)
    else:
        g1 = np.linspace(den.domain[0][0], den.domain[0][1], 801)
        g2 = np.linspace(den.domain[1][0], den.domain[1][1], 801)
        U = np.stack([np.repeat(g1, g2.size), np.tile(g2, g1.size)], axis=1)
        vals = den.pdf(U).reshape(g1.size, g2.size)
        total = np.trapezoid(np.trapezoid(vals, g2, axis=1), g1)
    assert abs(total - 1.0) < 1e-3


@pytest.mark.parametrize("name", ALL_NAMES)
def test_sampler_matches_cdf(every_density, name):
    den = every_density[name]
    samples = den.sample(100_000, rng_seed=42)
    assert samples.shape == (100_000, den.d)
    for axis in range(den.d):
        s = np.sort(samples[:, axis])
        cdf = den.cdf_1d(s, axis=axis)
        ecdf_hi = np.arange(1, s.size + 1) / s.size
        ecdf_lo = np.arange(0, s.size) / s.size
        ks = max(np.max(np.abs(cdf - ecdf_hi)), np.max(np.abs(cdf - ecdf_lo)))
        assert ks <= 0.02, f"{name} axis {axis}: KS {ks}"
        lo, hi = den.domain[axis]
        assert s[0] >= lo - 1e-9 and s[-1] <= hi + 1e-9


def test_sampling_is_deterministic(every_density):
    den = every_density["vonmises"]
    a = den.sample(1000, rng_seed=7)
    b = den.sample(1000, rng_seed=7)
    c = den.sample(1000, rng_seed=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniform_basics():
    den = make_density("uniform", {"bounds": [[0.0, 1.0]]})
    assert den.is_uniform
    u = den.sample(4, rng_seed=7)
    assert np.all((0 <= u) & (u <= 1))
    assert abs(den.pdf(np.array([0.5])) - 1.0) < 1e-12
    assert np.allclose(den.hess(np.array([0.25])), 0.0)


def test_vonmises_shape_and_moments():
    den = make_density("vonmises", {"kappa": 8.0})
    # unnormalized ratio matches exp(8 cos u)
    u1, u2 = np.array([0.2]), np.array([-0.7])
    expected = math.exp(8 * math.cos(0.2)) / math.exp(8 * math.cos(-0.7))
    assert abs(den.pdf(u1) / den.pdf(u2) - expected) < 1e-10
    # sample mean direction close to mu = 0
    s = den.sample(100_000, rng_seed=3)[:, 0]
    mean_dir = math.atan2(np.mean(np.sin(s)), np.mean(np.cos(s)))
    assert abs(mean_dir) < 0.01
    # gradient vanishes at the mode, hess(0)/pdf(0) = -kappa
    assert abs(den.grad(np.array([0.0]))[0]) < 1e-12
    ratio = den.hess(np.array([0.0]))[0, 0] / den.pdf(np.array([0.0]))
    assert abs(ratio - (-8.0)) < 1e-10


def test_vonmises_bessel_cross_check():
    # full-period normalization constant is 2 pi I0(kappa)
    from scipy.special import i0

    den = make_density("vonmises", {"kappa": 8.0, "domain": "full"})
    Z = math.exp(den.log_partition)
    assert abs(Z - 2 * math.pi * i0(8.0)) / (2 * math.pi * i0(8.0)) < 1e-6


def test_s2_mixture_mode_weights():
    den = make_density("s2_mixture4")
    s = den.sample(100_000, rng_seed=5)
    q1 = s[:, 0] < math.pi
    q2 = s[:, 1] < math.pi / 2
    for w in [np.mean(q1 & q2), np.mean(q1 & ~q2), np.mean(~q1 & q2), np.mean(~q1 & ~q2)]:
        assert abs(w - 0.25) < 0.02


def test_product_mixture_factorizes():
    den = make_density("t2_mixture3")
    rows = den.params["rows"]
    kappa = den.params["kappa"]
    rng = np.random.default_rng(0)
    U = rng.uniform(0, 2 * math.pi, size=(50, 2))
    direct = sum(
        np.exp(kappa * np.cos(U[:, 0] - mu)) * np.exp(kappa * np.cos(U[:, 1] - m))
        for mu, m in rows
    )
    assert np.max(np.abs(den.unnormalized_pdf(U) - direct)) < 1e-12


@pytest.mark.parametrize("name", ["vonmises", "s2_mixture4", "t2_correlated",
                                  "swiss_mixture3", "h2_exponential", "hs2_correlated"])
def test_hessian_analytic_vs_fd(every_density, name):
    den = every_density[name]
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = np.array([rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
                      for lo, hi in den.domain])
        H = np.atleast_2d(den.hess(u))
        H_fd = np.atleast_2d(den.hess_fd(u))
        scale = max(np.max(np.abs(H_fd)), den.pdf(u), 1e-12)
        assert np.max(np.abs(H - H_fd)) / scale < 1e-4


def test_grad_matches_fd(every_density):
    den = every_density["s2_correlated"]
    u = np.array([1.1, 0.9])
    g = den.grad(u)
    h = 1e-6
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        fd = (den.pdf(u + e) - den.pdf(u - e)) / (2 * h)
        assert abs(g[a] - fd) < 1e-6 * max(1.0, abs(fd))


def test_domain_error():
    den = make_density("vonmises", {"kappa": 8.0})
    with pytest.raises(DomainError):
        den.pdf(np.array([2.0]))  # outside [-pi/2, pi/2]


def test_thin_spiral_is_decaying_and_truncated():
    den = make_density("thin_spiral_exp")
    assert den.domain[0][1] == 2.5
    assert den.pdf(np.array([0.1])) > den.pdf(np.array([2.0]))
    assert "truncation" in den.metadata


def test_cache_roundtrip(tmp_path):
    d1 = make_density("vonmises", {"kappa": 8.0}, cache_dir=str(tmp_path))
    s1 = d1.sample(100, rng_seed=1)
    files = list(tmp_path.glob("*.npz"))
    assert len(files) == 1
    d2 = make_density("vonmises", {"kappa": 8.0}, cache_dir=str(tmp_path))
    s2 = d2.sample(100, rng_seed=1)
    assert np.array_equal(s1, s2)
    # different params hash to a different cache entry
    make_density("vonmises", {"kappa": 2.0}, cache_dir=str(tmp_path)).sample(10, rng_seed=1)
    assert len(list(tmp_path.glob("*.npz"))) == 2


def test_stratified_sampling_reduces_mean_error():
    den = make_density("vonmises", {"kappa": 8.0})
    plain = den.sample(10_000, rng_seed=0)[:, 0].mean()
    strat = den.sample(10_000, rng_seed=0, stratified=True)[:, 0].mean()
    grid = np.linspace(-math.pi / 2, math.pi / 2, 200001)
    exact = np.trapezoid(grid * den.pdf(grid[:, None]), grid)
    assert abs(strat - exact) < abs(plain - exact) + 1e-6
    assert abs(strat - exact) < 1e-4
