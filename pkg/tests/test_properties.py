"""Property tests for the cross-cutting invariants."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from infdef import autodiff as ad
from infdef.autodiff import Tensor
from infdef.evaluation import GriddedDensity, ks_statistic
from infdef.manifolds import get_manifold, gram_det, jacobian, normal_frames

CIRCLE = get_manifold("s1")
TORUS = get_manifold("t2")

finite_floats = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(st.floats(-math.pi + 1e-6, math.pi - 1e-6))
def test_circle_frame_invariants_everywhere(u):
    A = normal_frames(CIRCLE, 0, np.array([[u]]))[0]
    J = jacobian(CIRCLE, 0, np.array([u]))
    assert abs(A[:, 0] @ A[:, 0] - 1.0) < 1e-10
    assert abs(float(A[:, 0] @ J[:, 0])) < 1e-8
    # sign fix: outward radial
    x = 3.0 * np.array([math.cos(u), math.sin(u)])
    assert A[:, 0] @ x > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 2 * math.pi - 0.01), st.floats(0.01, 2 * math.pi - 0.01))
def test_torus_gram_positive_and_matches_table(z1, z2):
    det = gram_det(TORUS, 0, np.array([z1, z2]))
    table = 0.6 * (1 + 0.6 * math.cos(z2))
    assert det > 0
    assert abs(math.sqrt(det) - table) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(0, 10**6))
def test_ks_2d_max_over_orderings(n1, n2, seed):
    rng = np.random.default_rng(seed)
    axes = (np.sort(rng.uniform(0, 1, n1)), np.sort(rng.uniform(0, 2, n2)))
    if len(set(axes[0])) < n1 or len(set(axes[1])) < n2:
        return
    t = GriddedDensity(axes=axes, values=rng.random((n1, n2)))
    h = GriddedDensity(axes=axes, values=rng.random((n1, n2)))
    rep = ks_statistic(t, h)
    assert len(rep.ordering_values) == 4
    assert rep.ks == max(rep.ordering_values)
    assert rep.ks >= rep.ordering_values[0]
    assert ks_statistic(t, t).ks == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10**6))
def test_log_matmul_exp_matches_dense_composition(n, k, o, seed):
    rng = np.random.default_rng(seed)
    c = Tensor(5 * rng.standard_normal((n, 2, k)))
    w = Tensor(5 * rng.standard_normal((2, k, o)))
    fused = ad.log_matmul_exp(c, w).data
    dense = ad.logsumexp(ad.add(ad.reshape(c, (n, 2, k, 1)), w), axis=-2, keepdims=False).data
    assert np.allclose(fused, dense, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.lists(finite_floats, min_size=2, max_size=6), st.integers(0, 100))
def test_flow_monotone_for_random_inputs(xs, seed):
    from infdef.flow import FlowHyper, FlowModel

    flow = FlowModel(FlowHyper(D=2, hidden_dim=8, n_hidden_layers=2), seed=seed,
                     init_scale=0.2)
    x = np.array(xs[:2]) if len(xs) >= 2 else np.zeros(2)
    z0 = flow.transform(x)
    for i in range(2):
        xp = x.copy()
        xp[i] += 0.5
        assert flow.transform(xp)[i] > z0[i]
