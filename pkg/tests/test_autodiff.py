import numpy as np
import pytest

from infdef import autodiff as ad
from infdef.autodiff import Tensor, numerical_gradient

RNG = np.random.default_rng(20240811)
RTOL = 1e-4


def check_op(build, tensors, h=1e-5):
    for t in tensors:
        t.grad = None
    out = build()
    out.backward()
    numerics = numerical_gradient(lambda: build().item(), tensors, h=h)
    for t, num in zip(tensors, numerics):
        scale = max(np.max(np.abs(num)), 1e-6)
        assert t.grad is not None
        assert np.max(np.abs(t.grad - num)) / scale < RTOL


def t(shape, scale=1.0, positive=False):
    data = scale * RNG.standard_normal(shape)
    if positive:
        data = np.abs(data) + 0.5
    return Tensor(data, requires_grad=True)


def test_add_broadcast():
    a, b = t((3, 4)), t((4,))
    check_op(lambda: ad.tmean(ad.mul(ad.add(a, b), ad.add(a, b))), [a, b])


def test_sub_and_neg():
    a, b = t((2, 5)), t((2, 5))
    check_op(lambda: ad.tmean(ad.mul(ad.sub(a, b), ad.neg(b))), [a, b])


def test_mul_broadcast():
    a, b = t((2, 3, 4)), t((3, 1))
    check_op(lambda: ad.tmean(ad.mul(a, b)), [a, b])


def test_matmul():
    a, b = t((3, 4)), t((4, 2))
    check_op(lambda: ad.tmean(ad.mul(ad.matmul(a, b), ad.matmul(a, b))), [a, b])


def test_exp_log():
    a = t((3, 3), positive=True)
    check_op(lambda: ad.tmean(ad.log(ad.exp(a))), [a])
    check_op(lambda: ad.tmean(ad.exp(ad.log(a))), [a])


def test_tanh():
    a = t((4, 4), scale=2.0)
    check_op(lambda: ad.tmean(ad.tanh(a)), [a])


def test_log_sech2_matches_tanh_derivative():
    a = t((5, 3), scale=3.0)
    check_op(lambda: ad.tmean(ad.log_sech2(a)), [a])
    # value identity: log sech^2 = log(1 - tanh^2) where the naive form is finite
    x = np.linspace(-5, 5, 41)
    naive = np.log(1.0 - np.tanh(x) ** 2)
    stable = ad.log_sech2(Tensor(x)).data
    assert np.allclose(naive, stable, atol=1e-12)
    # stable at extreme inputs where the naive form is -inf
    big = ad.log_sech2(Tensor(np.array([50.0, -80.0]))).data
    assert np.all(np.isfinite(big))


def test_logsumexp():
    a = t((3, 4, 5), scale=3.0)
    check_op(lambda: ad.tmean(ad.logsumexp(a, axis=-1, keepdims=True)), [a])
    check_op(lambda: ad.tmean(ad.logsumexp(a, axis=1, keepdims=False)), [a])


def test_log_matmul_exp_matches_dense_logsumexp():
    c, w = t((4, 3, 5)), t((3, 5, 2))
    dense = ad.logsumexp(ad.add(ad.reshape(c, (4, 3, 5, 1)), w), axis=-2, keepdims=False)
    fused = ad.log_matmul_exp(c, w)
    assert np.allclose(dense.data, fused.data, atol=1e-12)
    check_op(lambda: ad.tmean(ad.log_matmul_exp(c, w)), [c, w])


def test_log_matmul_exp_extreme_values_stable():
    c = Tensor(np.array([[[700.0, -700.0]]]), requires_grad=True)
    w = Tensor(np.full((1, 2, 1), 500.0), requires_grad=True)
    out = ad.log_matmul_exp(c, w)
    assert np.isfinite(out.data).all()
    assert abs(out.data[0, 0, 0] - 1200.0) < 1e-6


def test_sum_mean_reshape():
    a = t((2, 3, 4))
    check_op(lambda: ad.tmean(ad.tsum(a, axis=2)), [a])
    check_op(lambda: ad.tmean(ad.tsum(a, axis=0, keepdims=True)), [a])
    check_op(lambda: ad.tmean(ad.reshape(a, (6, 4))), [a])
    check_op(lambda: ad.tsum(a), [a])


def test_block_diag():
    a = t((3, 2, 4))
    out = ad.block_diag(a, 3)
    assert out.data.shape == (6, 12)
    assert np.allclose(out.data[0:2, 4:8], 0.0)
    assert np.allclose(out.data[2:4, 4:8], a.data[1])
    check_op(lambda: ad.tmean(ad.mul(ad.block_diag(a, 3), ad.block_diag(a, 3))), [a])


def test_backward_needs_scalar():
    a = t((2, 2))
    with pytest.raises(ValueError):
        ad.add(a, a).backward()


def test_grad_accumulates_over_shared_use():
    a = t((3,))
    out = ad.tsum(ad.add(a, a))
    out.backward()
    assert np.allclose(a.grad, 2.0)
