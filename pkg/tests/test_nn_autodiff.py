import numpy as np
import pytest

from gridcast import nn
from gridcast.errors import MaskAllBlocked, ShapeMismatch
from gridcast.nn import Tensor
from gridcast.nn import autodiff as ad


def numeric_grad(f, x, eps=1e-6):
    """Central differences of scalar f at array x."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    out = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        out[i] = (fp - fm) / (2 * eps)
    return g


def check_op(build, x0, rtol=1e-6):
    """Compare autodiff gradient of sum(op(x)) against central differences."""
    x = Tensor(x0.copy(), requires_grad=True)
    loss = build(x).sum()
    loss.backward()

    def f(arr):
        return build(Tensor(arr)).sum().item()

    expected = numeric_grad(f, x0.copy())
    np.testing.assert_allclose(x.grad, expected, rtol=rtol, atol=1e-8)


class TestElementwiseOps:
    def setup_method(self):
        self.rng = np.random.default_rng(0)

    def test_add_broadcast(self):
        b = Tensor(self.rng.normal(size=(4,)), requires_grad=True)
        x = Tensor(self.rng.normal(size=(3, 4)), requires_grad=True)
        (x + b).sum().backward()
        np.testing.assert_allclose(b.grad, np.full(4, 3.0))
        np.testing.assert_allclose(x.grad, np.ones((3, 4)))

    def test_mul_grad(self):
        check_op(lambda t: t * t * 3.0, self.rng.normal(size=(5, 2)))

    def test_div_grad(self):
        x0 = self.rng.normal(size=(4, 3)) + 5.0
        check_op(lambda t: ad.div(1.0, t), x0)

    def test_matmul_grad(self):
        w = self.rng.normal(size=(4, 2))
        check_op(lambda t: t @ Tensor(w), self.rng.normal(size=(3, 4)))

    def test_batched_matmul_grad(self):
        w = self.rng.normal(size=(2, 3, 5))
        check_op(lambda t: t @ Tensor(w), self.rng.normal(size=(2, 4, 3)))

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((4, 2)))

    def test_tanh_sigmoid_elu_exp(self):
        x0 = self.rng.normal(size=(3, 6))
        check_op(ad.tanh, x0)
        check_op(ad.sigmoid, x0)
        check_op(ad.elu, x0)
        check_op(ad.exp, x0)

    def test_sum_axis_keepdims(self):
        check_op(lambda t: ad.tensor_sum(t, axis=1, keepdims=True) * 2.0,
                 self.rng.normal(size=(3, 5)))

    def test_mean_axis(self):
        check_op(lambda t: ad.tensor_mean(t, axis=0), self.rng.normal(size=(6, 2)))

    def test_slicing_grad(self):
        check_op(lambda t: t[:, 1:3] * 2.0, self.rng.normal(size=(4, 5)))

    def test_concat_grad(self):
        def build(t):
            return ad.concat([t[:, :2], t[:, 2:] * 3.0], axis=-1)
        check_op(build, self.rng.normal(size=(3, 5)))

    def test_reshape_swapaxes(self):
        check_op(lambda t: t.reshape(6, 2).swapaxes(0, 1) * 2.0,
                 self.rng.normal(size=(3, 4)))

    def test_layer_norm_grad(self):
        gain = Tensor(self.rng.normal(size=(6,)) + 1.0)
        bias = Tensor(self.rng.normal(size=(6,)))
        check_op(lambda t: ad.layer_norm(t, gain, bias),
                 self.rng.normal(size=(4, 6)), rtol=1e-5)


class TestMaskedSoftmax:
    def test_rows_are_simplex(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(5, 7)) * 4.0)
        p = ad.masked_softmax(x).data
        assert (p >= 0).all()
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-9)

    def test_masked_positions_exactly_zero(self):
        rng = np.random.default_rng(2)
        mask = np.tril(np.ones((6, 6), dtype=bool))
        p = ad.masked_softmax(Tensor(rng.normal(size=(6, 6))), mask).data
        assert (p[~mask] == 0.0).all()
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)

    def test_singleton_weight_one(self):
        p = ad.masked_softmax(Tensor(np.array([[3.7]]))).data
        assert p[0, 0] == 1.0

    def test_all_blocked_raises(self):
        mask = np.zeros((2, 2), dtype=bool)
        mask[1] = True
        with pytest.raises(MaskAllBlocked):
            ad.masked_softmax(Tensor(np.zeros((2, 2))), mask)

    def test_gradient(self):
        rng = np.random.default_rng(3)
        mask = np.tril(np.ones((4, 4), dtype=bool))
        weights = rng.normal(size=(4, 4))

        def build(t):
            return ad.masked_softmax(t, mask) * Tensor(weights)

        check_op(build, rng.normal(size=(4, 4)), rtol=1e-5)


class TestGraphMechanics:
    def test_reused_node_accumulates_once_per_path(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        y = x * x + x  # dy/dx = 2x + 1 = 7
        y.sum().backward()
        np.testing.assert_allclose(x.grad, [7.0])

    def test_deep_chain_no_recursion_error(self):
        x = Tensor(np.array([1.0]), requires_grad=True)
        y = x
        for _ in range(5000):
            y = y + 1.0
        y.sum().backward()
        np.testing.assert_allclose(x.grad, [1.0])

    def test_no_grad_blocks_recording(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with nn.no_grad():
            y = x * 2.0
        assert not y.requires_grad
        assert y._backward_fn is None

    def test_dropout_eval_is_identity(self):
        x = Tensor(np.arange(12.0).reshape(3, 4))
        out = ad.dropout(x, 0.5, None, training=False)
        assert out is x

    def test_dropout_train_scales(self):
        rng = np.random.default_rng(0)
        x = Tensor(np.ones((100, 100)))
        out = ad.dropout(x, 0.25, rng, training=True)
        kept = out.data != 0
        assert abs(kept.mean() - 0.75) < 0.02
        np.testing.assert_allclose(out.data[kept], 1 / 0.75)

    def test_embedding_grad_scatters(self):
        table = Tensor(np.arange(12.0).reshape(4, 3), requires_grad=True)
        idx = np.array([1, 1, 3])
        out = ad.embedding(table, idx)
        (out * 2.0).sum().backward()
        expected = np.zeros((4, 3))
        expected[1] = 4.0
        expected[3] = 2.0
        np.testing.assert_allclose(table.grad, expected)
