"""Finite-difference verification of every autodiff op, plus graph rules.

Gradient checks perturb inputs at generic (non-kink) points: relu and clamp
have undefined derivatives exactly at their break points, so inputs are
drawn from a continuous distribution where ties have probability zero.
"""

import numpy as np
import pytest

from archlab import autodiff as ad
from archlab.errors import GraphError, ShapeError


def central_difference(f, x, h=1e-6):
    """Gradient of scalar f at array x via central differences."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        hi = f()
        x[idx] = orig - h
        lo = f()
        x[idx] = orig
        g[idx] = (hi - lo) / (2 * h)
    return g


def check_grad(build, *shapes, seed=0, atol=1e-7, rtol=1e-5):
    """build(*nodes) -> scalar Node; verifies every input gradient."""
    rng = np.random.default_rng(seed)
    nodes = [ad.Node(rng.normal(size=s)) for s in shapes]
    loss = build(*nodes)
    loss.backward()
    for node in nodes:
        fd = central_difference(lambda: float(build(*nodes).value), node.value)
        np.testing.assert_allclose(node.grad, fd, atol=atol, rtol=rtol)


class TestArithmetic:
    def test_add(self):
        check_grad(lambda a, b: ad.reduce_sum(ad.square(a + b)), (3, 4), (3, 4))

    def test_add_row_bias(self):
        check_grad(lambda a, b: ad.reduce_sum(ad.square(a + b)), (3, 4), (4,))

    def test_add_scalar(self):
        check_grad(lambda a, b: ad.reduce_sum(ad.square(a + b)), (3, 4), ())

    def test_add_shape_error(self):
        with pytest.raises(ShapeError):
            ad.Node(np.zeros((2, 3))) + ad.Node(np.zeros((3, 2)))

    def test_sub_and_neg(self):
        check_grad(lambda a, b: ad.reduce_sum(ad.square(a - b) + (-a)), (2, 2), (2, 2))

    def test_mul(self):
        check_grad(lambda a, b: ad.reduce_sum(a * b * a), (3, 3), (3, 3))

    def test_mul_scalar_node(self):
        check_grad(lambda a, s: ad.reduce_sum(a * s), (3, 2), ())

    def test_mul_python_scalar(self):
        check_grad(lambda a: ad.reduce_sum(a * 2.5 + 3.0 * a), (4,))

    def test_matmul(self):
        check_grad(lambda a, b: ad.reduce_sum(ad.square(a @ b)), (3, 4), (4, 2))

    def test_matmul_shape_error(self):
        with pytest.raises(ShapeError):
            ad.Node(np.zeros((2, 3))) @ ad.Node(np.zeros((2, 3)))


class TestElementwise:
    def test_relu(self):
        check_grad(lambda a: ad.reduce_sum(ad.square(ad.relu(a))), (5, 5))

    def test_relu_value(self):
        out = ad.relu(ad.Node([[-1.0, 2.0]]))
        np.testing.assert_array_equal(out.value, [[0.0, 2.0]])

    def test_tanh(self):
        check_grad(lambda a: ad.reduce_sum(ad.tanh(a)), (4, 3))

    def test_exp(self):
        check_grad(lambda a: ad.reduce_sum(ad.exp(a)), (3, 3))

    def test_log(self):
        rng = np.random.default_rng(0)
        a = ad.Node(rng.uniform(0.5, 2.0, size=(3, 3)))
        loss = ad.reduce_sum(ad.log(a))
        loss.backward()
        fd = central_difference(
            lambda: float(ad.reduce_sum(ad.log(a)).value), a.value
        )
        np.testing.assert_allclose(a.grad, fd, rtol=1e-6)

    def test_square(self):
        check_grad(lambda a: ad.reduce_sum(ad.square(a)), (2, 5))

    def test_clamp_gradient_masks_outside(self):
        a = ad.Node([[-2.0, 0.5, 3.0]])
        out = ad.reduce_sum(ad.clamp(a, -1.0, 1.0))
        out.backward()
        np.testing.assert_array_equal(a.grad, [[0.0, 1.0, 0.0]])
        np.testing.assert_array_equal(out.value, 0.5)


class TestStructured:
    def test_row_softmax_rows_stochastic(self):
        s = ad.row_softmax(ad.Node(np.random.default_rng(0).normal(size=(6, 4))))
        np.testing.assert_allclose(s.value.sum(axis=1), 1.0, atol=1e-12)

    def test_row_softmax_grad(self):
        rng = np.random.default_rng(1)
        w = rng.normal(size=(5, 4))
        check_grad(
            lambda a: ad.reduce_sum(ad.square(ad.row_softmax(a) - w)), (5, 4)
        )

    def test_transpose(self):
        check_grad(lambda a: ad.reduce_sum(ad.square(ad.transpose(a) @ a)), (3, 2))

    def test_reduce_mean(self):
        check_grad(lambda a: ad.reduce_mean(ad.square(a)), (4, 6))

    def test_concat(self):
        check_grad(
            lambda a, b: ad.reduce_sum(ad.square(ad.concat([a, b], axis=1))),
            (3, 2),
            (3, 4),
        )

    def test_concat_axis0(self):
        check_grad(
            lambda a, b: ad.reduce_sum(ad.square(ad.concat([a, b], axis=0))),
            (2, 3),
            (4, 3),
        )

    def test_narrow(self):
        check_grad(
            lambda a: ad.reduce_sum(ad.square(ad.narrow(a, 1, 1, 3))), (4, 5)
        )

    def test_narrow_value(self):
        a = ad.Node(np.arange(12.0).reshape(3, 4))
        np.testing.assert_array_equal(ad.narrow(a, 1, 0, 2).value, a.value[:, :2])


class TestGraph:
    def test_backward_requires_scalar(self):
        with pytest.raises(GraphError):
            ad.Node(np.zeros((2, 2))).backward()

    def test_gradient_accumulates_on_reuse(self):
        # loss = sum(a*a) + sum(a) uses `a` twice: dL/da = 2a + 1
        a = ad.Node([[1.0, 2.0]])
        loss = ad.reduce_sum(a * a) + ad.reduce_sum(a)
        loss.backward()
        np.testing.assert_allclose(a.grad, 2 * a.value + 1.0, atol=1e-12)

    def test_diamond_graph(self):
        # b = 2a used by two branches whose grads must both reach a
        a = ad.Node([[3.0]])
        b = a * 2.0
        loss = ad.reduce_sum(b * b + b)
        loss.backward()
        # d/da (4a^2 + 2a) = 8a + 2
        np.testing.assert_allclose(a.grad, [[8 * 3.0 + 2.0]], atol=1e-12)

    def test_deep_chain_no_recursion_limit(self):
        a = ad.Node([[1.0]])
        h = a
        for _ in range(5000):
            h = h * 1.0
        ad.reduce_sum(h).backward()
        np.testing.assert_allclose(a.grad, [[1.0]])

    def test_zero_grad(self):
        a = ad.Node([[1.0, 2.0]])
        ad.reduce_sum(ad.square(a)).backward()
        assert np.any(a.grad != 0)
        a.zero_grad()
        np.testing.assert_array_equal(a.grad, 0.0)

    def test_constant_wrapping(self):
        a = ad.Node([[1.0]])
        loss = ad.reduce_sum(a + [[2.0]])
        loss.backward()
        np.testing.assert_allclose(loss.value, 3.0)
        np.testing.assert_allclose(a.grad, [[1.0]])
