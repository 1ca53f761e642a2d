import numpy as np
import pytest

from sparseshallow.data import Dataset
from sparseshallow.geometry import chart_to_sphere, sample_sphere, sphere_to_chart
from sparseshallow.loss_dual import (
    DualField,
    dual_grad_chart,
    dual_value,
    loss_value,
    outer_gradient,
    residual,
)
from sparseshallow.network import ShallowNet

NODE_1 = np.array([[0.0, 1.0]])


def toy_pair(rng, k=40, n=5, d=2):
    xs = rng.uniform(-1, 1, size=(k, d))
    ys = rng.normal(size=k)
    net = ShallowNet(sample_sphere(n, d, rng), rng.normal(size=n))
    return net, Dataset(xs, ys)


class TestResidualLoss:
    def test_perfect_fit(self):
        net = ShallowNet(NODE_1, np.array([2.0]))
        data = Dataset(np.array([[0.3], [0.7]]), np.array([2.0, 2.0]))
        assert np.allclose(residual(net, data), 0.0)
        assert loss_value(net, data) == 0.0

    def test_empty_net(self):
        data = Dataset(np.array([[0.0], [1.0]]), np.array([1.5, -1.0]))
        assert np.allclose(residual(ShallowNet.empty(1), data), -data.ys)

    def test_hand_case(self):
        net = ShallowNet(NODE_1, np.array([1.0]))
        data = Dataset(np.array([[0.1], [0.9]]), np.array([0.0, 0.0]))
        assert np.allclose(residual(net, data), [1.0, 1.0])
        assert loss_value(net, data) == pytest.approx(0.5)

    def test_loss_examples(self):
        data1 = Dataset(np.array([[0.0]]), np.array([-1.0]))
        assert loss_value(ShallowNet.empty(1), data1) == pytest.approx(0.5)
        data2 = Dataset(np.array([[0.0], [0.0]]), np.array([-1.0, 1.0]))
        assert loss_value(ShallowNet.empty(1), data2) == pytest.approx(0.5)

    def test_dim_mismatch(self):
        net = ShallowNet.empty(2)
        data = Dataset(np.array([[0.0]]), np.array([0.0]))
        with pytest.raises(ValueError):
            residual(net, data)


class TestDualValue:
    def test_zero_residual(self):
        data = Dataset(np.array([[0.2], [0.4]]), np.array([0.0, 0.0]))
        field = DualField(data, np.zeros(2))
        rng = np.random.default_rng(0)
        assert np.allclose(field.values(sample_sphere(20, 1, rng)), 0.0)

    def test_hand_case(self):
        # K=1, x=1, g=2, node (1,0): sigma = 1, p = 2
        data = Dataset(np.array([[1.0]]), np.array([0.0]))
        field = DualField(data, np.array([2.0]))
        assert dual_value(field, np.array([1.0, 0.0])) == pytest.approx(2.0)

    def test_equals_fresh_weight_derivative(self):
        rng = np.random.default_rng(1)
        net, data = toy_pair(rng)
        field = DualField.from_network(net, data)
        omega = sample_sphere(1, 2, rng)[0]
        p = dual_value(field, omega)
        # finite difference of the loss in a fresh outer weight at omega
        h = 1e-6
        bigger = ShallowNet(np.vstack([net.nodes, omega[None]]), np.append(net.weights, h))
        smaller = ShallowNet(np.vstack([net.nodes, omega[None]]), np.append(net.weights, -h))
        fd = (loss_value(bigger, data) - loss_value(smaller, data)) / (2 * h)
        assert p == pytest.approx(fd, rel=1e-6)


class TestDualGrad:
    def test_zero_residual_zero_grad(self):
        data = Dataset(np.array([[0.2, 0.1]]), np.array([0.0]))
        field = DualField(data, np.zeros(1))
        assert np.allclose(dual_grad_chart(field, np.array([0.3, -0.2])), 0.0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        net, data = toy_pair(rng, k=60)
        field = DualField.from_network(net, data)
        checked = 0
        while checked < 20:
            z = rng.normal(size=2)
            pre = field.x_aug @ chart_to_sphere(z[None])[0]
            if np.abs(pre).min() < 1e-4:
                continue  # keep clear of data kinks
            g = dual_grad_chart(field, z)
            h = 1e-6
            fd = np.zeros(2)
            for i in range(2):
                zp, zm = z.copy(), z.copy()
                zp[i] += h
                zm[i] -= h
                fd[i] = (field.values_chart(zp[None])[0] - field.values_chart(zm[None])[0]) / (2 * h)
            assert np.abs(g - fd).max() <= 1e-5 * max(np.abs(fd).max(), 1e-8)
            checked += 1

    def test_all_inactive_gives_zero(self):
        data = Dataset(np.array([[0.5], [0.8]]), np.array([1.0, 1.0]))
        field = DualField(data, np.array([1.0, 1.0]))
        # node (-1, 0): preactivation -x < 0 on positive data
        z = sphere_to_chart(np.array([-1.0, 1e-8]) / np.linalg.norm([-1.0, 1e-8]))
        assert np.allclose(dual_grad_chart(field, z), 0.0)


class TestOuterGradient:
    def test_zero_residual(self):
        net = ShallowNet(NODE_1, np.array([1.0]))
        data = Dataset(np.array([[0.0], [0.5]]), np.array([1.0, 1.0]))
        assert np.allclose(outer_gradient(net, data), 0.0)

    def test_matches_dual_value_exactly(self):
        rng = np.random.default_rng(3)
        net, data = toy_pair(rng, n=7)
        g = outer_gradient(net, data)
        field = DualField.from_network(net, data)
        for n in range(net.width):
            assert abs(g[n] - dual_value(field, net.nodes[n])) <= 1e-14

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        net, data = toy_pair(rng, k=50, n=6)
        g = outer_gradient(net, data)
        h = 1e-6
        for n in range(net.width):
            e = np.zeros(net.width)
            e[n] = h
            fd = (
                loss_value(net.with_weights(net.weights + e), data)
                - loss_value(net.with_weights(net.weights - e), data)
            ) / (2 * h)
            assert g[n] == pytest.approx(fd, rel=1e-6, abs=1e-10)

    def test_quadratic_expansion_identity(self):
        rng = np.random.default_rng(5)
        net, data = toy_pair(rng, k=30, n=4)
        g = outer_gradient(net, data)
        from sparseshallow.geometry import augment, feature_matrix

        a = feature_matrix(net.nodes, augment(data.xs))
        for _ in range(10):
            t = rng.normal() * 0.5
            n = rng.integers(net.width)
            e = np.zeros(net.width)
            e[n] = t
            lhs = loss_value(net.with_weights(net.weights + e), data)
            rhs = (
                loss_value(net, data)
                + t * g[n]
                + t * t * 0.5 / data.size * float(a[:, n] @ a[:, n])
            )
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_cauchy_schwarz_bound(self):
        rng = np.random.default_rng(6)
        net, data = toy_pair(rng)
        g = residual(net, data)
        field = DualField(data, g)
        bound = np.linalg.norm(np.c_[data.xs, np.ones(data.size)], axis=1).max()
        bound *= np.abs(g).mean()
        samples = sample_sphere(200, 2, rng)
        assert np.abs(field.values(samples)).max() <= bound + 1e-12
