import numpy as np
import pytest

from sparseshallow.data import Dataset
from sparseshallow.geometry import augment, feature_matrix, sample_sphere
from sparseshallow.loss_dual import loss_value, outer_gradient
from sparseshallow.network import ShallowNet
from sparseshallow.penalty import PenaltySpec, phi_derivative, soft_threshold, total_penalty
from sparseshallow.train_outer import OuterSolveConfig, prox_grad_outer, smooth_part_grad, ssn_outer

L1 = PenaltySpec("l1")
LOG1 = PenaltySpec("log", 1.0)
MIX2 = PenaltySpec("mixed_log_l1", 2.0)


def toy_problem(rng, k=60, n=10, d=2):
    xs = rng.uniform(-1, 1, size=(k, d))
    ys = rng.normal(size=k)
    net = ShallowNet(sample_sphere(n, d, rng), rng.normal(size=n))
    return net, Dataset(xs, ys)


def objective(net, data, spec, alpha, c):
    return loss_value(net.with_weights(c), data) + alpha * total_penalty(spec, c)


def kkt_max(net, data, spec, alpha, c):
    g = outer_gradient(net.with_weights(c), data)
    out = 0.0
    for n in range(len(c)):
        if c[n] != 0.0:
            out = max(out, abs(g[n] + alpha * phi_derivative(spec, abs(c[n])) * np.sign(c[n])))
        else:
            out = max(out, max(abs(g[n]) - alpha, 0.0))
    return out


class TestSmoothPartGrad:
    def test_l1_reduces_to_loss_gradient(self):
        rng = np.random.default_rng(0)
        net, data = toy_problem(rng)
        c = rng.normal(size=net.width)
        g = smooth_part_grad(net, data, L1, 0.37, c)
        assert np.allclose(g, outer_gradient(net.with_weights(c), data), atol=1e-15)

    def test_zero_weights(self):
        rng = np.random.default_rng(1)
        net, data = toy_problem(rng)
        c = np.zeros(net.width)
        g = smooth_part_grad(net, data, LOG1, 0.1, c)
        assert np.allclose(g, outer_gradient(net.with_weights(c), data), atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        net, data = toy_problem(rng, n=6)
        alpha = 0.05
        c = rng.normal(size=net.width) + np.sign(rng.normal(size=net.width)) * 0.3
        g = smooth_part_grad(net, data, MIX2, alpha, c)
        h = 1e-6

        def f_smooth(cv):
            pen = sum(
                float(
                    __import__("sparseshallow.penalty", fromlist=["phi_value"]).phi_value(
                        MIX2, abs(v)
                    )
                    - abs(v)
                )
                for v in cv
            )
            return loss_value(net.with_weights(cv), data) + alpha * pen

        for n in range(net.width):
            e = np.zeros(net.width)
            e[n] = h
            fd = (f_smooth(c + e) - f_smooth(c - e)) / (2 * h)
            assert g[n] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestProxGrad:
    def test_zero_is_stationary_for_large_alpha(self):
        rng = np.random.default_rng(3)
        net, data = toy_problem(rng)
        alpha = np.abs(outer_gradient(net.with_weights(np.zeros(net.width)), data)).max() * 1.01
        c, diag = prox_grad_outer(net, data, L1, alpha, c0=np.zeros(net.width))
        assert np.all(c == 0.0)
        assert diag["converged"]

    def test_single_node_closed_form(self):
        rng = np.random.default_rng(4)
        xs = rng.uniform(-1, 1, size=(50, 1))
        ys = rng.normal(size=50) + 1.0
        data = Dataset(xs, ys)
        net = ShallowNet(np.array([[0.0, 1.0]]), np.array([0.0]))
        alpha = 0.05
        a = feature_matrix(net.nodes, augment(xs))[:, 0]
        closed = soft_threshold(alpha * 50 / float(a @ a), float(a @ ys) / float(a @ a))
        cfg = OuterSolveConfig(prox_tol=1e-13, max_iters=20000)
        c, _ = prox_grad_outer(net, data, L1, alpha, cfg)
        assert c[0] == pytest.approx(closed, abs=1e-8)

    def test_interpolation_sanity(self):
        # representable noise-free target, tiny alpha: loss goes to ~0
        rng = np.random.default_rng(5)
        nodes = sample_sphere(3, 1, rng)
        truth = ShallowNet(nodes, np.array([1.0, -2.0, 0.5]))
        xs = rng.uniform(-1, 1, size=(40, 1))
        data = Dataset(xs, truth.evaluate(xs))
        cfg = OuterSolveConfig(prox_tol=1e-12, max_iters=50000)
        c, _ = prox_grad_outer(truth.with_weights(np.zeros(3)), data, L1, 1e-8, cfg)
        assert loss_value(truth.with_weights(c), data) <= 1e-10

    def test_objective_not_increased(self):
        rng = np.random.default_rng(6)
        net, data = toy_problem(rng)
        alpha = 1e-3
        j0 = objective(net, data, LOG1, alpha, net.weights)
        c, _ = prox_grad_outer(net, data, LOG1, alpha, c0=net.weights)
        assert objective(net, data, LOG1, alpha, c) <= j0 + 1e-15


class TestSsn:
    @pytest.mark.parametrize("spec", [L1, LOG1, MIX2], ids=lambda s: s.kind)
    def test_stationarity_and_exact_zeros(self, spec):
        rng = np.random.default_rng(7)
        net, data = toy_problem(rng, k=80, n=12)
        alpha = 2e-3
        c, diag = ssn_outer(net, data, spec, alpha, c0=net.weights, tol=1e-12)
        assert diag["converged"]
        assert kkt_max(net, data, spec, alpha, c) <= 1e-11
        assert np.all((c == 0.0) | (np.abs(c) > 1e-12))

    def test_agrees_with_prox_grad(self):
        rng = np.random.default_rng(8)
        net, data = toy_problem(rng, k=50, n=10)
        alpha = 5e-3
        cfg = OuterSolveConfig(prox_tol=1e-12, max_iters=100000)
        c_pg, _ = prox_grad_outer(net, data, L1, alpha, cfg, c0=net.weights)
        c_ssn, _ = ssn_outer(net, data, L1, alpha, cfg, c0=net.weights, tol=1e-13)
        j_pg = objective(net, data, L1, alpha, c_pg)
        j_ssn = objective(net, data, L1, alpha, c_ssn)
        assert j_ssn <= j_pg + 1e-10

    def test_zero_bound_at_inactive(self):
        rng = np.random.default_rng(9)
        net, data = toy_problem(rng, k=70, n=15)
        alpha = 1e-2
        c, diag = ssn_outer(net, data, L1, alpha, c0=net.weights, tol=1e-12)
        g = outer_gradient(net.with_weights(c), data)
        inactive = c == 0.0
        assert np.any(inactive)
        assert np.all(np.abs(g[inactive]) <= alpha * (1 + 1e-8))

    def test_support_equation_at_active(self):
        rng = np.random.default_rng(10)
        net, data = toy_problem(rng, k=70, n=8)
        alpha = 1e-3
        c, _ = ssn_outer(net, data, LOG1, alpha, c0=net.weights, tol=1e-12)
        g = outer_gradient(net.with_weights(c), data)
        active = c != 0.0
        assert np.any(active)
        target = -alpha * phi_derivative(LOG1, np.abs(c[active])) * np.sign(c[active])
        assert np.abs(g[active] - target).max() <= 1e-11

    def test_empty_network(self):
        data = Dataset(np.array([[0.0]]), np.array([1.0]))
        c, diag = ssn_outer(ShallowNet.empty(1), data, L1, 1e-3)
        assert c.size == 0 and diag["converged"]

    def test_lam_guard(self):
        cfg = OuterSolveConfig(lam=2.0)
        with pytest.raises(ValueError):
            cfg.lam_for(LOG1, 1e-3, 1.0)
        assert cfg.lam_for(L1, 1e-3, 0.0) == 2.0
        auto = OuterSolveConfig()
        assert auto.lam_for(LOG1, 1e-3, 2.0) == pytest.approx(5e-4)
