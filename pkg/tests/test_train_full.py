import numpy as np
import pytest

from sparseshallow.data import Dataset, SyntheticSpec, generate
from sparseshallow.geometry import sample_sphere
from sparseshallow.insertion import InsertionConfig
from sparseshallow.loss_dual import loss_value
from sparseshallow.network import ShallowNet
from sparseshallow.penalty import PenaltySpec, total_penalty
from sparseshallow.train_full import AlgorithmConfig, run_algorithm1, train_joint

LOG1 = PenaltySpec("log", 1.0)


def small_cfg(spec=LOG1, alpha=1e-4, seed=0, T=8, **kw):
    return AlgorithmConfig(
        alpha=alpha, penalty=spec, T=T,
        insertion=InsertionConfig(n_trial=20, seed=seed), seed=seed, **kw,
    )


def objective(net, data, spec, alpha):
    return loss_value(net, data) + alpha * total_penalty(spec, net.weights)


class TestTrainJoint:
    def test_already_stationary_unchanged(self):
        # zero weights and zero targets: every gradient vanishes
        rng = np.random.default_rng(0)
        net = ShallowNet(sample_sphere(3, 1, rng), np.zeros(3))
        data = Dataset(rng.uniform(-1, 1, size=(10, 1)), np.zeros(10))
        out, diag = train_joint(net, data, LOG1, 1e-3, epochs=50)
        assert np.allclose(out.nodes, net.nodes)
        assert np.all(out.weights == 0.0)

    def test_objective_nonincreasing(self):
        rng = np.random.default_rng(1)
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 120, seed=1))
        net = ShallowNet(sample_sphere(6, 1, rng), rng.normal(size=6))
        j0 = objective(net, data, LOG1, 1e-4)
        out, diag = train_joint(net, data, LOG1, 1e-4, epochs=100)
        j1 = objective(out, data, LOG1, 1e-4)
        assert j1 <= j0 + 1e-15
        assert diag["objective"] == pytest.approx(j1, abs=1e-12)

    def test_fits_single_relu(self):
        # representable target y = relu(x); start from an active (live) neuron
        from sparseshallow.geometry import chart_to_sphere

        xs = np.linspace(-1, 1, 60)[:, None]
        data = Dataset(xs, np.maximum(xs[:, 0], 0.0))
        start = ShallowNet(chart_to_sphere(np.array([[0.3]])), np.array([0.4]))
        out, _ = train_joint(start, data, LOG1, 1e-10, epochs=4000, tol=1e-14)
        assert loss_value(out, data) <= 1e-8

    def test_empty_is_noop(self):
        data = Dataset(np.array([[0.0]]), np.array([1.0]))
        net = ShallowNet.empty(1)
        out, diag = train_joint(net, data, LOG1, 1e-3)
        assert out.width == 0 and diag["epochs"] == 0


class TestRunAlgorithm1:
    def test_planted_single_node_recovery(self):
        rng = np.random.default_rng(5)
        xs = rng.uniform(-1, 1, size=(50, 1))
        w = np.array([[0.8, 0.6]])
        data = Dataset(xs, 2.0 * np.maximum(xs @ w[:, :1].T + w[0, 1], 0.0).ravel())
        net, report = run_algorithm1(data, small_cfg(alpha=1e-6, seed=1))
        assert 1 <= net.width <= 3
        assert report.final["loss"] <= 1e-6

    def test_alpha_above_dual_returns_empty(self):
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 50, seed=2))
        net, report = run_algorithm1(data, small_cfg(alpha=100.0, seed=2, T=3))
        assert net.width == 0
        assert report.stopped_early

    def test_deterministic(self):
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 80, seed=3))
        cfg = small_cfg(seed=3, T=4)
        net1, rep1 = run_algorithm1(data, cfg)
        net2, rep2 = run_algorithm1(data, cfg)
        assert np.array_equal(net1.nodes, net2.nodes)
        assert np.array_equal(net1.weights, net2.weights)
        assert rep1.to_dict()["iterations"] == rep2.to_dict()["iterations"]

    def test_width_growth_bound(self):
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 80, seed=4))
        cfg = small_cfg(seed=4, T=5)
        _, report = run_algorithm1(data, cfg)
        for rec in report.iterations:
            assert rec.width_inserted <= rec.width_start + cfg.insertion.n_trial

    def test_objective_trace_nonincreasing(self):
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 150, seed=5))
        _, report = run_algorithm1(data, small_cfg(seed=5, T=6))
        js = [r.objective for r in report.iterations if np.isfinite(r.objective)]
        assert all(js[i + 1] <= js[i] + 1e-12 for i in range(len(js) - 1))

    def test_stationary_at_exit(self):
        from sparseshallow.analysis import check_stationarity

        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 150, seed=6))
        net, report = run_algorithm1(data, small_cfg(seed=6, T=10, max_extra_iters=15))
        chk = check_stationarity(net, data, LOG1, 1e-4, n_samples=3000, seed=1)
        assert chk.passed
        assert report.final["max_node_residual"] <= 1e-4 * 1e-6

    def test_report_round_trips_to_json(self):
        import json

        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 60, seed=7))
        _, report = run_algorithm1(data, small_cfg(seed=7, T=2))
        doc = json.loads(report.to_json())
        assert doc["seed"] == 7
        assert len(doc["iterations"]) == len(report.iterations)
        assert doc["final"]["width"] == report.final["width"]

    def test_warm_start(self):
        data = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 100, seed=8))
        net1, _ = run_algorithm1(data, small_cfg(seed=8, T=3))
        net2, rep2 = run_algorithm1(data, small_cfg(seed=9, T=3), init=net1)
        assert rep2.final["objective"] <= objective(net1, data, LOG1, 1e-4) + 1e-12
