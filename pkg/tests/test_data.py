import numpy as np
import pytest

from sparseshallow.data import (
    Dataset,
    SyntheticSpec,
    eval_target,
    generate,
    load_csv,
    save_csv,
    true_values,
)


class TestTargets:
    def test_fig1_cos_at_zero(self):
        spec = SyntheticSpec("fig1-cos", "uniform-1d", 10)
        expect = np.cos(10.0 * 1e-3**0.125)
        assert eval_target(spec, np.array([0.0])) == pytest.approx(expect, abs=1e-12)
        assert expect == pytest.approx(-0.4755, abs=1e-4)

    def test_gauss_cos_at_origin(self):
        spec = SyntheticSpec("gauss-cos-2d", "grid-2d", 5)
        assert eval_target(spec, np.array([0.0, 0.0])) == 1.0

    def test_radial_at_center(self):
        spec = SyntheticSpec("radial-norm", "grid-2d", 5, center=(0.1, 0.1))
        assert eval_target(spec, np.array([0.1, 0.1])) == 0.0

    def test_gauss_sin(self):
        spec = SyntheticSpec("gauss-sin-1d", "grid-1d", 10)
        x = 0.37
        expect = np.exp(-0.5 * x * x) * abs(np.sin(7 * np.sqrt(1 + x * x)))
        assert eval_target(spec, np.array([x])) == pytest.approx(expect, abs=1e-14)

    def test_wrong_dimension(self):
        spec = SyntheticSpec("fig1-cos", "uniform-1d", 10)
        with pytest.raises(ValueError):
            eval_target(spec, np.array([0.0, 1.0]))


class TestGenerate:
    def test_deterministic(self):
        spec = SyntheticSpec("fig1-cos", "uniform-1d", 5000, noise_sigma=0.05, seed=42)
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)

    def test_grid2d_size_and_domain(self):
        data = generate(SyntheticSpec("gauss-cos-2d", "grid-2d", 51))
        assert data.size == 2601
        assert data.xs.min() == -1.0 and data.xs.max() == 1.0

    def test_noise_free_is_exact(self):
        spec = SyntheticSpec("gauss-sin-1d", "grid-1d", 100)
        data = generate(spec)
        assert np.array_equal(data.ys, true_values(spec, data))

    def test_grid_is_equispaced_uniform_is_not(self):
        g = generate(SyntheticSpec("gauss-sin-1d", "grid-1d", 100))
        steps = np.diff(g.xs[:, 0])
        assert np.allclose(steps, steps[0])
        u = generate(SyntheticSpec("fig1-cos", "uniform-1d", 100, seed=1))
        assert not np.allclose(np.diff(np.sort(u.xs[:, 0])), steps[0])

    def test_noise_mean_sanity(self):
        spec = SyntheticSpec("fig1-cos", "uniform-1d", 5000, noise_sigma=0.05, seed=3)
        data = generate(spec)
        eps = data.ys - true_values(spec, data)
        assert abs(eps.mean()) <= 4 * 0.05 / np.sqrt(5000)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            SyntheticSpec("fig1-cos", "grid-2d", 10)
        with pytest.raises(ValueError):
            SyntheticSpec("gauss-cos-2d", "grid-1d", 10)
        with pytest.raises(ValueError):
            SyntheticSpec("fig1-cos", "uniform-1d", 10, noise_sigma=-0.1)
        with pytest.raises(ValueError):
            SyntheticSpec("nope", "uniform-1d", 10)


class TestCsv:
    def test_round_trip_full_precision(self, tmp_path):
        data = generate(SyntheticSpec("fig1-cos", "uniform-1d", 37, noise_sigma=0.05, seed=9))
        path = tmp_path / "d.csv"
        save_csv(data, path)
        again = load_csv(path)
        assert np.array_equal(again.xs, data.xs)
        assert np.array_equal(again.ys, data.ys)
        assert again.meta["source"] == "csv"

    def test_small_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x_1,y\n0.5,1.0\n-0.5,2.0\n0.0,0.0\n")
        data = load_csv(path)
        assert data.size == 3 and data.dim == 1

    def test_header_only(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("x_1,y\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_csv(path)

    def test_parse_error_reports_row(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x_1,y\n0.5,1.0\n0.1,oops\n")
        with pytest.raises(ValueError, match="row 3"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "absent.csv")

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[0.0], [1.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            Dataset(np.array([[np.inf]]), np.array([1.0]))
