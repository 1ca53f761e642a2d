"""Experiment presets: data recipes, hyperparameters, and runners.

Each preset binds a synthetic dataset to the hyperparameters of one of the
reference experiments: a noisy 1d comparison (``fig1``), the noise-free 1d
and 2d penalty comparisons (``exp1d``, ``exp2d``), the two warm-started
curvature sweeps (``table1``, ``table2``), and the radial-target fidelity
check (``radial-fidelity``).  Comparison presets run the same data once
with the l1 penalty and once with the concave penalty; sweep presets reuse
the previous network as initialization for the next curvature value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import check_stationarity, fidelity_gap, wnorm_radial_2d
from .data import Dataset, SyntheticSpec, generate, true_values
from .insertion import InsertionConfig
from .network import ShallowNet
from .penalty import PenaltySpec
from .train_full import AlgorithmConfig, TrainReport, run_algorithm1

PRESET_NAMES = ("fig1", "exp1d", "exp2d", "table1", "table2", "radial-fidelity")


@dataclass
class RunResult:
    label: str
    penalty: PenaltySpec
    alpha: float
    net: ShallowNet
    report: TrainReport
    error: float  # rms against the noise-free target on the training inputs

    def summary(self) -> dict:
        return {
            "label": self.label,
            "penalty": self.penalty.to_json_dict(),
            "alpha": self.alpha,
            "nodes": self.net.width,
            "error": self.error,
            "loss": self.report.final["loss"],
            "objective": self.report.final["objective"],
            "max_node_residual": self.report.final["max_node_residual"],
            "wall_time_s": self.report.wall_time_s,
        }


@dataclass
class ExperimentResult:
    name: str
    seed: int
    data_spec: SyntheticSpec
    data: Dataset
    runs: list[RunResult] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def rms_error(net: ShallowNet, data: Dataset, f_true: np.ndarray) -> float:
    return float(np.sqrt(np.mean((net.evaluate(data.xs) - f_true) ** 2)))


def _algo_config(alpha, penalty, T, seed, extra_iters, scale=1.0) -> AlgorithmConfig:
    t_scaled = max(2, round(T * scale))
    return AlgorithmConfig(
        alpha=alpha,
        penalty=penalty,
        T=t_scaled,
        max_extra_iters=max(0, round(extra_iters * scale)),
        insertion=InsertionConfig(n_trial=50, seed=seed),
        seed=seed,
    )


@dataclass(frozen=True)
class ExperimentPreset:
    """Fixed parameters of one reference experiment."""

    name: str
    data_spec: SyntheticSpec
    alpha: float
    T: int
    extra_iters: int
    compare: tuple[PenaltySpec, ...] = ()  # l1-versus-phi presets
    sweep: tuple[PenaltySpec, ...] = ()  # warm-started curvature sweeps
    alphas: tuple[float, ...] = ()  # fidelity preset

    def with_seed(self, seed: int) -> SyntheticSpec:
        return replace(self.data_spec, seed=seed)


def _presets() -> dict[str, ExperimentPreset]:
    mixed = lambda g: PenaltySpec("mixed_log_l1", g)
    return {
        "fig1": ExperimentPreset(
            name="fig1",
            data_spec=SyntheticSpec("fig1-cos", "uniform-1d", 5000, noise_sigma=0.05),
            alpha=1e-4,
            T=15,
            extra_iters=25,
            compare=(PenaltySpec("l1"), PenaltySpec("log", 1.0)),
        ),
        "exp1d": ExperimentPreset(
            name="exp1d",
            data_spec=SyntheticSpec("gauss-sin-1d", "grid-1d", 1000),
            alpha=1e-5,
            T=15,
            extra_iters=45,
            compare=(PenaltySpec("l1"), mixed(1.0)),
        ),
        "exp2d": ExperimentPreset(
            name="exp2d",
            data_spec=SyntheticSpec("gauss-cos-2d", "grid-2d", 51),
            alpha=1e-5,
            T=10,
            extra_iters=30,
            compare=(PenaltySpec("l1"), mixed(5.0)),
        ),
        "table1": ExperimentPreset(
            name="table1",
            data_spec=SyntheticSpec("gauss-sin-1d", "grid-1d", 1000),
            alpha=1e-5,
            T=15,
            extra_iters=30,
            sweep=tuple(mixed(g) for g in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)),
        ),
        "table2": ExperimentPreset(
            name="table2",
            data_spec=SyntheticSpec("radial-norm", "grid-2d", 21, center=(0.1, 0.1)),
            alpha=1e-5,
            T=10,
            extra_iters=25,
            sweep=tuple(PenaltySpec("log", g) for g in (1e-3, 2.5e-2, 1.25e-1, 6.25e-1, 3.12)),
        ),
        "radial-fidelity": ExperimentPreset(
            name="radial-fidelity",
            data_spec=SyntheticSpec("radial-norm", "grid-2d", 21, center=(0.1, 0.1)),
            alpha=1e-5,  # swept below
            T=10,
            extra_iters=25,
            alphas=(1e-4, 1e-5),
        ),
    }


PRESETS = _presets()


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown experiment preset {name!r} (choose from {', '.join(PRESET_NAMES)})")


def run_experiment(
    name: str,
    seed: int = 0,
    scale: float = 1.0,
    grid_override: int | None = None,
) -> ExperimentResult:
    """Run a preset end to end and return all trained networks.

    ``scale`` shrinks the iteration budget (smoke runs); ``grid_override``
    swaps the sampling resolution (e.g. the 31x31 smoke variant of exp2d).
    """
    preset = get_preset(name)
    data_spec = preset.with_seed(seed)
    if grid_override is not None:
        data_spec = replace(data_spec, n_points=grid_override)
    data = generate(data_spec)
    f_true = true_values(data_spec, data)
    result = ExperimentResult(name=name, seed=seed, data_spec=data_spec, data=data)

    if preset.compare:
        for spec, label in zip(preset.compare, ("l1", "phi")):
            cfg = _algo_config(preset.alpha, spec, preset.T, seed, preset.extra_iters, scale)
            net, report = run_algorithm1(data, cfg)
            result.runs.append(
                RunResult(label, spec, preset.alpha, net, report, rms_error(net, data, f_true))
            )
    elif preset.sweep:
        init = None
        for spec in preset.sweep:
            cfg = _algo_config(preset.alpha, spec, preset.T, seed, preset.extra_iters, scale)
            net, report = run_algorithm1(data, cfg, init=init)
            label = f"gamma={spec.gamma:g}"
            result.runs.append(
                RunResult(label, spec, preset.alpha, net, report, rms_error(net, data, f_true))
            )
            init = net  # warm start the next curvature value
    else:  # radial-fidelity
        w_norm = wnorm_radial_2d(np.asarray(data_spec.center), 4000)
        result.extra["w_norm"] = w_norm
        gaps = []
        spec = PenaltySpec("mixed_log_l1", 1.0)
        for alpha in preset.alphas:
            cfg = _algo_config(alpha, spec, preset.T, seed, preset.extra_iters, scale)
            net, report = run_algorithm1(data, cfg)
            run = RunResult(f"alpha={alpha:g}", spec, alpha, net, report,
                            rms_error(net, data, f_true))
            result.runs.append(run)
            gaps.append(fidelity_gap(net, data.xs, f_true, data.ys, alpha, w_norm))
        result.extra["fidelity_gaps"] = gaps
    return result


def stationarity_summary(result: ExperimentResult, n_samples: int = 10_000, seed: int = 1) -> list[dict]:
    """Certification report for every run of an experiment."""
    out = []
    for run in result.runs:
        rep = check_stationarity(
            run.net, result.data, run.penalty, run.alpha, n_samples=n_samples, seed=seed
        )
        doc = rep.to_dict()
        doc.pop("per_node_residual")
        doc["max_per_node_residual"] = (
            float(rep.per_node_residual.max()) if rep.per_node_residual.size else 0.0
        )
        doc["label"] = run.label
        out.append(doc)
    return out
