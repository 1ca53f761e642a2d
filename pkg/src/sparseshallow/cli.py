"""Command-line front end.

Verbs: ``train`` (config-driven single run), ``experiment`` (reference
presets), ``check`` (stationarity / representer / fidelity certificates),
``export-dual`` (dual-variable grids for external plotting), and
``generate-data`` (synthetic dataset CSVs).  Errors go to stderr with a
one-line diagnostic and a nonzero exit code; artifacts go to files only.
Figures (PNG) are rendered next to the delimited output unless
``--no-figures`` is given.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import click
import numpy as np

from . import analysis, data as data_mod, figures, loss_dual, presets
from .geometry import sphere_to_chart
from .insertion import InsertionConfig
from .network import ShallowNet, load_network_csv, save_network_csv, save_network_json
from .penalty import PenaltySpec
from .train_full import AlgorithmConfig, run_algorithm1

FLOAT_FMT = "%.17g"


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(1)


def _limit_threads(threads: int | None):
    if threads is None:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(threads).__enter__()
    except ImportError:  # no-op without the helper; determinism holds per thread cap
        pass


def _write_csv(path: Path, header: list[str], rows):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([FLOAT_FMT % v if isinstance(v, float) else v for v in row])


def _penalty_from(kind: str, gamma: float | None) -> PenaltySpec:
    return PenaltySpec(kind, gamma if kind != "l1" else None)


def _dataset_from_config(doc: dict) -> tuple[data_mod.Dataset, data_mod.SyntheticSpec | None]:
    src = doc.get("dataset")
    if not isinstance(src, dict):
        raise ValueError("config needs a 'dataset' object")
    if "csv" in src:
        return data_mod.load_csv(src["csv"]), None
    if "synthetic" in src:
        s = src["synthetic"]
        spec = data_mod.SyntheticSpec(
            target=s["target"],
            sampling=s["sampling"],
            n_points=int(s["n_points"]),
            noise_sigma=float(s.get("noise_sigma", 0.0)),
            seed=int(s.get("seed", 0)),
            center=tuple(s.get("center", (0.1, 0.1))),
        )
        return data_mod.generate(spec), spec
    raise ValueError("dataset must provide either 'csv' or 'synthetic'")


@click.group()
@click.option("--threads", type=int, default=None, help="Cap BLAS worker threads.")
def main(threads):
    """Sparse shallow ReLU network training and certification."""
    _limit_threads(threads)


@main.command()
@click.option("--config", "config_path", type=click.Path(), required=True,
              help="JSON run configuration.")
@click.option("--alpha", type=float, default=None, help="Override penalty weight.")
@click.option("--gamma", type=float, default=None, help="Override penalty curvature.")
@click.option("--penalty", "penalty_kind", default=None,
              type=click.Choice(["l1", "log", "mcp", "mixed_log_l1"]),
              help="Override penalty kind.")
@click.option("--n-trial", type=int, default=None, help="Override trial nodes per round.")
@click.option("--seed", type=int, default=None, help="Override algorithm seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Override output dir.")
@click.option("--figures/--no-figures", "render", default=True, show_default=True,
              help="Render PNG figures next to the CSV output.")
def train(config_path, alpha, gamma, penalty_kind, n_trial, seed, out_dir, render):
    """Run the insertion/training loop from a JSON config."""
    try:
        doc = json.loads(Path(config_path).read_text())
    except FileNotFoundError:
        raise _fail(f"config file not found: {config_path}")
    except json.JSONDecodeError as exc:
        raise _fail(f"malformed config {config_path}: {exc}")
    try:
        dataset, synth = _dataset_from_config(doc)
        pen_doc = doc.get("penalty", {"kind": "l1"})
        spec = PenaltySpec.from_json_dict(pen_doc)
        if penalty_kind is not None or gamma is not None:
            spec = _penalty_from(penalty_kind or spec.kind,
                                 gamma if gamma is not None else spec.gamma)
        algo = doc.get("algorithm", {})
        cfg = AlgorithmConfig(
            alpha=float(alpha if alpha is not None else doc.get("alpha", 1e-4)),
            penalty=spec,
            T=int(algo.get("T", 15)),
            max_extra_iters=int(algo.get("max_extra_iters", 0)),
            joint_epochs=int(algo.get("joint_epochs", 200)),
            insertion=InsertionConfig(
                n_trial=int(n_trial if n_trial is not None else algo.get("n_trial", 50)),
                seed=int(seed if seed is not None else algo.get("seed", 0)),
            ),
            seed=int(seed if seed is not None else algo.get("seed", 0)),
        )
        out = Path(out_dir if out_dir is not None else doc.get("out", "."))
    except (KeyError, TypeError, ValueError) as exc:
        raise _fail(str(exc))
    except FileNotFoundError as exc:
        raise _fail(str(exc))

    out.mkdir(parents=True, exist_ok=True)
    net, report = run_algorithm1(dataset, cfg)

    save_network_csv(net, out / "network.csv")
    save_network_json(
        net, out / "network.json",
        meta={"alpha": cfg.alpha, "penalty": spec.to_json_dict(), "seed": cfg.seed},
    )
    (out / "report.json").write_text(report.to_json() + "\n")
    pred = net.evaluate(dataset.xs)
    pred = np.atleast_1d(pred)
    _write_csv(
        out / "predictions.csv",
        [f"x_{i + 1}" for i in range(dataset.dim)] + ["y", "prediction"],
        [list(map(float, x)) + [float(y), float(p)]
         for x, y, p in zip(dataset.xs, dataset.ys, pred)],
    )
    if render:
        f_true = data_mod.true_values(synth, dataset) if synth is not None else None
        figures.render_run_figures(out, dataset, net, cfg.alpha, report.to_dict(), f_true)
    click.echo(f"trained: width {net.width}, loss {report.final['loss']:.6g}, "
               f"artifacts in {out}")


@main.command()
@click.argument("name")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="experiments", show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Iteration budget multiplier (smoke runs).")
@click.option("--grid", "grid_override", type=int, default=None,
              help="Override grid resolution (e.g. 31 for the exp2d smoke).")
@click.option("--figures/--no-figures", "render", default=True, show_default=True)
def experiment(name, seed, out_dir, scale, grid_override, render):
    """Run a reference experiment preset (fig1, exp1d, exp2d, table1, table2,
    radial-fidelity)."""
    try:
        result = presets.run_experiment(name, seed=seed, scale=scale,
                                        grid_override=grid_override)
    except KeyError as exc:
        raise _fail(str(exc.args[0]))
    out = Path(out_dir) / f"{name}_seed{seed}"
    out.mkdir(parents=True, exist_ok=True)

    data_mod.save_csv(result.data, out / "dataset.csv")
    rows = []
    for run in result.runs:
        stem = run.label.replace("=", "_")
        save_network_csv(run.net, out / f"network_{stem}.csv")
        save_network_json(
            run.net, out / f"network_{stem}.json",
            meta={"alpha": run.alpha, "penalty": run.penalty.to_json_dict(), "seed": seed},
        )
        (out / f"report_{stem}.json").write_text(run.report.to_json() + "\n")
        rows.append(run)

    preset = presets.get_preset(name)
    if preset.sweep:
        _write_csv(out / "summary.csv", ["gamma", "nodes", "error"],
                   [[float(r.penalty.gamma), r.net.width, r.error] for r in rows])
    elif preset.compare:
        _write_csv(out / "summary.csv", ["penalty", "nodes", "error"],
                   [[r.label, r.net.width, r.error] for r in rows])
    else:
        gaps = result.extra["fidelity_gaps"]
        _write_csv(out / "summary.csv",
                   ["alpha", "nodes", "error", "w_norm", "fidelity_gap"],
                   [[r.alpha, r.net.width, r.error, result.extra["w_norm"], g]
                    for r, g in zip(rows, gaps)])
    summary = {
        "name": name,
        "seed": seed,
        "data": asdict(result.data_spec),
        "runs": [r.summary() for r in rows],
        "extra": result.extra,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    if render:
        f_true = data_mod.true_values(result.data_spec, result.data)
        for run in rows:
            stem = run.label.replace("=", "_")
            figures.render_run_figures(out, result.data, run.net, run.alpha,
                                       run.report.to_dict(), f_true, label=stem)
        figures.plot_width_trace([r.report.to_dict() for r in rows],
                                 [r.label for r in rows], out / "width_trace.png")
    click.echo(f"experiment {name}: " + "; ".join(
        f"{r.label}: N={r.net.width}, err={r.error:.4g}" for r in rows))
    click.echo(f"artifacts in {out}")


@main.command()
@click.argument("network_csv", type=click.Path())
@click.option("--data", "data_csv", type=click.Path(), required=True,
              help="Dataset CSV the network was trained on.")
@click.option("--alpha", type=float, required=True)
@click.option("--penalty", "penalty_kind", default="l1",
              type=click.Choice(["l1", "log", "mcp", "mixed_log_l1"]), show_default=True)
@click.option("--gamma", type=float, default=None)
@click.option("--w-norm", type=float, default=None,
              help="W-norm bound of the target for the fidelity check.")
@click.option("--radial-center", default=None,
              help="Derive the W-norm for the planar distance target, e.g. '0.1,0.1'.")
@click.option("--f-true-csv", type=click.Path(), default=None,
              help="CSV with the noise-free target values (column f).")
@click.option("--n-samples", type=int, default=10_000, show_default=True)
@click.option("--tol", type=float, default=1e-2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def check(network_csv, data_csv, alpha, penalty_kind, gamma, w_norm, radial_center,
          f_true_csv, n_samples, tol, seed):
    """Certify a trained network: stationarity, width bound, fidelity."""
    try:
        net = load_network_csv(network_csv)
        dataset = data_mod.load_csv(data_csv)
        spec = _penalty_from(penalty_kind, gamma)
    except (FileNotFoundError, ValueError) as exc:
        raise _fail(str(exc))

    rep = analysis.check_stationarity(net, dataset, spec, alpha,
                                      n_samples=n_samples, tol=tol, seed=seed)
    width_ok = analysis.representer_check(net, dataset)
    doc = rep.to_dict()
    doc["per_node_residual_max"] = max(doc.pop("per_node_residual"), default=0.0)
    doc["representer_ok"] = width_ok
    doc["width"] = net.width
    doc["n_data"] = dataset.size

    all_ok = rep.passed and width_ok
    if radial_center is not None:
        try:
            center = tuple(float(v) for v in radial_center.split(","))
            w_norm = analysis.wnorm_radial_2d(np.asarray(center), 4000)
        except ValueError as exc:
            raise _fail(f"bad --radial-center: {exc}")
        f_true = np.linalg.norm(dataset.xs - np.asarray(center), axis=1)
        doc["w_norm"] = w_norm
    elif f_true_csv is not None:
        f_true = np.loadtxt(f_true_csv, delimiter=",", skiprows=1, ndmin=1)
    else:
        f_true = None
    if w_norm is not None and f_true is not None:
        gap = analysis.fidelity_gap(net, dataset.xs, f_true, dataset.ys, alpha, w_norm)
        doc["fidelity_gap"] = gap
        all_ok = all_ok and gap <= 0.0

    click.echo(json.dumps(doc, indent=2))
    if not all_ok:
        raise click.exceptions.Exit(2)


@main.command("export-dual")
@click.argument("network_csv", type=click.Path())
@click.option("--data", "data_csv", type=click.Path(), required=True)
@click.option("--grid", "n_grid", type=int, default=360, show_default=True,
              help="Angular points (d=1) or chart grid side (d=2).")
@click.option("--chart-extent", type=float, default=2.5, show_default=True,
              help="Half-width of the chart grid for d=2.")
@click.option("--out", "out_dir", type=click.Path(), default=".", show_default=True)
@click.option("--alpha", type=float, default=None,
              help="Alpha used for the rendered dual panel scaling.")
@click.option("--figures/--no-figures", "render", default=True, show_default=True)
def export_dual(network_csv, data_csv, n_grid, chart_extent, out_dir, alpha, render):
    """Write the dual variable on a grid plus per-node values."""
    try:
        net = load_network_csv(network_csv)
        dataset = data_mod.load_csv(data_csv)
    except (FileNotFoundError, ValueError) as exc:
        raise _fail(str(exc))
    if net.dim != dataset.dim:
        raise _fail(f"network dim {net.dim} does not match data dim {dataset.dim}")
    if net.dim not in (1, 2):
        raise _fail(f"dual export supports d in {{1, 2}}, got d={net.dim}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    field = loss_dual.DualField.from_network(net, dataset)

    if net.dim == 1:
        nodes = loss_dual.angular_nodes_1d(n_grid)
        p = field.values(nodes)
        theta = np.arctan2(nodes[:, 1], nodes[:, 0])
        _write_csv(out / "dual_grid.csv", ["theta", "a_1", "b", "p"],
                   [[float(t), float(w[0]), float(w[1]), float(v)]
                    for t, w, v in zip(theta, nodes, p)])
        p_nodes = field.values(net.nodes) if net.width else np.zeros(0)
        a, b = net.nodes[:, 0], net.nodes[:, 1]
        with np.errstate(divide="ignore"):
            knots = np.where(a != 0.0, -b / a, np.inf)
        _write_csv(out / "dual_nodes.csv", ["a_1", "b", "c", "p", "angle", "knot_x"],
                   [[float(ai), float(bi), float(ci), float(pi),
                     float(np.arctan2(bi, ai)), float(ki)]
                    for ai, bi, ci, pi, ki in zip(a, b, net.weights, p_nodes, knots)])
    else:
        grid = loss_dual.chart_grid_2d(chart_extent, n_grid)
        vals = loss_dual.dual_chart_grid_values(field, grid)
        _write_csv(out / "dual_grid.csv", ["z_1", "z_2", "p"],
                   [[float(z[0]), float(z[1]), float(v)] for z, v in zip(grid, vals)])
        p_nodes = field.values(net.nodes) if net.width else np.zeros(0)
        z_nodes = sphere_to_chart(net.nodes) if net.width else np.zeros((0, 2))
        _write_csv(out / "dual_nodes.csv", ["a_1", "a_2", "b", "c", "p", "z_1", "z_2"],
                   [[float(w[0]), float(w[1]), float(w[2]), float(ci), float(pi),
                     float(z[0]), float(z[1])]
                    for w, ci, pi, z in zip(net.nodes, net.weights, p_nodes, z_nodes)])
    if render and alpha is not None:
        if net.dim == 1:
            figures.plot_dual_1d(net, dataset, alpha, out / "dual.png", n_grid=n_grid)
        else:
            figures.plot_dual_2d(net, dataset, alpha, out / "dual.png",
                                 extent=chart_extent, n_grid=min(n_grid, 160))
    click.echo(f"dual export written to {out}")


@main.command("generate-data")
@click.option("--target", required=True,
              type=click.Choice(sorted(data_mod.TARGET_DIMS)))
@click.option("--sampling", required=True, type=click.Choice(list(data_mod.SAMPLINGS)))
@click.option("--n", "n_points", type=int, required=True,
              help="Sample count (1d) or grid side (2d).")
@click.option("--noise", "noise_sigma", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--center", default="0.1,0.1", show_default=True,
              help="Center of the radial-norm target.")
@click.option("--out", "out_path", type=click.Path(), required=True)
def generate_data(target, sampling, n_points, noise_sigma, seed, center, out_path):
    """Write a synthetic dataset CSV."""
    try:
        center_t = tuple(float(v) for v in center.split(","))
        spec = data_mod.SyntheticSpec(target, sampling, n_points,
                                      noise_sigma=noise_sigma, seed=seed, center=center_t)
    except ValueError as exc:
        raise _fail(str(exc))
    dataset = data_mod.generate(spec)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    data_mod.save_csv(dataset, out_path)
    click.echo(f"wrote {dataset.size} rows to {out_path}")


if __name__ == "__main__":
    main()
