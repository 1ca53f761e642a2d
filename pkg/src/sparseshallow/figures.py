"""Matplotlib rendering of fits, node layouts, and dual-variable panels.

Everything renders to files (Agg backend, no display); the CSV/JSON
artifacts stay the primary machine-readable output and the figures mirror
them for quick inspection.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import Dataset
from .loss_dual import DualField, angular_nodes_1d, chart_grid_2d, dual_chart_grid_values
from .geometry import sphere_to_chart
from .network import ShallowNet


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def knot_positions(net: ShallowNet) -> np.ndarray:
    """Spline knots x = -b/a of 1d nodes (inf for the constant neuron)."""
    a, b = net.nodes[:, 0], net.nodes[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a != 0.0, -b / a, np.inf)


def plot_fit_1d(data: Dataset, net: ShallowNet, path, f_true=None):
    """Data scatter, reconstruction, and weighted knot stems (two panels)."""
    order = np.argsort(data.xs[:, 0])
    xs = data.xs[order, 0]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5.6), height_ratios=[1, 2], sharex=True)
    knots = knot_positions(net)
    inside = np.isfinite(knots) & (np.abs(knots) <= 1.5)
    ax0.stem(knots[inside], net.weights[inside], basefmt=" ", markerfmt="C1o", linefmt="C1-")
    ax0.axhline(0.0, color="0.8", lw=0.8)
    ax0.set_ylabel("weight $c_n$")
    ax0.set_title(f"{net.width} nodes")
    ax1.plot(data.xs[:, 0], data.ys, ".", ms=2, alpha=0.4, label="data")
    if f_true is not None:
        ax1.plot(xs, np.asarray(f_true)[order], "k-", lw=1, label="target")
    ax1.plot(xs, net.evaluate(data.xs)[order], "C0-", lw=1.5, label="network")
    ax1.plot(knots[inside], np.zeros(inside.sum()), "C1|", ms=10, label="knots")
    ax1.set_xlabel("x")
    ax1.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_dual_1d(net: ShallowNet, data: Dataset, alpha: float, path, n_grid: int = 720):
    """|p| over the angular sphere grid with node markers and the alpha level."""
    field = DualField.from_network(net, data)
    nodes = angular_nodes_1d(n_grid)
    theta = np.arctan2(nodes[:, 1], nodes[:, 0])
    p = field.values(nodes)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(theta, p / alpha, "C0-", lw=1)
    for level in (1.0, -1.0):
        ax.axhline(level, color="0.6", ls="--", lw=0.8)
    node_theta = np.arctan2(net.nodes[:, 1], net.nodes[:, 0])
    ax.plot(node_theta, field.values(net.nodes) / alpha, "C1o", ms=4, label="nodes")
    ax.set_xlabel(r"angle $\theta$")
    ax.set_ylabel(r"$p(\omega)/\alpha$")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def plot_surface_2d(data: Dataset, net: ShallowNet, path):
    """Target and reconstruction heatmaps side by side (grid data only)."""
    k = data.size
    m = int(round(np.sqrt(k)))
    if m * m != k:
        raise ValueError("2d surface plot expects grid data")
    ys = data.ys.reshape(m, m)
    pred = net.evaluate(data.xs).reshape(m, m)
    lim = max(np.abs(ys).max(), np.abs(pred).max())
    fig, axes = plt.subplots(1, 2, figsize=(8.6, 3.6))
    for ax, z, title in ((axes[0], ys, "data"), (axes[1], pred, f"network ({net.width} nodes)")):
        im = ax.imshow(z.T, origin="lower", extent=(-1, 1, -1, 1), vmin=-lim, vmax=lim,
                       cmap="RdBu_r")
        ax.set_title(title)
    fig.colorbar(im, ax=axes, shrink=0.85)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def plot_nodes_2d(net: ShallowNet, path):
    """Node chart positions colored by weight (stereographic projection)."""
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    if net.width:
        z = sphere_to_chart(net.nodes)
        lim = np.abs(net.weights).max()
        sc = ax.scatter(z[:, 0], z[:, 1], c=net.weights, cmap="RdBu_r", vmin=-lim, vmax=lim,
                        s=18, edgecolors="0.4", linewidths=0.4)
        fig.colorbar(sc, ax=ax, shrink=0.85, label="$c_n$")
    ax.set_xlabel("$z_1$")
    ax.set_ylabel("$z_2$")
    ax.set_title(f"{net.width} nodes")
    ax.set_aspect("equal")
    return _finish(fig, path)


def plot_dual_2d(net: ShallowNet, data: Dataset, alpha: float, path,
                 extent: float = 2.5, n_grid: int = 120):
    """|p|/alpha over a chart grid with node positions overlaid."""
    field = DualField.from_network(net, data)
    grid = chart_grid_2d(extent, n_grid)
    vals = dual_chart_grid_values(field, grid).reshape(n_grid, n_grid)
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    im = ax.imshow(np.abs(vals.T) / alpha, origin="lower",
                   extent=(-extent, extent, -extent, extent), cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85, label=r"$|p|/\alpha$")
    if net.width:
        z = sphere_to_chart(net.nodes)
        keep = np.all(np.abs(z) <= extent, axis=1)
        ax.plot(z[keep, 0], z[keep, 1], "r.", ms=4)
    ax.set_xlabel("$z_1$")
    ax.set_ylabel("$z_2$")
    return _finish(fig, path)


def plot_width_trace(report_dicts: list[dict], labels: list[str], path):
    """Width and objective traces across the insertion rounds."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8.4, 3.2))
    for doc, label in zip(report_dicts, labels):
        widths = [r["width_end"] for r in doc["iterations"]]
        objs = [r["objective"] for r in doc["iterations"]]
        ax0.plot(widths, marker=".", label=label)
        ax1.semilogy(objs, marker=".", label=label)
    ax0.set_xlabel("round")
    ax0.set_ylabel("width N")
    ax1.set_xlabel("round")
    ax1.set_ylabel("objective J")
    ax0.legend(fontsize=8)
    return _finish(fig, path)


def render_run_figures(run_dir: Path, data: Dataset, net: ShallowNet, alpha: float,
                       report_doc: dict, f_true=None, label: str = "run") -> list[Path]:
    """Standard figure set for one trained network; returns written paths."""
    run_dir = Path(run_dir)
    out = []
    if data.dim == 1:
        out.append(plot_fit_1d(data, net, run_dir / f"{label}_fit.png", f_true))
        out.append(plot_dual_1d(net, data, alpha, run_dir / f"{label}_dual.png"))
    elif data.dim == 2:
        k = data.size
        m = int(round(np.sqrt(k)))
        if m * m == k:
            out.append(plot_surface_2d(data, net, run_dir / f"{label}_fit.png"))
        out.append(plot_nodes_2d(net, run_dir / f"{label}_nodes.png"))
        out.append(plot_dual_2d(net, data, alpha, run_dir / f"{label}_dual.png"))
    out.append(plot_width_trace([report_doc], [label], run_dir / f"{label}_trace.png"))
    return out
