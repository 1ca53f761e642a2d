"""Least-squares loss, residual, and the dual variable on the sphere.

The dual variable of a network/dataset pair is the correlation of a
candidate neuron with the current residual,

    p(omega) = (1/K) sum_k max(omega . (x_k, 1), 0) * g_k,

which is also the partial derivative of the loss with respect to a fresh
outer weight placed at omega.  Node insertion and the stationarity
certificates are driven entirely by this field.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .geometry import augment, chart_preactivations, feature_matrix
from .network import ShallowNet


def residual(net: ShallowNet, data: Dataset) -> np.ndarray:
    """g_k = N(x_k) - y_k."""
    if net.dim != data.dim:
        raise ValueError(f"network dim {net.dim} does not match data dim {data.dim}")
    return net.evaluate(data.xs) - data.ys


def loss_value(net: ShallowNet, data: Dataset) -> float:
    """(1/2K) sum_k g_k^2."""
    g = residual(net, data)
    return 0.5 * float(g @ g) / data.size


class DualField:
    """Evaluator of p(omega) and its chart gradient for a fixed residual.

    Immutable once built; all evaluations are pure and may run batched.
    """

    def __init__(self, data: Dataset, g: np.ndarray):
        g = np.asarray(g, dtype=float)
        if g.shape != (data.size,):
            raise ValueError("residual length must equal the number of data points")
        self.data = data
        self.g = g
        self.x_aug = augment(data.xs)
        self._coef = g / data.size

    @classmethod
    def from_network(cls, net: ShallowNet, data: Dataset) -> "DualField":
        return cls(data, residual(net, data))

    def values(self, nodes: np.ndarray) -> np.ndarray:
        """p at a stack of sphere nodes (M, d+1)."""
        return feature_matrix(np.atleast_2d(nodes), self.x_aug).T @ self._coef

    def values_chart(self, z_pts: np.ndarray) -> np.ndarray:
        """p at a stack of chart points (M, d)."""
        u, _ = chart_preactivations(z_pts, self.x_aug)
        return np.maximum(u, 0.0).T @ self._coef

    def values_and_grads_chart(self, z_pts: np.ndarray):
        """Batched ``(p, grad_z p)`` at chart points (M, d).

        The gradient uses the subgradient value 0 on inactive data, matching
        :func:`sparseshallow.geometry.feature_grad_chart`.
        """
        z_pts = np.atleast_2d(z_pts)
        u, s = chart_preactivations(z_pts, self.x_aug)
        active = u > 0.0
        feats = np.where(active, u, 0.0)
        p = feats.T @ self._coef
        gm = active.T * self._coef[None, :]           # (M, K)
        t0 = gm.sum(axis=1)                           # (1/K) sum_k g_k [active]
        t1 = gm @ self.data.xs                        # (M, d)
        grads = (2.0 / s)[:, None] * (t1 - (t0 + p)[:, None] * z_pts)
        return p, grads


def dual_value(field: DualField, node) -> float:
    """p at a single sphere node."""
    return float(field.values(np.asarray(node, dtype=float)[None, :])[0])


def dual_grad_chart(field: DualField, z) -> np.ndarray:
    """Gradient of ``z -> p(omega(z))`` at a single chart point."""
    _, grads = field.values_and_grads_chart(np.asarray(z, dtype=float)[None, :])
    return grads[0]


def outer_gradient(net: ShallowNet, data: Dataset) -> np.ndarray:
    """Loss gradient in the outer weights: component n equals p(omega_n)."""
    field = DualField.from_network(net, data)
    return field.values(net.nodes)


def dual_chart_grid_values(field: DualField, z_grid: np.ndarray) -> np.ndarray:
    """p over a user grid of chart points, for CSV export / plotting."""
    out = np.empty(z_grid.shape[0])
    step = max(1, int(2**22 // max(field.data.size, 1)))
    for i in range(0, z_grid.shape[0], step):
        out[i : i + step] = field.values_chart(z_grid[i : i + step])
    return out


def dual_sphere_max(field: DualField, nodes: np.ndarray, chunk: int = 2048) -> float:
    """max |p| over a stack of sphere nodes, evaluated in chunks."""
    best = 0.0
    for i in range(0, nodes.shape[0], chunk):
        vals = field.values(nodes[i : i + chunk])
        if vals.size:
            best = max(best, float(np.max(np.abs(vals))))
    return best


def angular_nodes_1d(n: int) -> np.ndarray:
    """n sphere nodes (cos t, sin t) on S^1 with t uniform in [-pi, pi)."""
    theta = -np.pi + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def chart_grid_2d(extent: float, n: int) -> np.ndarray:
    """Square chart grid over [-extent, extent]^2, row-major."""
    side = np.linspace(-extent, extent, n)
    g1, g2 = np.meshgrid(side, side, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


__all__ = [
    "DualField",
    "residual",
    "loss_value",
    "dual_value",
    "dual_grad_chart",
    "outer_gradient",
    "dual_chart_grid_values",
    "dual_sphere_max",
    "angular_nodes_1d",
    "chart_grid_2d",
]
