"""Shallow network container and structural transformations.

A network is a list of sphere nodes ``omega_n = (a_n, b_n)`` with outer
weights ``c_n``, realizing ``x -> sum_n c_n max(a_n . x + b_n, 0)``.  All
transformations return new values; instances are treated as immutable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import augment, feature_matrix

UNIT_TOL = 1e-12
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class ShallowNet:
    """Sphere nodes (N, d+1) and outer weights (N,)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] < 2:
            raise ValueError("nodes must have shape (N, d+1) with d >= 1")
        if weights.shape != (nodes.shape[0],):
            raise ValueError("weights length must match the number of nodes")
        if nodes.shape[0]:
            norms = np.linalg.norm(nodes, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("nodes must lie on the unit sphere")
            if np.any(nodes[:, -1] <= -1.0 + UNIT_TOL):
                raise ValueError("south pole nodes are excluded")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def empty(cls, d: int) -> "ShallowNet":
        return cls(np.zeros((0, d + 1)), np.zeros(0))

    @property
    def width(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1] - 1

    def evaluate(self, x) -> np.ndarray | float:
        """Network value at one point (d,) or a batch (K, d)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if x.ndim == 1:
            if x.shape[0] != self.dim:
                raise ValueError(f"input dim {x.shape[0]} does not match network dim {self.dim}")
            return float(feature_matrix(self.nodes, augment(x[None])) @ self.weights)
        if x.shape[1] != self.dim:
            raise ValueError(f"input dim {x.shape[1]} does not match network dim {self.dim}")
        return feature_matrix(self.nodes, augment(x)) @ self.weights

    def with_weights(self, weights) -> "ShallowNet":
        return ShallowNet(self.nodes, np.asarray(weights, dtype=float))


def normalize_homogeneous(raw_nodes, c) -> ShallowNet:
    """Scale raw nodes onto the sphere, absorbing norms into the weights.

    By positive homogeneity of the ReLU the network function is unchanged:
    ``omega -> omega/|omega|`` and ``c -> c |omega|``.
    """
    raw = np.atleast_2d(np.asarray(raw_nodes, dtype=float))
    c = np.asarray(c, dtype=float)
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero raw node cannot be normalized")
    return ShallowNet(raw / norms[:, None], c * norms)


def prune_zeros(net: ShallowNet) -> ShallowNet:
    """Drop nodes whose weight is exactly 0 (solvers produce exact zeros)."""
    keep = net.weights != 0.0
    if np.all(keep):
        return net
    return ShallowNet(net.nodes[keep], net.weights[keep])


def merge_duplicates(net: ShallowNet, tol: float = 1e-6) -> ShallowNet:
    """Merge nodes within chord distance tol; weights sum, heaviest node wins.

    Greedy clustering seeded at the largest-|c| unclaimed node, so the
    result is deterministic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = net.width
    if n <= 1:
        return net
    order = np.lexsort((np.arange(n), -np.abs(net.weights)))
    used = np.zeros(n, dtype=bool)
    keep_nodes, keep_weights = [], []
    for i in order:
        if used[i]:
            continue
        dists = np.linalg.norm(net.nodes - net.nodes[i], axis=1)
        cluster = (dists <= tol) & ~used
        used |= cluster
        keep_nodes.append(net.nodes[i])
        keep_weights.append(net.weights[cluster].sum())
    return ShallowNet(np.array(keep_nodes), np.array(keep_weights))


def _header(d: int) -> list[str]:
    return [f"a_{i + 1}" for i in range(d)] + ["b", "c"]


def save_network_csv(net: ShallowNet, path):
    """Write nodes as CSV rows ``a_1..a_d, b, c`` at full precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_header(net.dim))
        for row, w in zip(net.nodes, net.weights):
            writer.writerow([FLOAT_FMT % v for v in row] + [FLOAT_FMT % w])


def load_network_csv(path) -> ShallowNet:
    """Read a network CSV written by :func:`save_network_csv`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty network file")
        d = len(header) - 2
        if d < 1 or header != _header(d):
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        return ShallowNet.empty(d)
    arr = np.array(rows)
    return ShallowNet(arr[:, :-1], arr[:, -1])


def save_network_json(net: ShallowNet, path, meta: dict | None = None):
    """JSON mirror of the network plus run metadata (alpha, penalty, seed...)."""
    doc = {
        "d": net.dim,
        "n_nodes": net.width,
        "nodes": net.nodes.tolist(),
        "weights": net.weights.tolist(),
    }
    if meta:
        doc.update(meta)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
