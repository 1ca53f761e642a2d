"""Sphere parameterization and the ReLU feature map.

A node ``omega = (a, b)`` lives on the unit sphere in ``R^(d+1)``; the
neuron it represents is ``x -> max(a . x + b, 0)``.  To optimize node
positions without the norm constraint we parameterize the sphere by the
stereographic chart

    omega(z) = (2 z, 1 - |z|^2) / (1 + |z|^2),      z in R^d,

whose excluded point (the south pole ``(0, -1)``) is the zero neuron.
Functions accept either a single point or a stacked array of points.
"""

from __future__ import annotations

import numpy as np

SOUTH_POLE_TOL = 1e-12


def chart_to_sphere(z) -> np.ndarray:
    """Map chart coordinates (..., d) to sphere nodes (..., d+1)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    r2 = np.sum(z * z, axis=-1, keepdims=True)
    s = 1.0 + r2
    return np.concatenate([2.0 * z, 1.0 - r2], axis=-1) / s


def sphere_to_chart(node) -> np.ndarray:
    """Inverse chart ``z = a / (1 + b)``; fails at the south pole.

    For b < 0 the equivalent form ``a (1 - b) / |a|^2`` (using
    ``|a|^2 = 1 - b^2`` on the sphere) avoids the cancellation in ``1 + b``.
    """
    node = np.atleast_1d(np.asarray(node, dtype=float))
    b = node[..., -1]
    if np.any(b <= -1.0 + SOUTH_POLE_TOL):
        raise ValueError("south pole (0, -1) has no chart coordinates")
    a = node[..., :-1]
    upper = a / (1.0 + np.maximum(b, 0.0))[..., None]
    a2 = np.maximum(np.sum(a * a, axis=-1), SOUTH_POLE_TOL**2)
    lower = a * ((1.0 - b) / a2)[..., None]
    return np.where(b[..., None] >= 0.0, upper, lower)


def augment(x) -> np.ndarray:
    """Append the constant coordinate: (..., d) -> (..., d+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ones = np.ones(x.shape[:-1] + (1,))
    return np.concatenate([x, ones], axis=-1)


def relu_feature(node, x) -> float:
    """Single neuron value ``max(a . x + b, 0)``."""
    node = np.asarray(node, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if node.shape[-1] != x.shape[-1] + 1:
        raise ValueError(f"node dim {node.shape[-1]} does not match input dim {x.shape[-1]}")
    return float(max(node[:-1] @ x + node[-1], 0.0))


def feature_matrix(nodes: np.ndarray, x_aug: np.ndarray) -> np.ndarray:
    """Dense design matrix ``A[k, n] = max(omega_n . (x_k, 1), 0)``."""
    if nodes.shape[0] == 0:
        return np.zeros((x_aug.shape[0], 0))
    return np.maximum(x_aug @ nodes.T, 0.0)


def chart_preactivations(z_pts: np.ndarray, x_aug: np.ndarray):
    """Preactivations ``U[k, m] = omega(z_m) . (x_k, 1)`` plus chart scale.

    Returns ``(U, s)`` where ``s_m = 1 + |z_m|^2``; the feature matrix is
    ``max(U, 0)``.  Works directly from chart coordinates without forming
    the sphere nodes.
    """
    z_pts = np.atleast_2d(z_pts)
    r2 = np.sum(z_pts * z_pts, axis=1)
    s = 1.0 + r2
    # omega . (x, 1) = (2 z . x + 1 - |z|^2) / s
    u = (2.0 * (x_aug[:, :-1] @ z_pts.T) + (1.0 - r2)[None, :]) / s[None, :]
    return u, s


def feature_grad_chart(z, x) -> np.ndarray:
    """Gradient of ``z -> max(omega(z) . (x, 1), 0)`` (0 at and below the kink)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r2 = float(z @ z)
    s = 1.0 + r2
    u = (2.0 * (z @ x) + 1.0 - r2) / s
    if u <= 0.0:
        return np.zeros_like(z)
    return (2.0 / s) * ((x - z) - u * z)


def sample_sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. uniform nodes on S^d, redrawing south-pole-adjacent ones."""
    out = np.empty((n, d + 1))
    need = np.ones(n, dtype=bool)
    while np.any(need):
        m = int(need.sum())
        w = rng.standard_normal((m, d + 1))
        norms = np.linalg.norm(w, axis=1)
        ok = norms > 0
        w[ok] /= norms[ok, None]
        out[need] = w
        # redraw degenerate rows and anything too close to the projection point
        need_idx = np.flatnonzero(need)
        bad = ~ok | (w[:, -1] < -1.0 + 1e-9)
        need = np.zeros(n, dtype=bool)
        need[need_idx[bad]] = True
    return out
