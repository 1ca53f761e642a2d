"""Certificates and diagnostics derived from the optimality theory.

A trained network is certified by two conditions on the dual variable:
``|p| <= alpha`` everywhere on the sphere (checked by sampling plus
multi-start ascent; evidence, not proof) and
``p(omega_n) = -alpha phi'(|c_n|) sign(c_n)`` on the support.  The module
also provides the width bound (at most K nodes), the fidelity gap

    |N - f|^2  <=  2 alpha |f|_W + |y - f|^2     (empirical L2 norms),

a quadrature oracle for the W-norm of the planar distance function (whose
representing measure sits on a great circle), and the inner/outer weight
rebalancing identities behind the all-weights penalty equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .geometry import sample_sphere, sphere_to_chart
from .insertion import InsertionConfig, ascend_dual_batch
from .loss_dual import DualField, dual_sphere_max
from .network import ShallowNet
from .penalty import PenaltySpec, phi_derivative


@dataclass
class StationarityReport:
    max_abs_dual_sampled: float
    max_abs_dual_ascent: float
    per_node_residual: np.ndarray
    n_sphere_samples: int
    alpha: float
    tol: float
    dual_pass: bool
    node_pass: bool

    @property
    def passed(self) -> bool:
        return self.dual_pass and self.node_pass

    def to_dict(self) -> dict:
        return {
            "max_abs_dual_sampled": self.max_abs_dual_sampled,
            "max_abs_dual_ascent": self.max_abs_dual_ascent,
            "per_node_residual": self.per_node_residual.tolist(),
            "n_sphere_samples": self.n_sphere_samples,
            "alpha": self.alpha,
            "tol": self.tol,
            "dual_pass": self.dual_pass,
            "node_pass": self.node_pass,
            "passed": self.passed,
        }


def check_stationarity(
    net: ShallowNet,
    data: Dataset,
    spec: PenaltySpec,
    alpha: float,
    n_samples: int = 10_000,
    tol: float = 1e-2,
    seed: int = 0,
    n_ascent: int = 50,
) -> StationarityReport:
    """Sample |p| on the sphere, run multi-start ascent, check the support.

    Passes iff the sampled/ascended maximum of |p| stays below
    ``alpha (1 + tol)`` and every node residual
    ``|p(omega_n) + alpha phi'(|c_n|) sign c_n|`` is below ``alpha tol``.
    """
    field = DualField.from_network(net, data)
    rng = np.random.default_rng(seed)
    samples = sample_sphere(n_samples, data.dim, rng)
    max_sampled = dual_sphere_max(field, samples)

    max_ascent = 0.0
    if n_ascent > 0:
        z0 = sphere_to_chart(sample_sphere(n_ascent, data.dim, rng))
        cfg = InsertionConfig(n_trial=n_ascent)
        _, p_abs, _ = ascend_dual_batch(field, z0, cfg)
        if p_abs.size:
            max_ascent = float(p_abs.max())

    if net.width:
        p_nodes = field.values(net.nodes)
        target = -alpha * phi_derivative(spec, np.abs(net.weights)) * np.sign(net.weights)
        node_res = np.abs(p_nodes - target)
    else:
        node_res = np.zeros(0)

    dual_pass = max(max_sampled, max_ascent) <= alpha * (1.0 + tol)
    node_pass = bool(np.all(node_res <= alpha * tol))
    return StationarityReport(
        max_abs_dual_sampled=max_sampled,
        max_abs_dual_ascent=max_ascent,
        per_node_residual=node_res,
        n_sphere_samples=n_samples,
        alpha=alpha,
        tol=tol,
        dual_pass=bool(dual_pass),
        node_pass=node_pass,
    )


def representer_check(net: ShallowNet, data: Dataset) -> bool:
    """Width bound for local solutions with K data points: N <= K."""
    return net.width <= data.size


def _circle_nodes(center: np.ndarray, n: int):
    """Great-circle nodes whose kink lines pass through ``center``.

    Parameterized by the planar direction angle: for a unit direction
    ``e(phi)`` the sphere constraint gives ``a = t e``, ``b = -t e .
    center`` with ``t = (1 + (e . center)^2)^(-1/2)``.  A function radial
    around ``center`` is reproduced by the measure ``d phi / (2 |a|)`` on
    this circle, so each of the ``n`` trapezoid nodes carries weight
    ``(2 pi / n) / (2 t)``.
    """
    phi = 2.0 * np.pi * np.arange(n) / n
    e = np.column_stack([np.cos(phi), np.sin(phi)])
    proj = e @ center
    t = 1.0 / np.sqrt(1.0 + proj**2)
    nodes = np.column_stack([t[:, None] * e, -t * proj])
    weights = (2.0 * np.pi / n) / (2.0 * t)
    return nodes, weights


def wnorm_radial_2d(center, n_quad: int = 2000) -> float:
    """Total variation of the great-circle measure representing |x - center|.

    The distance function from a point in the open unit disk is reproduced
    exactly by a measure supported on the great circle of neurons whose
    kink lines pass through ``center``; its mass upper-bounds the W-norm of
    the target on any subdomain.  Trapezoid quadrature with ``n_quad``
    points (the integrand is smooth and periodic).
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (2,):
        raise ValueError("center must be a point in R^2")
    if np.linalg.norm(center) >= 1.0:
        raise ValueError("need |center| < 1 for a nondegenerate great circle")
    if n_quad < 8:
        raise ValueError("need n_quad >= 8")
    _, weights = _circle_nodes(center, n_quad)
    return float(weights.sum())


def radial_circle_network(center, n_nodes: int = 2000) -> ShallowNet:
    """Quadrature discretization of the great-circle measure as a network.

    Evaluates to ``|x - center|`` up to the quadrature error; the sum of
    its |weights| equals ``wnorm_radial_2d(center, n_nodes)`` exactly.
    """
    center = np.asarray(center, dtype=float)
    nodes, weights = _circle_nodes(center, n_nodes)
    return ShallowNet(nodes, weights)


def fidelity_gap(net: ShallowNet, xs, f_values, y_values, alpha: float, w_norm: float) -> float:
    """lhs - rhs of the fidelity bound in the empirical L2 norm.

    ``lhs = (1/K) sum (N(x_k) - f_k)^2`` and
    ``rhs = 2 alpha w_norm + (1/K) sum (y_k - f_k)^2``; a certified local
    solution gives a nonpositive gap.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    f_values = np.asarray(f_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    pred = net.evaluate(xs)
    lhs = float(np.mean((pred - f_values) ** 2))
    rhs = 2.0 * alpha * w_norm + float(np.mean((y_values - f_values) ** 2))
    return lhs - rhs


def equiv_exponent(p: float, q: float) -> float:
    """Effective outer exponent 2pq/(p+q) of the all-weights (p, q) penalty."""
    if p < 1 or q < 1:
        raise ValueError("need p, q >= 1")
    return 2.0 * p * q / (p + q)


def optimal_tau(c_abs: float, p: float, q: float) -> float:
    """Node scale minimizing ``(1/p) |c/tau|^p + (1/q) tau^q`` for c != 0."""
    if c_abs <= 0:
        raise ValueError("need c_abs > 0")
    if p < 1 or q < 1:
        raise ValueError("need p, q >= 1")
    return float(c_abs ** (p / (p + q)))


def balanced_cost(c_abs: float, p: float, q: float) -> float:
    """Value of the rebalanced cost at the optimal scale: (1/p + 1/q) |c|^(pq/(p+q))."""
    return (1.0 / p + 1.0 / q) * c_abs ** (p * q / (p + q))
