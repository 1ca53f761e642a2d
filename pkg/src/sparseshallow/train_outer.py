"""Outer-weight solvers at fixed nodes.

The penalized objective splits as ``F(c) + alpha * |c|_1`` with the smooth
(C^2) part

    F(c) = (1/2K) |A c - y|^2 + alpha * sum_n [phi(|c_n|) - |c_n|],

where ``A`` is the dense ReLU design matrix.  Two solvers are provided: a
backtracked proximal gradient method, and a second-order method that
drives the normal-map stationarity residual

    grad F(S_lam(q)) + (alpha/lam) (q - S_lam(q)) = 0,   q = c - (lam/alpha) grad F(c)

to machine precision.  The second-order method runs semi-smooth Newton on
the active set, globalized by exact coordinate-descent sweeps; when the
problem itself is degenerate it switches to proximal-point iterations
(Tikhonov center at the current iterate), whose subproblems are strongly
convex.  Degeneracy is the normal state here: the ReLU dictionary carries
exact linear dependencies (antipodal node pairs plus the constant neuron
span the affine functions), so active Hessian blocks are singular and,
under a concave penalty, indefinite.  Both solvers produce exact zeros,
which is what reliably extracts redundant nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .geometry import augment, feature_matrix
from .network import ShallowNet
from .penalty import (
    PenaltySpec,
    phi_derivative,
    phi_second_derivative,
    soft_threshold,
    total_penalty,
)


@dataclass(frozen=True)
class OuterSolveConfig:
    max_iters: int = 2000
    prox_step_init: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    prox_tol: float = 1e-9
    normal_map_tol: float = 1e-10
    newton_max_iters: int = 40
    cd_sweeps: int = 60
    prox_point_max: int = 400
    lam: float | None = None  # None: min(1, 0.5/gamma, alpha/L)

    def __post_init__(self):
        if min(self.prox_tol, self.normal_map_tol, self.prox_step_init) <= 0:
            raise ValueError("tolerances and steps must be positive")

    def lam_for(self, spec: PenaltySpec, alpha: float, lip: float) -> float:
        """Normal-map parameter; must satisfy ``lam * gamma < 1``.

        The default scales with ``alpha / L`` so that ``q = c - (lam/alpha)
        grad F(c)`` is a unit prox-gradient base point; with an alpha-free
        lam the map amplifies every residual by 1/alpha, which makes warm
        starts and the active-set test ``|q| > lam`` meaningless for small
        alpha.
        """
        if self.lam is not None:
            if self.lam * spec.curvature >= 1.0:
                raise ValueError("normal-map lam must satisfy lam * gamma < 1")
            return self.lam
        g = spec.curvature
        lam = 1.0 if g == 0.0 else min(1.0, 0.5 / g)
        if lip > 0:
            lam = min(lam, alpha / lip)
        return lam


class _OuterProblem:
    """Cached design-matrix quantities for one (nodes, data) pair."""

    def __init__(self, a_mat: np.ndarray, y: np.ndarray, spec: PenaltySpec, alpha: float):
        self.a = a_mat
        self.y = y
        self.k = y.shape[0]
        self.spec = spec
        self.alpha = alpha
        self._h: np.ndarray | None = None

    @classmethod
    def from_network(cls, net: ShallowNet, data: Dataset, spec: PenaltySpec, alpha: float):
        return cls(feature_matrix(net.nodes, augment(data.xs)), data.ys, spec, alpha)

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def h(self) -> np.ndarray:
        """(1/K) A^T A, built on first second-order use."""
        if self._h is None:
            self._h = self.a.T @ self.a / self.k
        return self._h

    def loss(self, c: np.ndarray) -> float:
        r = self.a @ c - self.y
        return 0.5 * float(r @ r) / self.k

    def objective(self, c: np.ndarray) -> float:
        return self.loss(c) + self.alpha * total_penalty(self.spec, c)

    def grad_loss(self, c: np.ndarray) -> np.ndarray:
        # evaluated through the residual so it matches the dual-variable path
        return self.a.T @ ((self.a @ c - self.y) / self.k)

    def grad_smooth(self, c: np.ndarray) -> np.ndarray:
        """grad F; the penalty bracket vanishes at c_n = 0 since phi'(0) = 1."""
        out = self.grad_loss(c)
        if self.spec.kind != "l1":
            out = out + self.alpha * (phi_derivative(self.spec, np.abs(c)) - 1.0) * np.sign(c)
        return out

    def kkt_vector(self, c: np.ndarray, grad_loss: np.ndarray | None = None) -> np.ndarray:
        """Stationarity residual: support equation on c_n != 0, bound violation at 0.

        This is the normal-map residual at the rebased base point expressed
        in gradient units.
        """
        g = self.grad_loss(c) if grad_loss is None else grad_loss
        return _kkt_from_grad(self.spec, self.alpha, c, g)


class _TikhonovProblem:
    """Proximal-point subproblem: the base objective plus ``tau/2 |c - center|^2``."""

    def __init__(self, base: _OuterProblem, tau: float):
        self.base = base
        self.spec = base.spec
        self.alpha = base.alpha
        self.k = base.k
        self.tau = tau
        self.center = np.zeros(base.n)
        self._h = base.h + tau * np.eye(base.n)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def h(self) -> np.ndarray:
        return self._h

    def set_tau(self, tau: float):
        self._h[np.diag_indices_from(self._h)] += tau - self.tau
        self.tau = tau

    def grad_loss(self, c: np.ndarray) -> np.ndarray:
        return self.base.grad_loss(c) + self.tau * (c - self.center)

    def objective(self, c: np.ndarray) -> float:
        d = c - self.center
        return self.base.objective(c) + 0.5 * self.tau * float(d @ d)

    def kkt_vector(self, c: np.ndarray, grad_loss: np.ndarray | None = None) -> np.ndarray:
        g = self.grad_loss(c) if grad_loss is None else grad_loss
        return _kkt_from_grad(self.spec, self.alpha, c, g)


def _kkt_from_grad(spec: PenaltySpec, alpha: float, c: np.ndarray, g: np.ndarray) -> np.ndarray:
    on = c != 0.0
    out = np.empty_like(c)
    out[~on] = np.maximum(np.abs(g[~on]) - alpha, 0.0)
    if np.any(on):
        s = np.sign(c[on])
        out[on] = g[on] + alpha * phi_derivative(spec, np.abs(c[on])) * s
    return out


def smooth_part_grad(net: ShallowNet, data: Dataset, spec: PenaltySpec, alpha: float, c) -> np.ndarray:
    """Gradient of the smooth split F at outer weights c."""
    prob = _OuterProblem.from_network(net, data, spec, alpha)
    return prob.grad_smooth(np.asarray(c, dtype=float))


def _prox_grad(prob: _OuterProblem, c0: np.ndarray, cfg: OuterSolveConfig, tol: float,
               max_iters: int | None = None):
    """Backtracked proximal gradient on F + alpha |c|_1."""
    c = c0.copy()
    obj = prob.objective(c)
    eta = cfg.prox_step_init
    converged = False
    iters = 0
    res = np.inf
    for iters in range(1, (max_iters or cfg.max_iters) + 1):
        grad = prob.grad_smooth(c)
        while True:
            c_new = soft_threshold(prob.alpha * eta, c - eta * grad)
            delta = c_new - c
            obj_new = prob.objective(c_new)
            if obj_new <= obj - cfg.armijo_slope / eta * float(delta @ delta):
                break
            eta *= cfg.armijo_shrink
            if eta < 1e-18:
                return c, {"iterations": iters, "residual": res, "converged": False,
                           "objective": obj, "reason": "step underflow"}
        res = float(np.linalg.norm(delta)) / eta
        c, obj = c_new, obj_new
        eta = min(eta * 2.0, 1e6)
        if res <= tol:
            converged = True
            break
    return c, {"iterations": iters, "residual": res, "converged": converged, "objective": obj}


def prox_grad_outer(
    net: ShallowNet,
    data: Dataset,
    spec: PenaltySpec,
    alpha: float,
    cfg: OuterSolveConfig | None = None,
    c0=None,
):
    """Solve the outer problem by proximal gradient descent.

    Returns ``(c, diagnostics)``; the objective is nonincreasing across
    accepted steps and the prox-gradient residual at exit is reported.
    """
    cfg = cfg or OuterSolveConfig()
    prob = _OuterProblem.from_network(net, data, spec, alpha)
    c0 = net.weights.copy() if c0 is None else np.asarray(c0, dtype=float).copy()
    c, diag = _prox_grad(prob, c0, cfg, cfg.prox_tol)
    diag["support_size"] = int(np.count_nonzero(c))
    return c, diag


def _make_scalar_prox(spec: PenaltySpec):
    """Scalar prox of ``lam * phi`` as a plain-float closure for tight loops."""
    kind = spec.kind
    if kind == "l1":
        def prox(lam, rho):
            a = abs(rho) - lam
            return math.copysign(a, rho) if a > 0.0 else 0.0
    elif kind == "log":
        g = spec.gamma

        def prox(lam, rho):
            a = abs(rho)
            if a <= lam:
                return 0.0
            t = g * a - 1.0
            disc = math.sqrt(t * t + 4.0 * g * (a - lam))
            out = (t + disc) / (2.0 * g) if t >= 0.0 else 2.0 * (a - lam) / (disc - t)
            return math.copysign(out, rho)
    elif kind == "mcp":
        g = spec.gamma

        def prox(lam, rho):
            a = abs(rho)
            if a <= lam:
                return 0.0
            if a >= 1.0 / g:
                return rho
            return math.copysign((a - lam) / (1.0 - lam * g), rho)
    else:  # mixed_log_l1 reduces to the log prox with shifted arguments
        g2 = 2.0 * spec.gamma

        def prox(lam, rho):
            a = abs(rho)
            if a <= lam:
                return 0.0
            lam2 = 0.5 * lam
            ash = a - lam2
            t = g2 * ash - 1.0
            disc = math.sqrt(t * t + 4.0 * g2 * (ash - lam2))
            out = (t + disc) / (2.0 * g2) if t >= 0.0 else 2.0 * (ash - lam2) / (disc - t)
            return math.copysign(out, rho)

    return prox


def _cd_sweeps(prob, c: np.ndarray, max_sweeps: int, delta_tol: float):
    """Cyclic coordinate descent with the exact scalar prox.

    Each coordinate solves its one-dimensional penalized problem exactly,
    so a fixed point satisfies the per-node stationarity conditions by
    construction.  The running loss gradient is updated incrementally and
    refreshed from the design matrix every few sweeps.
    """
    h = prob.h
    hdiag = np.diag(h).copy()
    alpha = prob.alpha
    dead = hdiag <= 1e-14  # feature vanishes on the data: weight is free, pin to 0
    c[dead] = 0.0
    grad = prob.grad_loss(c)
    scalar_prox = _make_scalar_prox(prob.spec)
    curv = prob.spec.curvature
    order = [int(i) for i in np.flatnonzero(~dead)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        delta_max = 0.0
        for idx in order:
            hd = hdiag[idx]
            lam_n = alpha / hd
            if lam_n * curv >= 1.0:
                continue  # scalar prox not single-valued at this scale; leave as is
            c_new = scalar_prox(lam_n, c[idx] - grad[idx] / hd)
            d = c_new - c[idx]
            if d != 0.0:
                grad += h[:, idx] * d
                c[idx] = c_new
                delta_max = max(delta_max, abs(d))
        if sweeps % 5 == 0:
            grad = prob.grad_loss(c)  # kill incremental drift
        if delta_max <= delta_tol:
            break
    return c, sweeps


def _newton_direction(prob, grad_loss, c, signs, act_idx, shift: float, mode: str):
    """Newton direction for the support equation restricted to the active set.

    Solves ``(H_SS + alpha diag(phi'') + shift I) dc_S = -R_S`` with
    ``R_S = grad loss_S + alpha phi'(|c_S|) signs_S``.  ``mode`` picks the
    factorization: ``"chol"`` (returns None if not positive definite) or
    ``"lstsq"`` (minimum norm, for consistent singular systems).
    """
    alpha = prob.alpha
    r_s = grad_loss[act_idx] + alpha * phi_derivative(prob.spec, np.abs(c[act_idx])) * signs[act_idx]
    j = prob.h[np.ix_(act_idx, act_idx)].copy()
    curv = np.atleast_1d(phi_second_derivative(prob.spec, np.abs(c[act_idx])))
    j[np.diag_indices_from(j)] += alpha * curv + shift
    if mode == "lstsq":
        dc_s, *_ = np.linalg.lstsq(j, -r_s, rcond=None)
        return dc_s
    try:
        l_f = np.linalg.cholesky(j)
    except np.linalg.LinAlgError:
        return None
    return np.linalg.solve(l_f.T, np.linalg.solve(l_f, -r_s))


def _newton_cd_loop(prob, c: np.ndarray, cfg: OuterSolveConfig, tol: float, budget: int):
    """Active-set Newton with sign-projected line search, CD on rejection.

    Steps are accepted by Armijo decrease of the (sub)problem objective;
    the stationarity residual is only the stopping criterion.  Candidate
    steps include the zero crossings of the Newton direction, so support
    changes happen at exact breakpoints.  Returns ``(c, res_inf,
    iterations)``.
    """
    scale = float(np.max(np.diag(prob.h))) if prob.n else 1.0
    delta_tol = 0.01 * tol / max(scale, 1e-12)
    grad_loss = prob.grad_loss(c)
    kkt = prob.kkt_vector(c, grad_loss)
    res_inf = float(np.max(np.abs(kkt))) if kkt.size else 0.0
    obj = prob.objective(c)
    alpha = prob.alpha
    if prob.spec.kind == "l1":
        attempts = (("chol", 0.0), ("lstsq", 0.0), ("chol", 1e-10 * scale), ("chol", 1e-6 * scale))
    else:
        # the alpha*gamma shift compensates the concave curvature exactly,
        # leaving a positive semidefinite block
        psd_shift = alpha * prob.spec.curvature + 1e-12 * scale
        attempts = (("chol", 0.0), ("chol", psd_shift), ("chol", 1e-6 * scale), ("chol", 1e-3 * scale))
    stalls = 0
    iters = 0
    while res_inf > tol and iters < budget:
        iters += 1
        on = c != 0.0
        violated = ~on & (np.abs(grad_loss) > alpha)
        act_idx = np.flatnonzero(on | violated)
        signs = np.where(on, np.sign(c), -np.sign(grad_loss))
        accepted = False
        if act_idx.size:
            for mode, shift in attempts:
                dc_s = _newton_direction(
                    prob, grad_loss, c, signs, act_idx, shift, mode,
                )
                if dc_s is None:
                    continue
                r_s = grad_loss[act_idx] + alpha * phi_derivative(
                    prob.spec, np.abs(c[act_idx])
                ) * signs[act_idx]
                slope = float(r_s @ dc_s)
                if slope >= 0.0:
                    continue  # not a descent direction (inconsistent lstsq)
                dc = np.zeros_like(c)
                dc[act_idx] = dc_s
                bps = [
                    float(-c[i] / dc[i])
                    for i in act_idx
                    if c[i] != 0.0 and dc[i] != 0.0 and 0.0 < -c[i] / dc[i] < 1.0
                ]
                thetas = [1.0] + sorted(bps, reverse=True)[:16] + [0.5**k for k in range(1, 16)]
                slack = 1e-16 * (1.0 + abs(obj))  # let fp-tied endgame steps through
                for theta in thetas:
                    c_try = c + theta * dc
                    flipped = np.sign(c_try) * signs < 0
                    c_try[flipped] = 0.0  # zero crossings leave the support exactly
                    obj_try = prob.objective(c_try)
                    if obj_try <= obj + cfg.armijo_slope * theta * slope + slack:
                        c, obj = c_try, obj_try
                        accepted = True
                        break
                if accepted:
                    break
        if not accepted:
            c, _ = _cd_sweeps(prob, c, max(10, cfg.cd_sweeps // 3), delta_tol)
            obj_new = prob.objective(c)
            if obj_new >= obj - 1e-16 * (1.0 + abs(obj)):
                stalls += 1
            else:
                stalls = 0
            obj = obj_new
        grad_loss = prob.grad_loss(c)
        kkt = prob.kkt_vector(c, grad_loss)
        res_inf = float(np.max(np.abs(kkt)))
        if stalls >= 3:
            break
    return c, res_inf, iters


def ssn_outer(
    net: ShallowNet,
    data: Dataset,
    spec: PenaltySpec,
    alpha: float,
    cfg: OuterSolveConfig | None = None,
    c0=None,
    tol: float | None = None,
    robust: bool = True,
):
    """Second-order outer solve to machine-tight stationarity.

    First tries the active-set semi-smooth Newton loop directly (fast for
    well-conditioned supports, e.g. the concave penalties' sparse
    solutions).  If the residual stalls above ``tol`` and ``robust`` is
    set, the solver switches to proximal-point iterations: each subproblem
    carries a Tikhonov term ``tau/2 |c - c_k|^2``, which makes it strongly
    convex regardless of the dictionary's exact degeneracies, and ``tau``
    is annealed so the original residual converges.  ``robust=False``
    skips that phase; the l1 problem sits on flat solution facets, and the
    proximal-point path walks them toward consolidated supports, which is
    unwanted between insertion rounds.  Returns ``(c, diagnostics)`` with
    exact zeros in ``c``.
    """
    cfg = cfg or OuterSolveConfig()
    tol = cfg.normal_map_tol if tol is None else tol
    prob = _OuterProblem.from_network(net, data, spec, alpha)
    c = net.weights.copy() if c0 is None else np.asarray(c0, dtype=float).copy()
    if not c.size:
        return c, {"iterations": 0, "residual": 0.0, "converged": True, "prox_point_iters": 0,
                   "objective": prob.objective(c), "support_size": 0}

    scale = float(np.max(np.diag(prob.h)))
    delta_tol = 0.01 * tol / max(scale, 1e-12)
    c, _ = _cd_sweeps(prob, c, cfg.cd_sweeps, delta_tol)
    c, res_inf, iters = _newton_cd_loop(prob, c, cfg, tol, cfg.newton_max_iters)

    pp_iters = 0
    if res_inf > tol and robust:
        # proximal-point phase for the degenerate case: subproblems are
        # solved inexactly (tolerance tied to the current residual and tau),
        # tau shrinks after a solved subproblem and grows when one resists
        tau = max(1e-4 * scale, 4.0 * alpha * spec.curvature, 1e-14)
        sub = _TikhonovProblem(prob, tau)
        res = res_inf
        failures = 0
        for pp_iters in range(1, cfg.prox_point_max + 1):
            sub.center = c.copy()
            sub_tol = max(min(0.3 * res, 1e3 * sub.tau), 0.02 * tol)
            c_new, res_sub, it_sub = _newton_cd_loop(sub, c.copy(), cfg, sub_tol, 150)
            iters += it_sub
            if res_sub <= sub_tol:
                failures = 0
                c = c_new
                res = float(np.max(np.abs(prob.kkt_vector(c))))
                if res <= tol:
                    break
                sub.set_tau(max(sub.tau * 0.2, 4.0 * alpha * spec.curvature, 1e-13 * scale))
            else:
                failures += 1
                if failures >= 8:
                    break  # subproblems resist even with large tau
                sub.set_tau(min(sub.tau * 10.0, 1e-1 * scale))
        res_inf = res

    diag = {
        "iterations": iters,
        "residual": res_inf,
        "converged": bool(res_inf <= tol),
        "prox_point_iters": pp_iters,
        "objective": prob.objective(c),
        "support_size": int(np.count_nonzero(c)),
    }
    return c, diag
