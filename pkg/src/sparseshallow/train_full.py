"""Joint (nodes + weights) training and the adaptive insertion loop.

One outer iteration: sample trial nodes, climb |p|, insert violators of
``|p| <= alpha`` with zero weight, run joint proximal-gradient training of
chart coordinates and outer weights, polish the outer weights with the
semi-smooth Newton solver, and drop zero-weight nodes.  The loop runs a
fixed number of times but exits early once nothing is inserted and the
stationarity conditions hold.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import Dataset
from .geometry import chart_to_sphere, sphere_to_chart
from .insertion import InsertionConfig, ascend_dual_batch, sample_trials, select_and_insert
from .loss_dual import DualField, loss_value, residual
from .network import ShallowNet, prune_zeros
from .penalty import PenaltySpec, phi_derivative, soft_threshold, total_penalty
from .train_outer import OuterSolveConfig, ssn_outer


@dataclass(frozen=True)
class AlgorithmConfig:
    alpha: float
    penalty: PenaltySpec
    T: int = 15
    insertion: InsertionConfig = field(default_factory=InsertionConfig)
    outer: OuterSolveConfig = field(default_factory=OuterSolveConfig)
    joint_epochs: int = 200
    joint_step_init: float = 1.0
    joint_tol: float = 1e-9
    stationarity_tol: float = 1e-2
    max_extra_iters: int = 0  # rounds past T while insertion stays active
    verify_trials: int = 200  # ascent starts for the stopping verification
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.T < 1:
            raise ValueError("need T >= 1")


@dataclass
class IterationRecord:
    t: int
    width_start: int
    width_inserted: int
    width_end: int
    objective: float
    loss: float
    penalty: float
    max_trial_dual: float
    inserted: int
    pruned: int
    joint_epochs_run: int = 0
    ssn_iterations: int = 0
    ssn_residual: float = float("nan")


@dataclass
class TrainReport:
    """Per-iteration trace plus final stationarity summary and provenance."""

    iterations: list[IterationRecord] = field(default_factory=list)
    final: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    seed: int = 0
    config: dict = field(default_factory=dict)
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "iterations": [asdict(r) for r in self.iterations],
            "final": self.final,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
            "config": self.config,
            "stopped_early": self.stopped_early,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @property
    def widths(self) -> list[int]:
        return [r.width_end for r in self.iterations]


class _JointState:
    """Training state in chart coordinates with cached epoch quantities."""

    def __init__(self, net: ShallowNet, data: Dataset):
        self.z = sphere_to_chart(net.nodes) if net.width else np.zeros((0, net.dim))
        self.c = net.weights.copy()
        self.x = data.xs
        self.y = data.ys
        self.k = data.size

    def objective_parts(self, z, c, spec: PenaltySpec, alpha: float):
        r2 = np.sum(z * z, axis=1)
        s = 1.0 + r2
        u = (2.0 * (self.x @ z.T) + (1.0 - r2)[None, :]) / s[None, :]
        a_mat = np.maximum(u, 0.0)
        g = a_mat @ c - self.y
        loss = 0.5 * float(g @ g) / self.k
        return loss + alpha * total_penalty(spec, c), loss, (u, s, a_mat, g)


def train_joint(
    net: ShallowNet,
    data: Dataset,
    spec: PenaltySpec,
    alpha: float,
    epochs: int = 200,
    step_init: float = 1.0,
    tol: float = 1e-9,
):
    """Proximal-gradient epochs on all weights (chart nodes + outer weights).

    Each epoch takes a simultaneous step: gradient on the chart coordinates,
    soft-threshold prox on the weights against the l1 part of the split
    objective.  A shared Armijo backtracking keeps the full objective
    nonincreasing.  Returns ``(net, diagnostics)``.
    """
    if net.width == 0 or epochs == 0:
        return net, {"epochs": 0, "converged": True, "objective": loss_value(net, data)}
    st = _JointState(net, data)
    obj, _, cache = st.objective_parts(st.z, st.c, spec, alpha)
    eta = step_init
    converged = False
    epochs_run = 0
    for epochs_run in range(1, epochs + 1):
        u, s, a_mat, g = cache
        coef = g / st.k
        # outer-weight gradient of the smooth split F
        grad_c = a_mat.T @ coef
        if spec.kind != "l1":
            grad_c = grad_c + alpha * (phi_derivative(spec, np.abs(st.c)) - 1.0) * np.sign(st.c)
        # chart gradient of the loss: c_n * grad_z p restricted to node n
        active = u > 0.0
        gm = active.T * coef[None, :]
        t0 = gm.sum(axis=1)
        t1 = gm @ st.x
        p_nodes = np.where(active, u, 0.0).T @ coef
        grad_z = st.c[:, None] * (2.0 / s)[:, None] * (t1 - (t0 + p_nodes)[:, None] * st.z)

        accepted = False
        while eta >= 1e-18:
            c_new = soft_threshold(alpha * eta, st.c - eta * grad_c)
            z_new = st.z - eta * grad_z
            obj_new, _, cache_new = st.objective_parts(z_new, c_new, spec, alpha)
            dc = c_new - st.c
            dz = z_new - st.z
            move = float(dc @ dc) + float(np.sum(dz * dz))
            if obj_new <= obj - 1e-4 / eta * move:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break  # step underflow
        st.c, st.z, obj, cache = c_new, z_new, obj_new, cache_new
        eta = min(eta * 2.0, 1e3)
        if np.sqrt(move) / eta <= tol:
            converged = True
            break
    out = ShallowNet(chart_to_sphere(st.z), st.c)
    return out, {"epochs": epochs_run, "converged": converged, "objective": obj}


def _node_residuals(field: DualField, net: ShallowNet, spec: PenaltySpec, alpha: float) -> np.ndarray:
    """|p(omega_n) + alpha phi'(|c_n|) sign(c_n)| at the support."""
    if net.width == 0:
        return np.zeros(0)
    p = field.values(net.nodes)
    target = -alpha * phi_derivative(spec, np.abs(net.weights)) * np.sign(net.weights)
    return np.abs(p - target)


def run_algorithm1(
    data: Dataset,
    cfg: AlgorithmConfig,
    init: ShallowNet | None = None,
):
    """Iterative node insertion and optimization; returns ``(net, report)``.

    Runs T insertion/training rounds (plus up to ``max_extra_iters`` while
    insertion stays active).  Once a round finds nothing to insert, the
    outer weights get a machine-tight polish and the stop is verified by a
    fresh, larger multi-start round against the polished residual; the
    polish itself moves the dual field, so stopping without that check can
    leave violations behind.  Deterministic for a fixed config: round ``t``
    draws its trials from ``default_rng([seed, t])``.  Solver
    non-convergence is recorded in the report, never raised.
    """
    t_start = time.perf_counter()
    spec = cfg.penalty
    alpha = cfg.alpha
    net = ShallowNet.empty(data.dim) if init is None else init
    if net.dim != data.dim:
        raise ValueError("initial network dimension does not match the data")
    report = TrainReport(seed=cfg.seed, config=_config_dict(cfg))
    polish_tol = min(cfg.outer.normal_map_tol, 1e-7 * alpha)
    final_ssn = {"iterations": 0, "residual": 0.0, "converged": True}
    polished = False

    for t in range(cfg.T + cfg.max_extra_iters):
        width_start = net.width
        g = residual(net, data)
        fld = DualField(data, g)
        rng = np.random.default_rng([cfg.seed, t])
        ins_cfg = cfg.insertion
        if polished:
            # stopping verification round: cover the sphere harder
            ins_cfg = replace(ins_cfg, n_trial=max(cfg.verify_trials, ins_cfg.n_trial))
        z0 = sample_trials(ins_cfg, data.dim, rng=rng)
        z_max, p_abs, _ = ascend_dual_batch(fld, z0, ins_cfg)
        max_trial = float(p_abs.max()) if p_abs.size else 0.0
        net_half = select_and_insert(
            net, z_max, p_abs, alpha, ins_cfg.dedup_tol, max_new=cfg.insertion.n_trial
        )
        inserted = net_half.width - width_start

        rec = IterationRecord(
            t=t,
            width_start=width_start,
            width_inserted=net_half.width,
            width_end=net.width,
            objective=float("nan"),
            loss=float("nan"),
            penalty=float("nan"),
            max_trial_dual=max_trial,
            inserted=inserted,
            pruned=0,
        )

        if inserted == 0:
            node_res = _node_residuals(fld, net, spec, alpha)
            sampled_ok = max_trial <= alpha * (1.0 + 0.5 * cfg.stationarity_tol)
            nodes_ok = bool(np.all(node_res <= alpha * cfg.stationarity_tol))
            rec.loss = loss_value(net, data)
            rec.penalty = total_penalty(spec, net.weights)
            rec.objective = rec.loss + alpha * rec.penalty
            if polished and sampled_ok and nodes_ok:
                report.iterations.append(rec)
                report.stopped_early = True
                break
            if not polished:
                # quiescent but unpolished: tighten the outer weights, then
                # let the next round re-verify against the polished residual
                c_star, sdiag = ssn_outer(
                    net, data, spec, alpha, cfg.outer, c0=net.weights, tol=polish_tol
                )
                net = prune_zeros(net.with_weights(c_star))
                final_ssn = {"iterations": sdiag["iterations"], "residual": sdiag["residual"],
                             "converged": sdiag["converged"]}
                polished = True
                rec.width_end = net.width
                rec.pruned = width_start - net.width
                rec.ssn_iterations = sdiag["iterations"]
                rec.ssn_residual = sdiag["residual"]
                rec.loss = loss_value(net, data)
                rec.penalty = total_penalty(spec, net.weights)
                rec.objective = rec.loss + alpha * rec.penalty
                report.iterations.append(rec)
                continue
            # polished yet off-stationary (e.g. a violation pinned at an
            # existing node): fall through and retrain the current network

        net_j, jdiag = train_joint(
            net_half, data, spec, alpha,
            epochs=cfg.joint_epochs, step_init=cfg.joint_step_init, tol=cfg.joint_tol,
        )
        # between insertion rounds the l1 solve runs at a moderate tolerance:
        # tight enough for healthy exchange dynamics, loose enough that the
        # proximal-point phase rarely needs to walk (and thus consolidate)
        # the flat l1 solution facets
        mid_tol = cfg.outer.normal_map_tol
        if spec.kind == "l1":
            mid_tol = max(mid_tol, 0.02 * alpha)
        c_star, sdiag = ssn_outer(
            net_j, data, spec, alpha, cfg.outer, c0=net_j.weights, tol=mid_tol
        )
        net = prune_zeros(net_j.with_weights(c_star))
        polished = False

        rec.width_end = net.width
        rec.pruned = net_j.width - net.width
        rec.loss = loss_value(net, data)
        rec.penalty = total_penalty(spec, net.weights)
        rec.objective = rec.loss + alpha * rec.penalty
        rec.joint_epochs_run = jdiag["epochs"]
        rec.ssn_iterations = sdiag["iterations"]
        rec.ssn_residual = sdiag["residual"]
        report.iterations.append(rec)

    if not polished and net.width:
        # budget ran out mid-insertion: still hand back a polished network
        c_star, sdiag = ssn_outer(net, data, spec, alpha, cfg.outer, c0=net.weights, tol=polish_tol)
        net = prune_zeros(net.with_weights(c_star))
        final_ssn = {"iterations": sdiag["iterations"], "residual": sdiag["residual"],
                     "converged": sdiag["converged"]}

    fld = DualField.from_network(net, data)
    node_res = _node_residuals(fld, net, spec, alpha)
    report.final = {
        "width": net.width,
        "loss": loss_value(net, data),
        "penalty": total_penalty(spec, net.weights),
        "objective": loss_value(net, data) + alpha * total_penalty(spec, net.weights),
        "max_node_residual": float(node_res.max()) if node_res.size else 0.0,
        "ssn": final_ssn,
    }
    report.wall_time_s = time.perf_counter() - t_start
    return net, report


def _config_dict(cfg: AlgorithmConfig) -> dict:
    doc = asdict(cfg)
    doc["penalty"] = cfg.penalty.to_json_dict()
    return doc
