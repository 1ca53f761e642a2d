"""Greedy node insertion: sample trials, climb |p|, insert violators.

New nodes are placed where the dual variable violates the stationarity
bound ``|p| <= alpha``.  Global maximization of |p| is out of reach, so a
multi-start gradient ascent from random sphere points is used; all starts
climb in lockstep (vectorized) with per-start Armijo backtracking, and the
surviving maxima are merged deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import chart_to_sphere, sample_sphere, sphere_to_chart
from .loss_dual import DualField
from .network import ShallowNet

ARMIJO_SLOPE = 1e-4
ARMIJO_SHRINK = 0.5
STEP_FLOOR = 1e-18


@dataclass(frozen=True)
class InsertionConfig:
    n_trial: int = 50
    ascent_max_iters: int = 200
    ascent_grad_tol: float = 1e-8
    dedup_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if min(self.n_trial, self.ascent_max_iters) < 1:
            raise ValueError("n_trial and ascent_max_iters must be positive")
        if min(self.ascent_grad_tol, self.dedup_tol) <= 0:
            raise ValueError("tolerances must be positive")


def sample_trials(cfg: InsertionConfig, d: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Chart coordinates of ``n_trial`` i.i.d. uniform sphere nodes."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return sphere_to_chart(sample_sphere(cfg.n_trial, d, rng))


def ascend_dual_batch(field: DualField, z0: np.ndarray, cfg: InsertionConfig):
    """Maximize |p| from every start in parallel.

    Climbs along the normalized gradient of |p|, so the Armijo step is
    measured in chart units rather than in the (alpha-sized) scale of the
    dual values.  Returns ``(z, p_abs, converged)``; each row's |p| is
    nondecreasing across accepted steps and at least |p(z0)|.
    """
    z = np.atleast_2d(np.asarray(z0, dtype=float)).copy()
    m = z.shape[0]
    p, grads = field.values_and_grads_chart(z)
    f = np.abs(p)
    # ascent direction for |p|; at p = 0 climb p itself
    sgn = np.where(p >= 0.0, 1.0, -1.0)
    g = sgn[:, None] * grads
    gn = np.linalg.norm(g, axis=1)
    step = np.ones(m)
    converged = gn <= cfg.ascent_grad_tol
    active = ~converged

    for _ in range(cfg.ascent_max_iters):
        if not np.any(active):
            break
        trying = active.copy()
        accepted = np.zeros(m, dtype=bool)
        while np.any(trying):
            idx = np.flatnonzero(trying)
            d = g[idx] / gn[idx, None]  # unit direction; slope along it is gn
            z_try = z[idx] + step[idx, None] * d
            f_try = np.abs(field.values_chart(z_try))
            ok = f_try >= f[idx] + ARMIJO_SLOPE * step[idx] * gn[idx]
            good = idx[ok]
            z[good] = z_try[ok]
            f[good] = f_try[ok]
            accepted[good] = True
            trying[good] = False
            bad = idx[~ok]
            step[bad] *= ARMIJO_SHRINK
            stuck = bad[step[bad] < STEP_FLOOR]
            trying[stuck] = False
            active[stuck] = False  # step underflow: stop, not converged
        if not np.any(accepted):
            continue
        # refresh gradients at the accepted points only
        p_new, grads_new = field.values_and_grads_chart(z[accepted])
        sgn = np.where(p_new >= 0.0, 1.0, -1.0)
        g[accepted] = sgn[:, None] * grads_new
        gn[accepted] = np.linalg.norm(g[accepted], axis=1)
        step[accepted] = np.minimum(step[accepted] * 2.0, 1e3)
        done = accepted & (gn <= cfg.ascent_grad_tol)
        converged |= done
        active &= ~done

    return z, f, converged


def ascend_dual(field: DualField, z0, cfg: InsertionConfig):
    """Single-start ascent; returns ``(z, |p|, converged)``."""
    z, f, conv = ascend_dual_batch(field, np.asarray(z0, dtype=float)[None, :], cfg)
    return z[0], float(f[0]), bool(conv[0])


def select_and_insert(
    net: ShallowNet,
    candidates_z: np.ndarray,
    candidates_p: np.ndarray,
    alpha: float,
    dedup_tol: float = 1e-6,
    max_new: int | None = None,
) -> ShallowNet:
    """Append zero-weight nodes at candidates with |p| > alpha.

    Candidates are processed by (|p| descending, lexicographic z) and a
    candidate is dropped when it lies within ``dedup_tol`` (sphere chord
    distance) of an already kept candidate or an existing node.  At most
    ``max_new`` nodes are kept.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = np.atleast_2d(np.asarray(candidates_z, dtype=float))
    p_abs = np.asarray(candidates_p, dtype=float)
    violating = p_abs > alpha
    if not np.any(violating):
        return net
    z, p_abs = z[violating], p_abs[violating]
    order = np.lexsort(tuple(z[:, i] for i in reversed(range(z.shape[1]))) + (-p_abs,))
    nodes = chart_to_sphere(z[order])
    kept: list[np.ndarray] = []
    for w in nodes:
        if max_new is not None and len(kept) >= max_new:
            break
        against = kept + ([net.nodes] if net.width else [])
        if against:
            dists = np.linalg.norm(np.vstack(against) - w, axis=1)
            if float(dists.min()) <= dedup_tol:
                continue
        kept.append(w[None, :])
    if not kept:
        return net
    new_nodes = np.vstack([net.nodes] + kept) if net.width else np.vstack(kept)
    new_weights = np.concatenate([net.weights, np.zeros(len(kept))])
    return ShallowNet(new_nodes, new_weights)
