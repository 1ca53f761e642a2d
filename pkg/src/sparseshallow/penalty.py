"""Scalar sparsity penalties, their proximal maps, and validity checks.

Every penalty ``phi`` here is concave, nondecreasing on ``[0, inf)`` and
normalized so that ``phi(0) = 0`` and ``phi'(0) = 1``.  Supported variants:

* ``l1``            ``phi(z) = z``
* ``log``           ``phi(z) = log(1 + gamma z) / gamma``
* ``mcp``           minimax concave penalty, flat beyond ``z = 1/gamma``
* ``mixed_log_l1``  ``phi(z) = (z + log(1 + 2 gamma z) / (2 gamma)) / 2``

The curvature parameter ``gamma`` bounds ``-phi''`` from above, which keeps
the proximal map single-valued whenever ``lam * gamma < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PENALTY_KINDS = ("l1", "log", "mcp", "mixed_log_l1")


@dataclass(frozen=True)
class PenaltySpec:
    """Selects the scalar penalty applied to the magnitude of each outer weight.

    Attributes:
        kind: one of ``"l1"``, ``"log"``, ``"mcp"``, ``"mixed_log_l1"``.
        gamma: curvature parameter of the curved variants; ignored for ``"l1"``.
    """

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind != "l1":
            if self.gamma is None or not np.isfinite(self.gamma) or self.gamma <= 0:
                raise ValueError(f"penalty {self.kind!r} needs gamma > 0, got {self.gamma!r}")

    @property
    def curvature(self) -> float:
        """Upper bound on -phi'' (0 for l1, gamma otherwise)."""
        return 0.0 if self.kind == "l1" else float(self.gamma)

    def to_json_dict(self) -> dict:
        if self.kind == "l1":
            return {"kind": "l1"}
        return {"kind": self.kind, "gamma": float(self.gamma)}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PenaltySpec":
        kind = obj.get("kind")
        gamma = obj.get("gamma")
        return cls(kind, None if gamma is None else float(gamma))

    def label(self) -> str:
        return "l1" if self.kind == "l1" else f"{self.kind}(gamma={self.gamma:g})"


def _check_nonnegative(z: np.ndarray):
    if np.any(z < 0):
        raise ValueError("penalty argument must be nonnegative")


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def phi_value(spec: PenaltySpec, z):
    """Evaluate phi(z) elementwise for z >= 0."""
    z, scalar = _as_array(z)
    _check_nonnegative(z)
    g = spec.gamma
    if spec.kind == "l1":
        out = z.copy()
    elif spec.kind == "log":
        out = np.log1p(g * z) / g
    elif spec.kind == "mcp":
        out = np.where(z < 1.0 / g, z - 0.5 * g * z * z, 0.5 / g)
    else:  # mixed_log_l1
        out = 0.5 * (z + np.log1p(2.0 * g * z) / (2.0 * g))
    return _ret(out, scalar)


def phi_derivative(spec: PenaltySpec, z):
    """Evaluate phi'(z) elementwise; phi'(0) = 1 and phi' is nonincreasing."""
    z, scalar = _as_array(z)
    _check_nonnegative(z)
    g = spec.gamma
    if spec.kind == "l1":
        out = np.ones_like(z)
    elif spec.kind == "log":
        out = 1.0 / (1.0 + g * z)
    elif spec.kind == "mcp":
        out = np.maximum(1.0 - g * z, 0.0)
    else:
        out = 0.5 * (1.0 + 1.0 / (1.0 + 2.0 * g * z))
    return _ret(out, scalar)


def phi_second_derivative(spec: PenaltySpec, z):
    """Evaluate phi''(z) elementwise (the MCP kink uses the left value -gamma)."""
    z, scalar = _as_array(z)
    _check_nonnegative(z)
    g = spec.gamma
    if spec.kind == "l1":
        out = np.zeros_like(z)
    elif spec.kind == "log":
        out = -g / (1.0 + g * z) ** 2
    elif spec.kind == "mcp":
        out = np.where(z <= 1.0 / g, -g, 0.0)
    else:
        out = -g / (1.0 + 2.0 * g * z) ** 2
    return _ret(out, scalar)


def total_penalty(spec: PenaltySpec, c) -> float:
    """Sum of phi(|c_n|) over the weight vector (0 for an empty vector)."""
    c = np.asarray(c, dtype=float)
    if c.size == 0:
        return 0.0
    return float(np.sum(phi_value(spec, np.abs(c))))


def soft_threshold(lam: float, q):
    """Componentwise sign(q) * max(|q| - lam, 0)."""
    if lam <= 0:
        raise ValueError("soft_threshold needs lam > 0")
    q, scalar = _as_array(q)
    out = np.sign(q) * np.maximum(np.abs(q) - lam, 0.0)
    return _ret(out, scalar)


def _prox_log_shifted(gamma: float, lam: float, a: np.ndarray) -> np.ndarray:
    """Positive root of ``gamma c^2 + (1 - gamma a) c + (lam - a) = 0`` for a > lam.

    This is the stationarity equation of ``c -> (c - a)^2 / 2 + lam * log(1 +
    gamma c) / gamma`` on c > 0.  The root is evaluated in a cancellation-free
    form when ``gamma a < 1``.
    """
    t = gamma * a - 1.0
    disc = np.sqrt(t * t + 4.0 * gamma * (a - lam))
    # (t + disc) / (2 gamma), stabilized for t < 0
    num = 4.0 * gamma * (a - lam)
    out = np.where(t >= 0.0, (t + disc) / (2.0 * gamma), num / (2.0 * gamma * (disc - t)))
    return out


def phi_prox(spec: PenaltySpec, lam: float, q):
    """Proximal map: argmin_c  (c - q)^2 / 2 + lam * phi(|c|).

    Requires ``lam * gamma < 1`` for the curved variants so that the
    objective is strongly convex and the minimizer unique.  The map is odd in
    q and returns exactly 0 whenever ``|q| <= lam``.
    """
    if lam <= 0:
        raise ValueError("phi_prox needs lam > 0")
    if lam * spec.curvature >= 1.0:
        raise ValueError(
            f"non-unique prox: lam * gamma = {lam * spec.curvature:g} >= 1 for {spec.label()}"
        )
    q, scalar = _as_array(q)
    s = np.sign(q)
    a = np.abs(q)
    g = spec.gamma
    if spec.kind == "l1":
        out = np.maximum(a - lam, 0.0)
    elif spec.kind == "log":
        out = np.where(a > lam, _prox_log_shifted(g, lam, np.maximum(a, lam)), 0.0)
    elif spec.kind == "mcp":
        # firm thresholding: linear between lam and 1/gamma, identity beyond
        shrunk = np.maximum(a - lam, 0.0) / (1.0 - lam * g)
        out = np.where(a >= 1.0 / g, a, shrunk)
    else:
        # reduces to the log prox with gamma -> 2 gamma, lam -> lam/2, q -> q - lam/2
        out = np.where(
            a > lam,
            _prox_log_shifted(2.0 * g, 0.5 * lam, np.maximum(a, lam) - 0.5 * lam),
            0.0,
        )
    return _ret(s * out, scalar)


@dataclass(frozen=True)
class ValidityReport:
    """Numeric check of the concavity assumptions on a grid.

    ``gamma`` is the fitted convexity bound (sup of the downward slope of
    phi'), ``gamma_hat`` the fitted strict-concavity constant from the
    quadratic upper bound ``phi(z) <= z - gamma_hat z^2 / 2`` on
    ``[0, z_hat]``.
    """

    a1_pass: bool
    a2_pass: bool
    gamma: float
    gamma_hat: float
    z_hat: float


def validate_penalty(spec: PenaltySpec, grid_max: float, n_points: int) -> ValidityReport:
    """Check monotonicity/concavity (A1) and strict concavity near 0 (A2).

    Uses finite-difference slopes on a uniform grid with a 1e-8 slack for the
    sign tests.  Returns fitted constants alongside the pass/fail flags.
    """
    if grid_max <= 0:
        raise ValueError("grid_max must be positive")
    if n_points < 3:
        raise ValueError("need n_points >= 3")
    tol = 1e-8
    z = np.linspace(0.0, grid_max, n_points)
    v = phi_value(spec, z)
    d = phi_derivative(spec, z)
    dz = np.diff(z)

    monotone = bool(np.all(np.diff(v) >= -tol))
    deriv_noninc = bool(np.all(np.diff(d) <= tol))
    normalized = bool(abs(v[0]) <= tol and abs(d[0] - 1.0) <= tol)
    slopes = -np.diff(d) / dz  # downward slope of phi'
    gamma_fit = float(max(0.0, slopes.max()))
    a1 = monotone and deriv_noninc and normalized

    z_hat = grid_max if gamma_fit <= tol else min(grid_max, 1.0 / gamma_fit)
    inner = (z > 0) & (z <= z_hat)
    zs = np.append(z[inner], z_hat)  # include the right endpoint itself
    gamma_hat_fit = float(np.min(2.0 * (zs - phi_value(spec, zs)) / zs**2))
    gamma_hat_fit = max(0.0, gamma_hat_fit)
    a2 = bool(a1 and gamma_hat_fit > tol)

    return ValidityReport(a1, a2, gamma_fit, gamma_hat_fit, float(z_hat))
