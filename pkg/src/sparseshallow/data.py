"""Dataset ingestion, synthetic targets, sampling grids, and seeded noise."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"

#: target name -> input dimension
TARGET_DIMS = {
    "fig1-cos": 1,
    "gauss-sin-1d": 1,
    "gauss-cos-2d": 2,
    "radial-norm": 2,
}

SAMPLINGS = ("uniform-1d", "grid-1d", "grid-2d")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset on [-1, 1]^d.

    ``n_points`` is the number of samples for the 1d samplings and the grid
    side length for ``grid-2d``.  ``center`` is only used by the
    ``radial-norm`` target.
    """

    target: str
    sampling: str
    n_points: int
    noise_sigma: float = 0.0
    seed: int = 0
    center: tuple[float, float] = (0.1, 0.1)

    def __post_init__(self):
        if self.target not in TARGET_DIMS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.sampling not in SAMPLINGS:
            raise ValueError(f"unknown sampling {self.sampling!r}")
        if self.n_points < 2:
            raise ValueError("need n_points >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        d = TARGET_DIMS[self.target]
        if (self.sampling == "grid-2d") != (d == 2):
            raise ValueError(f"sampling {self.sampling!r} does not fit a {d}-d target")

    @property
    def dim(self) -> int:
        return TARGET_DIMS[self.target]


@dataclass
class Dataset:
    """Input matrix xs (K, d), targets ys (K,), and provenance metadata."""

    xs: np.ndarray
    ys: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.ys = np.asarray(self.ys, dtype=float)
        if self.xs.shape[0] != self.ys.shape[0]:
            raise ValueError("xs and ys must have the same number of rows")
        if self.xs.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        if not (np.all(np.isfinite(self.xs)) and np.all(np.isfinite(self.ys))):
            raise ValueError("dataset entries must be finite")

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]


def eval_target(spec: SyntheticSpec, x):
    """Exact target value(s) at x, shape (d,) or (K, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != spec.dim:
        raise ValueError(f"target {spec.target!r} expects dimension {spec.dim}")
    if spec.target == "fig1-cos":
        t = pts[:, 0]
        out = np.cos(10.0 * (1e-3 + t * t) ** 0.125)
    elif spec.target == "gauss-sin-1d":
        t = pts[:, 0]
        out = np.exp(-0.5 * t * t) * np.abs(np.sin(7.0 * np.sqrt(1.0 + t * t)))
    elif spec.target == "gauss-cos-2d":
        out = np.exp(-0.5 * np.sum(pts * pts, axis=1)) * np.cos(10.0 * pts[:, 0] * pts[:, 1])
    else:  # radial-norm
        out = np.linalg.norm(pts - np.asarray(spec.center), axis=1)
    return float(out[0]) if single else out


def _sample_points(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.sampling == "uniform-1d":
        return rng.uniform(-1.0, 1.0, size=(spec.n_points, 1))
    if spec.sampling == "grid-1d":
        return np.linspace(-1.0, 1.0, spec.n_points)[:, None]
    side = np.linspace(-1.0, 1.0, spec.n_points)
    g1, g2 = np.meshgrid(side, side, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def generate(spec: SyntheticSpec) -> Dataset:
    """Sample the spec's grid, evaluate the target, add seeded Gaussian noise."""
    rng = np.random.default_rng(spec.seed)
    xs = _sample_points(spec, rng)
    ys = eval_target(spec, xs)
    if spec.noise_sigma > 0:
        ys = ys + spec.noise_sigma * rng.standard_normal(xs.shape[0])
    meta = {
        "source": "synthetic",
        "target": spec.target,
        "sampling": spec.sampling,
        "n_points": spec.n_points,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
    }
    if spec.target == "radial-norm":
        meta["center"] = list(spec.center)
    return Dataset(xs, ys, meta)


def true_values(spec: SyntheticSpec, data: Dataset) -> np.ndarray:
    """Noise-free target values at the dataset's inputs."""
    return eval_target(spec, data.xs)


def save_csv(data: Dataset, path):
    """Write ``x_1,...,x_d,y`` rows at full precision."""
    path = Path(path)
    d = data.dim
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(d)] + ["y"])
        for row, y in zip(data.xs, data.ys):
            writer.writerow([FLOAT_FMT % v for v in row] + [FLOAT_FMT % y])


def load_csv(path) -> Dataset:
    """Read a dataset CSV with header ``x_1,...,x_d,y``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        d = len(header) - 1
        expected = [f"x_{i + 1}" for i in range(d)] + ["y"]
        if d < 1 or header != expected:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}: row {i} has {len(row)} fields, expected {d + 1}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}: row {i}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows)
    return Dataset(arr[:, :d], arr[:, d], {"source": "csv", "path": str(path)})
