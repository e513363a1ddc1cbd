"""Discretized probability densities on uniform 1-D log-rate grids."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatch

# Relative deviation allowed between grid spacings before the grid is
# rejected as non-uniform.
SPACING_RTOL = 1e-12


def _as_1d_float(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if arr.size < 2:
        raise DomainError(f"{name} needs at least two entries")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class DensityGrid:
    """Density values sampled on a uniform, strictly increasing grid.

    ``points`` are log-rate coordinates, ``weights`` are nonnegative density
    values per unit log-rate.  Normalization uses the trapezoidal rule; a
    freshly constructed grid need not be normalized until ``normalize`` is
    called.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = _as_1d_float(self.points, "points")
        weights = _as_1d_float(self.weights, "weights")
        if points.size != weights.size:
            raise DomainError("points and weights must have equal length")
        steps = np.diff(points)
        if np.any(steps <= 0.0):
            raise DomainError("points must be strictly increasing")
        h = (points[-1] - points[0]) / (points.size - 1)
        if np.max(np.abs(steps - h)) > SPACING_RTOL * max(abs(h), 1.0):
            raise DomainError("points must be uniformly spaced")
        if np.any(weights < 0.0):
            raise DomainError("weights must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def h(self) -> float:
        """Grid spacing."""
        return (self.points[-1] - self.points[0]) / (self.points.size - 1)

    @property
    def n(self) -> int:
        return self.points.size

    def mass(self) -> float:
        """Total probability under the trapezoidal rule."""
        return float(np.trapezoid(self.weights, dx=self.h))

    def normalize(self) -> "DensityGrid":
        """Rescale weights so the trapezoidal mass is exactly one."""
        m = self.mass()
        if m <= 0.0:
            raise DomainError("cannot normalize a density with zero mass")
        return DensityGrid(self.points, self.weights / m)

    def expectation(self, values: np.ndarray) -> float:
        """Trapezoidal expectation of a function sampled on the grid."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.points.shape:
            raise GridMismatch("sampled function does not match the grid")
        return float(np.trapezoid(self.weights * values, dx=self.h))

    def mean(self) -> float:
        return self.expectation(self.points)

    def variance(self) -> float:
        m = self.mean()
        return self.expectation((self.points - m) ** 2)


def same_grid(a: DensityGrid, b: DensityGrid) -> bool:
    if a.n != b.n:
        return False
    scale = max(1.0, float(np.max(np.abs(a.points))))
    return bool(np.max(np.abs(a.points - b.points)) <= SPACING_RTOL * scale)


def require_same_grid(a: DensityGrid, b: DensityGrid) -> None:
    if not same_grid(a, b):
        raise GridMismatch("density grids differ")


def gaussian_density(points: np.ndarray, mean: float, variance: float) -> DensityGrid:
    """Normal density sampled on ``points`` and trapezoid-normalized."""
    if variance <= 0.0:
        raise DomainError("variance must be positive")
    points = np.asarray(points, dtype=float)
    z = (points - mean) ** 2 / (2.0 * variance)
    w = np.exp(-(z - z.min()))  # shift before exponentiating; rescaled below
    return DensityGrid(points, w).normalize()


def uniform_density(points: np.ndarray) -> DensityGrid:
    points = np.asarray(points, dtype=float)
    return DensityGrid(points, np.ones_like(points)).normalize()


def l1_distance(a: DensityGrid, b: DensityGrid) -> float:
    """Trapezoidal integral of |a - b|."""
    require_same_grid(a, b)
    return float(np.trapezoid(np.abs(a.weights - b.weights), dx=a.h))


def density_to_csv(grid: DensityGrid) -> str:
    """Serialize as ``x,p`` rows with 17 significant digits."""
    out = io.StringIO()
    out.write("x,p\n")
    for x, p in zip(grid.points, grid.weights):
        out.write(f"{x:.17g},{p:.17g}\n")
    return out.getvalue()


def density_from_csv(text: str) -> DensityGrid:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0].strip() != "x,p":
        raise DomainError("density CSV must start with header 'x,p'")
    xs, ps = [], []
    for ln in lines[1:]:
        sx, sp = ln.split(",")
        xs.append(float(sx))
        ps.append(float(sp))
    return DensityGrid(np.array(xs), np.array(ps))
