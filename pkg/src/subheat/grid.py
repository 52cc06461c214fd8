"""Uniform box grids on [-L, L)^n with midpoint quadrature, balls and stencil metadata.

The box truncates R^n; cell centers sit at -L + (i + 1/2) h so that the
composite midpoint rule is exact for polynomials of degree <= 1 and the
point set is symmetric about the origin for even M.
"""

from dataclasses import dataclass, field

import numpy as np

DIRICHLET = "dirichlet"
PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid:
    dimension: int
    half_width: float
    points_per_axis: int
    bc: str
    axis: np.ndarray = field(repr=False)     # (M,) cell centers per axis
    points: np.ndarray = field(repr=False)   # (M^n, n) flattened C-order

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_weight(self) -> float:
        return self.spacing ** self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dimension

    def pair_distances(self) -> np.ndarray:
        """(N, N) matrix of distances in the grid's metric."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        return self._metric(diff)

    def distances_from(self, center) -> np.ndarray:
        diff = self.points - np.asarray(center, dtype=float)[None, :]
        return self._metric(diff)

    def _metric(self, diff: np.ndarray) -> np.ndarray:
        if self.bc == PERIODIC:
            period = 2.0 * self.half_width
            diff = np.abs(diff)
            diff = np.minimum(diff, period - diff)
        return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"value count {self.values.shape} does not match grid size {self.grid.size}"
            )

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2) * self.grid.cell_weight))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    members: np.ndarray        # indices of grid points with dist < radius
    contained: bool            # fully inside the box (Euclidean sense)


def build_grid(n: int, half_width: float, points_per_axis: int, bc: str = DIRICHLET) -> Grid:
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    M = int(points_per_axis)
    if M % 2 != 0 or M < 8:
        raise ValueError(f"points_per_axis must be even and >= 8, got {M}")
    if bc not in (DIRICHLET, PERIODIC):
        raise ValueError(f"unknown boundary condition {bc!r}")
    h = 2.0 * half_width / M
    axis = -half_width + (np.arange(M) + 0.5) * h
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    return Grid(n, float(half_width), M, bc, axis, points)


def grid_function(grid: Grid, values) -> GridFunction:
    return GridFunction(grid, np.asarray(values, dtype=float).ravel())


def from_callable(grid: Grid, fn) -> GridFunction:
    return grid_function(grid, fn(grid.points))


def grid_integrate(f: GridFunction) -> float:
    if not np.all(np.isfinite(f.values)):
        raise ValueError("grid_integrate requires finite values everywhere")
    return float(np.sum(f.values) * f.grid.cell_weight)


def ball_points(grid: Grid, center, radius: float) -> Ball:
    center = np.asarray(center, dtype=float).reshape(grid.dimension)
    if radius <= grid.spacing:
        raise ValueError(
            f"radius {radius} must exceed the grid spacing {grid.spacing}"
        )
    dist = grid.distances_from(center)
    members = np.nonzero(dist < radius)[0]
    if members.size == 0:
        raise ValueError("empty ball: radius too small for this grid")
    contained = bool(
        np.all(np.abs(center) + radius <= grid.half_width + 1e-12)
    )
    return Ball(center, float(radius), members, contained)


def inner_box_mask(grid: Grid, fraction: float = 0.5) -> np.ndarray:
    """Points of the centered sub-box scaled by `fraction` (bound scans live here)."""
    limit = fraction * grid.half_width
    return np.all(np.abs(grid.points) <= limit + 1e-12, axis=1)


def gradient_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Second-order central differences of a grid function, (N, n).

    Dirichlet grids extend by zero outside the box (matching the operator's
    zero exterior values); periodic grids wrap.
    """
    n, M, h = grid.dimension, grid.points_per_axis, grid.spacing
    v = values.reshape((M,) * n)
    out = np.empty(v.shape + (n,))
    for d in range(n):
        if grid.bc == PERIODIC:
            plus = np.roll(v, -1, axis=d)
            minus = np.roll(v, 1, axis=d)
        else:
            pad = [(0, 0)] * n
            pad[d] = (1, 1)
            vp = np.pad(v, pad)
            sl_plus = [slice(None)] * n
            sl_plus[d] = slice(2, M + 2)
            sl_minus = [slice(None)] * n
            sl_minus[d] = slice(0, M)
            plus, minus = vp[tuple(sl_plus)], vp[tuple(sl_minus)]
        out[..., d] = (plus - minus) / (2.0 * h)
    return out.reshape(grid.size, n)


def boundary_layer_mask(grid: Grid) -> np.ndarray:
    """Points within one cell of the box wall (True on the layer)."""
    if grid.bc == PERIODIC:
        return np.zeros(grid.size, dtype=bool)
    margin = grid.half_width - 1.5 * grid.spacing
    return np.any(np.abs(grid.points) > margin, axis=1)
