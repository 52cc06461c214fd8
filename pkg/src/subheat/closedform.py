"""Closed-form and Fourier-oracle kernels for the potential-free operator.

These provide the continuum references used for calibration: the free
Gaussian heat kernel, the classical Poisson kernel (fractional index 1/2),
the cosine-transform oracle for general fractional index in one dimension,
and the harmonic-oscillator kernel for V = |x|^2 in one dimension.
"""

import numpy as np
from scipy.special import gamma

from .grid import Grid
from .spectral import KernelSlice, ROUTE_CLOSED_FORM, ROUTE_FOURIER


def gaussian_heat_value(r, t: float, n: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (4.0 * np.pi * t) ** (-n / 2.0) * np.exp(-r * r / (4.0 * t))


def poisson_value(r, t: float, n: int) -> np.ndarray:
    """Classical Poisson kernel c_n t / (t^2 + r^2)^((n+1)/2)."""
    r = np.asarray(r, dtype=float)
    c_n = gamma((n + 1) / 2.0) / np.pi ** ((n + 1) / 2.0)
    return c_n * t / (t * t + r * r) ** ((n + 1) / 2.0)


def gaussian_heat_table(grid: Grid, t: float, images: int = 0) -> KernelSlice:
    """Free heat kernel on grid points; optional periodic image sum."""
    dist = np.linalg.norm(grid.points[:, None, :] - grid.points[None, :, :], axis=-1)
    table = gaussian_heat_value(dist, t, grid.dimension)
    if images > 0:
        period = 2.0 * grid.half_width
        diff = grid.points[:, None, :] - grid.points[None, :, :]
        shifts = [np.arange(-images, images + 1) * period] * grid.dimension
        for combo in np.stack(np.meshgrid(*shifts, indexing="ij"), axis=-1).reshape(-1, grid.dimension):
            if np.all(combo == 0.0):
                continue
            table = table + gaussian_heat_value(
                np.linalg.norm(diff + combo[None, None, :], axis=-1), t, grid.dimension
            )
    return KernelSlice(grid, float(t), table, ROUTE_CLOSED_FORM,
                       {"kind": "heat", "potential": "zero", "images": images})


def poisson_table(grid: Grid, t: float) -> KernelSlice:
    dist = np.linalg.norm(grid.points[:, None, :] - grid.points[None, :, :], axis=-1)
    return KernelSlice(grid, float(t), poisson_value(dist, t, grid.dimension),
                       ROUTE_CLOSED_FORM,
                       {"kind": "fractional_heat", "alpha": 0.5, "potential": "zero"})


def fourier_fractional_value(r: float, t: float, alpha: float) -> float:
    """One-dimensional Fourier oracle (1/pi) * int_0^inf e^{-t xi^(2a)} cos(xi r) dxi.

    Integrates panel-by-panel between cosine zeros so the oscillatory tail
    cancels correctly; the envelope cutoff keeps the truncation below 1e-12.
    """
    r = abs(float(r))
    xi_max = (45.0 / t) ** (1.0 / (2.0 * alpha))
    nodes, weights = np.polynomial.legendre.leggauss(24)
    if r * xi_max < np.pi:
        edges = np.linspace(0.0, xi_max, 64)
    else:
        zeros = np.arange(0.5 * np.pi / r, xi_max + np.pi / r, np.pi / r)
        edges = np.concatenate(([0.0], zeros[zeros <= xi_max], [xi_max]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        xi = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.sum(
            weights * np.exp(-t * xi ** (2.0 * alpha)) * np.cos(xi * r)
        )
    return float(total / np.pi)


def oscillator_heat_value(x, y, t: float) -> np.ndarray:
    """Kernel of exp(-t(-d^2/dx^2 + x^2)) on the line (one dimension)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    sh, ch = np.sinh(2.0 * t), np.cosh(2.0 * t)
    expo = -((x * x + y * y) * ch - 2.0 * x * y) / (2.0 * sh)
    return np.exp(expo) / np.sqrt(2.0 * np.pi * sh)


def oscillator_heat_table(grid: Grid, t: float) -> KernelSlice:
    if grid.dimension != 1:
        raise ValueError("oscillator closed form implemented for n=1 only")
    x = grid.points[:, 0]
    return KernelSlice(grid, float(t), oscillator_heat_value(x[:, None], x[None, :], t),
                       ROUTE_CLOSED_FORM, {"kind": "heat", "potential": "power2"})


def fourier_table(grid: Grid, t: float, alpha: float) -> KernelSlice:
    """Fractional heat kernel table from the n=1 Fourier oracle (slow; oracle use)."""
    if grid.dimension != 1:
        raise ValueError("Fourier oracle implemented for n=1 only")
    x = grid.points[:, 0]
    dist = np.abs(x[:, None] - x[None, :])
    uniq, inv = np.unique(np.round(dist / grid.spacing).astype(int), return_inverse=True)
    vals = np.array([fourier_fractional_value(u * grid.spacing, t, alpha) for u in uniq])
    return KernelSlice(grid, float(t), vals[inv].reshape(dist.shape), ROUTE_FOURIER,
                       {"kind": "fractional_heat", "alpha": alpha, "potential": "zero"})
