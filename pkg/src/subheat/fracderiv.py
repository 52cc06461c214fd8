"""Time-fractional derivatives of semigroup kernels and spatial gradients.

The derivative of order beta is the truncated-integral definition
  d_t^beta F(t) = (+-1 / Gamma(m - beta)) * int_0^inf d_t^m F(t + u) u^(m-beta-1) du,
m = floor(beta) + 1, under the real-normalized convention: the unimodular
phase of the complex definition is replaced by the sign that makes
d_t^beta e^{-at} = a^beta e^{-at}. The u -> 0 endpoint singularity is
absorbed by a Gauss-Jacobi head rule; the decaying remainder is integrated
on log-spaced Gauss-Legendre panels.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma, roots_jacobi

from .grid import Grid, GridFunction, boundary_layer_mask, gradient_values, grid_function
from .spectral import (KernelSlice, SpectralDecomposition, apply_multiplier,
                       multiplier_kernel)


@dataclass(frozen=True)
class FracDerivSpec:
    """Order and quadrature layout for one fractional time derivative."""

    beta: float
    head_nodes: int = 48
    tail_panels: int = 14
    tail_panel_nodes: int = 12
    upper_factor: float = 50.0    # U = upper_factor * t + upper_factor / lam_min^alpha

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("fractional order beta must be positive")
        if self.head_nodes + self.tail_panels * self.tail_panel_nodes < 64:
            raise ValueError("fractional-derivative quadrature needs at least 64 nodes")
        if self.upper_factor < 50.0:
            raise ValueError("quadrature upper range must reach at least 50 * t")

    @property
    def m(self) -> int:
        return int(math.floor(self.beta)) + 1


def _u_quadrature(spec: FracDerivSpec, t: float, u_max: float):
    """Nodes/weights for int_0^{u_max} g(u) u^(m-beta-1) du, singular weight absorbed."""
    m, beta = spec.m, spec.beta
    u_head = min(t, u_max)
    xj, wj = roots_jacobi(spec.head_nodes, m - beta - 1.0, 0.0)
    u_h = u_head * (1.0 - xj) / 2.0
    w_h = wj * (u_head / 2.0) ** (m - beta)
    if u_max <= u_head * (1.0 + 1e-12):
        return u_h, w_h
    edges = np.exp(np.linspace(np.log(u_head), np.log(u_max), spec.tail_panels + 1))
    xg, wg = np.polynomial.legendre.leggauss(spec.tail_panel_nodes)
    u_t = np.concatenate([(0.5 * (b - a)) * xg + 0.5 * (a + b)
                          for a, b in zip(edges[:-1], edges[1:])])
    w_t = np.concatenate([(0.5 * (b - a)) * wg for a, b in zip(edges[:-1], edges[1:])])
    w_t = w_t * u_t ** (m - beta - 1.0)
    return np.concatenate([u_h, u_t]), np.concatenate([w_h, w_t])


def frac_multiplier_quadrature(dec: SpectralDecomposition, alpha: float,
                               spec: FracDerivSpec, t: float) -> np.ndarray:
    """Quadrature route for the multiplier of d_t^beta e^{-t L^alpha} per eigenvalue."""
    if t <= 0:
        raise ValueError("time must be positive")
    m, beta = spec.m, spec.beta
    la = dec.eigenvalues ** alpha
    lam_min = max(dec.positive_min ** alpha, 1e-12)
    u_max = spec.upper_factor * t + spec.upper_factor / lam_min
    u, w = _u_quadrature(spec, t, u_max)
    # d_t^m e^{-(t+u) lam^alpha} = (-lam^alpha)^m e^{-(t+u) lam^alpha}
    values = (-la[None, :]) ** m * np.exp(-np.outer(t + u, la))
    return (-1.0) ** m * (w @ values) / _gamma(m - beta)


def frac_derivative_scalar(a: float, beta: float, t: float,
                           spec: FracDerivSpec | None = None) -> float:
    """d_t^beta e^{-a t} by the integral definition; the convention makes it a^beta e^{-at}."""
    spec = spec or FracDerivSpec(beta)
    m = spec.m
    u_max = spec.upper_factor * t + spec.upper_factor / max(a, 1e-12)
    u, w = _u_quadrature(spec, t, u_max)
    values = (-a) ** m * np.exp(-a * (t + u))
    return float((-1.0) ** m * np.sum(w * values) / _gamma(m - beta))


def frac_time_derivative(dec: SpectralDecomposition, alpha: float,
                         spec: FracDerivSpec, t: float,
                         tables: bool = False) -> KernelSlice:
    """Kernel of d_t^beta e^{-t L^alpha} by the truncated-integral quadrature.

    The m-th time derivative inside the integral comes from the spectral
    multiplier. With `tables=True` the integral literally sums kernel tables
    at the quadrature nodes (identical by linearity, kept as a cross-check).
    """
    if tables:
        m, beta = spec.m, spec.beta
        la = dec.eigenvalues ** alpha
        lam_min = max(dec.positive_min ** alpha, 1e-12)
        u_max = spec.upper_factor * t + spec.upper_factor / lam_min
        u, w = _u_quadrature(spec, t, u_max)
        acc = np.zeros((dec.grid.size, dec.grid.size))
        for uq, wq in zip(u, w):
            mult = (-la) ** m * np.exp(-(t + uq) * la)
            acc += wq * ((dec.basis * mult[None, :]) @ dec.basis.T)
        acc *= (-1.0) ** m / _gamma(m - beta)
        return KernelSlice(dec.grid, float(t), acc, "spectral",
                           {"kind": "frac_derivative_quadrature", "alpha": alpha,
                            "beta": spec.beta, "tables": True})
    weights = frac_multiplier_quadrature(dec, alpha, spec, t)
    return multiplier_kernel(dec, lambda lam: weights, t,
                             kind="frac_derivative_quadrature", alpha=alpha,
                             beta=spec.beta)


def d_operator(dec: SpectralDecomposition, alpha: float, beta: float,
               t: float) -> KernelSlice:
    """Kernel of t^beta d_t^beta e^{-t L^alpha}: multiplier (t lam^alpha)^beta e^{-t lam^alpha}."""
    if beta <= 0:
        raise ValueError("operator order beta must be positive")
    if t <= 0:
        raise ValueError("time must be positive")

    def mult(lam):
        la = lam ** alpha
        return (t * la) ** beta * np.exp(-t * la)

    return multiplier_kernel(dec, mult, t, kind="time_derivative_power",
                             alpha=alpha, beta=beta)


def d_apply(dec: SpectralDecomposition, alpha: float, beta: float, t: float,
            values: np.ndarray) -> np.ndarray:
    """t^beta d_t^beta e^{-t L^alpha} f without forming the kernel table."""
    la = dec.eigenvalues ** alpha
    return apply_multiplier(dec, lambda lam: (t * la) ** beta * np.exp(-t * la), values)


@dataclass(frozen=True)
class GradientField:
    grid: Grid
    values: np.ndarray = field(repr=False)     # (N, n)
    boundary: np.ndarray = field(repr=False)   # True on the one-cell wall layer

    def at(self, indices) -> np.ndarray:
        indices = np.atleast_1d(np.asarray(indices, dtype=int))
        if np.any(self.boundary[indices]):
            raise ValueError("gradient requested on the boundary layer")
        return self.values[indices]

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=1))


def spatial_gradient(K: KernelSlice, y_index: int) -> GradientField:
    """Central-difference gradient in x of K(., y) at a fixed source column."""
    column = K.table[:, y_index]
    vals = gradient_values(K.grid, column)
    return GradientField(K.grid, vals, boundary_layer_mask(K.grid))


def gradient_of_function(f: GridFunction) -> GradientField:
    return GradientField(f.grid, gradient_values(f.grid, f.values),
                         boundary_layer_mask(f.grid))


def nabla_alpha(dec: SpectralDecomposition, alpha: float, f: GridFunction,
                t: float) -> tuple[GradientField, GridFunction]:
    """Spatial gradient and order-1/(2 alpha) time derivative of e^{-t L^alpha} f."""
    if t <= 0 or not (0.0 < alpha < 1.0):
        raise ValueError("need t > 0 and alpha in (0,1)")
    u_vals = apply_multiplier(dec, lambda lam: np.exp(-t * lam ** alpha), f.values)
    grad = gradient_of_function(grid_function(dec.grid, u_vals))
    # multiplier (lam^alpha)^(1/(2 alpha)) = sqrt(lam)
    time_part = apply_multiplier(
        dec, lambda lam: np.sqrt(lam) * np.exp(-t * lam ** alpha), f.values
    )
    return grad, grid_function(dec.grid, time_part)
