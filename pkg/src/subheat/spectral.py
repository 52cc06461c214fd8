"""Discrete Schrodinger operator -Delta_h + V, its eigenbasis, and multiplier kernels.

The dense eigendecomposition makes every bounded spectral multiplier exact to
roundoff, so this route serves as the in-repo ground truth for the
subordination and time-quadrature routes.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .grid import Grid, GridFunction, grid_function
from .potentials import PotentialSpec, eval_on_grid

SIZE_CAPS = {1: 512, 2: 48, 3: 16}

ROUTE_SPECTRAL = "spectral"
ROUTE_SUBORDINATED = "subordinated"
ROUTE_CLOSED_FORM = "closed_form"
ROUTE_FOURIER = "fourier_oracle"


@dataclass(frozen=True)
class DiscreteOperator:
    grid: Grid
    matrix: np.ndarray = field(repr=False)
    potential: PotentialSpec


@dataclass(frozen=True)
class SpectralDecomposition:
    grid: Grid
    eigenvalues: np.ndarray = field(repr=False)   # ascending, clipped at 0
    basis: np.ndarray = field(repr=False)         # columns orthonormal wrt h^n inner product
    potential: PotentialSpec
    has_zero_mode: bool

    @property
    def positive_min(self) -> float:
        pos = self.eigenvalues[self.eigenvalues > 1e-12]
        return float(pos[0])

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])

    def coefficients(self, values: np.ndarray) -> np.ndarray:
        """Expansion coefficients <f, phi_k> under the weighted inner product."""
        return (self.basis.T @ values) * self.grid.cell_weight

    def synthesize(self, coeff: np.ndarray) -> np.ndarray:
        return self.basis @ coeff


@dataclass(frozen=True)
class KernelSlice:
    grid: Grid
    time: float
    table: np.ndarray = field(repr=False)   # (N, N), 1/volume units
    route: str
    params: dict = field(default_factory=dict)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.table)))

    def row_masses(self) -> np.ndarray:
        """integral of K(x, y) dy per x."""
        return np.sum(self.table, axis=1) * self.grid.cell_weight


def _laplacian_1d(M: int, h: float, periodic: bool) -> np.ndarray:
    A = np.zeros((M, M))
    idx = np.arange(M)
    A[idx, idx] = 2.0 / h ** 2
    A[idx[:-1], idx[:-1] + 1] = -1.0 / h ** 2
    A[idx[1:], idx[1:] - 1] = -1.0 / h ** 2
    if periodic:
        A[0, M - 1] = A[M - 1, 0] = -1.0 / h ** 2
    return A


def assemble(grid: Grid, spec: PotentialSpec) -> DiscreteOperator:
    """Stencil Laplacian plus diagonal potential on the grid's point ordering."""
    n, M, h = grid.dimension, grid.points_per_axis, grid.spacing
    if M > SIZE_CAPS[n]:
        raise ValueError(f"points_per_axis {M} exceeds the dense-solver cap {SIZE_CAPS[n]} for n={n}")
    A1 = _laplacian_1d(M, h, grid.bc == "periodic")
    eye = np.eye(M)
    if n == 1:
        lap = A1
    elif n == 2:
        lap = np.kron(A1, eye) + np.kron(eye, A1)
    else:
        lap = (np.kron(np.kron(A1, eye), eye)
               + np.kron(np.kron(eye, A1), eye)
               + np.kron(np.kron(eye, eye), A1))
    matrix = lap + np.diag(eval_on_grid(spec, grid))
    return DiscreteOperator(grid, matrix, spec)


def eigendecompose(op: DiscreteOperator) -> SpectralDecomposition:
    sym_defect = np.max(np.abs(op.matrix - op.matrix.T))
    if sym_defect > 1e-12:
        raise ValueError(f"operator not symmetric (defect {sym_defect:.2e})")
    lam, vec = scipy.linalg.eigh(op.matrix)
    if lam[0] < -1e-10:
        raise RuntimeError(f"negative eigenvalue {lam[0]:.3e} from the dense solver")
    lam = np.clip(lam, 0.0, None)
    # snap zero-mode roundoff to an exact zero so multipliers like sqrt(lam) vanish
    lam[lam <= 1e-12 * max(lam[-1], 1.0)] = 0.0
    # eigh returns l2-orthonormal columns; rescale to the h^n-weighted inner product
    basis = vec / np.sqrt(op.grid.cell_weight)
    has_zero = bool(lam[0] <= 1e-10 * max(lam[-1], 1.0))
    return SpectralDecomposition(op.grid, lam, basis, op.potential, has_zero)


def multiplier_kernel(dec: SpectralDecomposition, multiplier, t: float,
                      route: str = ROUTE_SPECTRAL, **params) -> KernelSlice:
    """K(x, y) = sum_k m(lam_k) phi_k(x) phi_k(y) for a bounded multiplier m."""
    m = np.asarray(multiplier(dec.eigenvalues), dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier not finite on the spectrum")
    table = (dec.basis * m[None, :]) @ dec.basis.T
    return KernelSlice(dec.grid, float(t), table, route, params)


def heat_kernel(dec: SpectralDecomposition, t: float) -> KernelSlice:
    return multiplier_kernel(dec, lambda lam: np.exp(-t * lam), t, kind="heat")


def fractional_heat_kernel(dec: SpectralDecomposition, alpha: float, t: float) -> KernelSlice:
    return multiplier_kernel(dec, lambda lam: np.exp(-t * lam ** alpha), t,
                             kind="fractional_heat", alpha=alpha)


def poisson_kernel(dec: SpectralDecomposition, t: float) -> KernelSlice:
    return multiplier_kernel(dec, lambda lam: np.exp(-t * np.sqrt(lam)), t, kind="poisson")


def heat_power_kernel(dec: SpectralDecomposition, m: int, t: float) -> KernelSlice:
    """t^m d_t^m of the heat kernel: multiplier t^m (-lam)^m e^{-t lam}."""
    return multiplier_kernel(dec, lambda lam: (t * lam) ** m * (-1.0) ** m * np.exp(-t * lam),
                             t, kind="heat_power", m=m)


def frac_heat_power_kernel(dec: SpectralDecomposition, alpha: float, m: int,
                           t: float) -> KernelSlice:
    """t^m d_t^m of the fractional heat kernel (multiplier route)."""
    def mult(lam):
        la = lam ** alpha
        return (-t * la) ** m * np.exp(-t * la)
    return multiplier_kernel(dec, mult, t, kind="frac_heat_power", alpha=alpha, m=m)


def mth_time_derivative_kernel(dec: SpectralDecomposition, alpha: float, m: int,
                               t: float) -> KernelSlice:
    """d_t^m e^{-t L^alpha} without the t^m scaling."""
    def mult(lam):
        la = lam ** alpha
        return (-la) ** m * np.exp(-t * la)
    return multiplier_kernel(dec, mult, t, kind="mth_derivative", alpha=alpha, m=m)


def apply_kernel(K: KernelSlice, f: GridFunction) -> GridFunction:
    if f.grid.size != K.grid.size:
        raise ValueError("kernel and function live on different grids")
    return grid_function(K.grid, (K.table @ f.values) * K.grid.cell_weight)


def apply_multiplier(dec: SpectralDecomposition, multiplier, values: np.ndarray) -> np.ndarray:
    """m(L) f without forming the kernel table."""
    coeff = dec.coefficients(values)
    return dec.synthesize(np.asarray(multiplier(dec.eigenvalues)) * coeff)


def compose(K1: KernelSlice, K2: KernelSlice) -> KernelSlice:
    """Chapman-Kolmogorov composition (K1 o K2)(x, y) = int K1(x,z) K2(z,y) dz."""
    table = K1.table @ K2.table * K1.grid.cell_weight
    return KernelSlice(K1.grid, K1.time + K2.time, table, K1.route,
                       {"composed": True})
