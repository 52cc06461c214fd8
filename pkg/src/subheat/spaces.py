"""Campanato/BMO norms, Hardy atoms, square functions and Carleson measures.

Everything here runs on the shared eigenbasis: the semigroup building block
t^beta d_t^beta e^{-t L^alpha} acts as the multiplier (t lam^alpha)^beta
e^{-t lam^alpha}, time integrals dt/t are log-trapezoid sums whose endpoint
truncation is controlled per mode by incomplete-Gamma tails, and ball
quantities use the discrete ball measure |B| = #members * h^n.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from .fracderiv import gradient_of_function
from .grid import Ball, Grid, GridFunction, ball_points, grid_function
from .spectral import SpectralDecomposition

MIN_TIME_NODES = 16


@dataclass(frozen=True)
class BmoParams:
    gamma: float
    inner_fraction: float = 0.5
    n_radii: int = 12

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("exponent gamma must lie in (0, 1]")


@dataclass(frozen=True)
class Atom:
    function: GridFunction
    ball: Ball
    p: float
    cancellation: bool


@dataclass(frozen=True)
class SpaceTimeField:
    grid: Grid
    times: np.ndarray                 # (J,), increasing
    values: np.ndarray = field(repr=False)   # (J, N)
    weights: np.ndarray = field(repr=False)  # (J,), trapezoid weights for dt/t

    def __post_init__(self):
        if self.times.size < MIN_TIME_NODES:
            raise ValueError(f"need at least {MIN_TIME_NODES} time slices")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("space-time field must be finite")


def default_time_grid(dec: SpectralDecomposition, alpha: float, beta: float,
                      n_times: int = 64, tol: float = 1e-8) -> np.ndarray:
    """Log-spaced times whose per-mode Gamma-integral tails stay below tol."""
    lam_max = max(dec.lam_max, 1.0)
    lam_min = dec.positive_min
    u_min = (2.0 * beta * tol * _gamma(2.0 * beta) * 2.0 ** (-2.0 * beta)) ** (1.0 / (2.0 * beta))
    u_max = 20.0 * (1.0 + beta) + np.log(1.0 / tol)
    t_min = u_min / lam_max ** alpha
    t_max = u_max / lam_min ** alpha
    return np.geomspace(t_min, t_max, n_times)


def _log_trapezoid_weights(times: np.ndarray) -> np.ndarray:
    lt = np.log(times)
    w = np.zeros_like(lt)
    w[1:-1] = 0.5 * (lt[2:] - lt[:-2])
    w[0] = 0.5 * (lt[1] - lt[0])
    w[-1] = 0.5 * (lt[-1] - lt[-2])
    return w


def _d_multipliers(dec: SpectralDecomposition, alpha: float, beta: float,
                   times: np.ndarray) -> np.ndarray:
    la = dec.eigenvalues ** alpha
    tl = np.outer(times, la)
    return tl ** beta * np.exp(-tl)        # zero mode contributes 0 for beta > 0


def d_field(dec: SpectralDecomposition, alpha: float, beta: float,
            f: GridFunction, times: np.ndarray) -> SpaceTimeField:
    """t^beta d_t^beta e^{-t L^alpha} f on the time ladder, with dt/t weights."""
    coeff = dec.coefficients(f.values)
    mult = _d_multipliers(dec, alpha, beta, times)
    values = (mult * coeff[None, :]) @ dec.basis.T
    return SpaceTimeField(dec.grid, times, values, _log_trapezoid_weights(times))


def ball_family(grid: Grid, rho_values: np.ndarray, params: BmoParams,
                stride: int | None = None) -> list[Ball]:
    """Grid-centered balls, log-spaced radii plus the critical radius, inside the inner box."""
    limit = params.inner_fraction * grid.half_width
    idx = np.nonzero(np.all(np.abs(grid.points) <= limit, axis=1))[0]
    stride = stride if stride is not None else max(1, grid.points_per_axis // 64)
    idx = idx[::stride]
    radii = np.geomspace(2.0 * grid.spacing, limit, params.n_radii)
    balls = []
    for i in idx:
        center = grid.points[i]
        rset = list(radii)
        rho_c = rho_values[i]
        if np.isfinite(rho_c) and 2.0 * grid.spacing < rho_c < limit:
            rset.append(rho_c)
        for r in rset:
            if np.max(np.abs(center)) + r <= limit:
                balls.append(ball_points(grid, center, r))
    if not balls:
        raise ValueError("no admissible balls in the inner box")
    return balls


def _ball_measure(grid: Grid, ball: Ball) -> float:
    return ball.members.size * grid.cell_weight


def bmo_norm(f: GridFunction, params: BmoParams, rho_values: np.ndarray,
             balls: list[Ball] | None = None) -> float:
    """sup_B |B|^(-1-gamma/n) int_B |f - f(B, V)|: mean on small balls, raw size above rho."""
    grid = f.grid
    if not np.all(np.isfinite(f.values)):
        raise ValueError("bmo_norm requires finite values")
    balls = balls if balls is not None else ball_family(grid, rho_values, params)
    n, w = grid.dimension, grid.cell_weight
    best = 0.0
    for ball in balls:
        vals = f.values[ball.members]
        i_center = int(np.argmin(grid.distances_from(ball.center)))
        reference = vals.mean() if ball.radius < rho_values[i_center] else 0.0
        measure = _ball_measure(grid, ball)
        osc = np.sum(np.abs(vals - reference)) * w
        best = max(best, osc / measure ** (1.0 + params.gamma / n))
    return best


def lipschitz_norm(f: GridFunction, gamma: float, rho_values: np.ndarray,
                   stride: int | None = None) -> float:
    """max of the Holder seminorm and sup |f| / rho^gamma over sampled points."""
    grid = f.grid
    stride = stride if stride is not None else max(1, grid.points_per_axis // 128)
    idx = np.arange(grid.size)[::stride]
    pts, vals = grid.points[idx], f.values[idx]
    diff = np.abs(vals[:, None] - vals[None, :])
    dist = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    mask = dist > 0
    holder = float(np.max(diff[mask] / dist[mask] ** gamma))
    # adjacent pairs capture the local seminorm missed by the coarse sample
    fine = np.abs(np.diff(f.values)) / grid.spacing ** gamma if grid.dimension == 1 else [0.0]
    holder = max(holder, float(np.max(fine)))
    size = float(np.max(np.abs(f.values) / rho_values ** gamma))
    return max(holder, size)


def make_atom(grid: Grid, ball: Ball, gamma: float, rho_at_center: float,
              kind: str = "oscillating") -> Atom:
    """Normalized Hardy atom on a ball: sup bound, support, and small-ball cancellation."""
    n = grid.dimension
    p = n / (n + gamma)
    if ball.radius > rho_at_center:
        raise ValueError("atom balls must satisfy r_B <= rho(x_B)")
    if kind not in ("oscillating", "plain"):
        raise ValueError(f"unknown atom kind {kind!r}")
    if kind == "plain" and ball.radius < rho_at_center / 4.0:
        raise ValueError("plain atoms need r_B >= rho(x_B)/4 (cancellation is mandatory below)")
    xi = grid.distances_from(ball.center) / ball.radius
    bump = np.where(xi < 1.0, np.cos(0.5 * np.pi * np.clip(xi, 0.0, 1.0)) ** 2, 0.0)
    values = np.zeros(grid.size)
    values[ball.members] = bump[ball.members]
    if kind == "oscillating":
        axis = grid.points[:, 0] - ball.center[0]
        values = values * np.sin(np.pi * axis / ball.radius)
        values[ball.members] -= values[ball.members].mean()
    sup = np.max(np.abs(values))
    if sup == 0.0:
        raise ValueError("degenerate atom profile")
    target = _ball_measure(grid, ball) ** (-1.0 / p)
    values *= target / sup
    return Atom(grid_function(grid, values), ball, p, kind == "oscillating")


def g_function(dec: SpectralDecomposition, alpha: float, beta: float,
               f: GridFunction, times: np.ndarray | None = None) -> GridFunction:
    """Vertical square function (int |t^b d_t^b e^{-tL^a} f|^2 dt/t)^(1/2)."""
    times = times if times is not None else default_time_grid(dec, alpha, beta)
    fld = d_field(dec, alpha, beta, f, times)
    g2 = fld.weights @ fld.values ** 2
    return grid_function(dec.grid, np.sqrt(g2))


def g_constant(beta: float) -> float:
    """int_0^inf u^(2b) e^(-2u) du/u = Gamma(2b)/2^(2b), as an L^2 multiplier."""
    return 2.0 ** (-beta) * np.sqrt(_gamma(2.0 * beta))


def area_function(dec: SpectralDecomposition, alpha: float, beta: float,
                  f: GridFunction, times: np.ndarray | None = None) -> GridFunction:
    """Cone square function: aggregate |D f|^2 over |x - y| < t^(1/2 alpha)."""
    times = times if times is not None else default_time_grid(dec, alpha, beta)
    fld = d_field(dec, alpha, beta, f, times)
    grid = dec.grid
    n, h, w = grid.dimension, grid.spacing, grid.cell_weight
    out = np.zeros(grid.size)
    for t_j, w_j, row in zip(times, fld.weights, fld.values):
        radius = t_j ** (1.0 / (2.0 * alpha))
        sq = row ** 2
        if n == 1:
            half = int(np.floor(radius / h - 0.5)) if radius >= h else 0
            window = _sliding_window_sum(sq, half)
        else:
            dist = grid.pair_distances()
            window = (dist < radius) @ sq
        out += w_j * window * w / t_j ** (n / (2.0 * alpha))
    return grid_function(grid, np.sqrt(out))


def _sliding_window_sum(values: np.ndarray, half: int) -> np.ndarray:
    if half <= 0:
        return values.copy()
    c = np.concatenate(([0.0], np.cumsum(values)))
    N = values.size
    lo = np.clip(np.arange(N) - half, 0, N)
    hi = np.clip(np.arange(N) + half + 1, 0, N)
    return c[hi] - c[lo]


def quasi_norm(f: GridFunction, p: float) -> float:
    """L^p quasi-norm for 0 < p <= 1 with the grid measure."""
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell_weight) ** (1.0 / p))


def carleson_norm(fld: SpaceTimeField, kappa: float, balls: list[Ball],
                  box_exponent: float = 1.0) -> float:
    """sup_B nu(B x (0, r_B^e)) / |B|^kappa for the squared-density field."""
    grid = fld.grid
    w = grid.cell_weight
    best = 0.0
    for ball in balls:
        cut = ball.radius ** box_exponent
        sel = fld.times <= cut
        if not np.any(sel):
            continue
        mass = float(fld.weights[sel] @ np.sum(fld.values[np.ix_(sel, ball.members)],
                                               axis=1)) * w
        best = max(best, mass / _ball_measure(grid, ball) ** kappa)
    if best == 0.0 and not balls:
        raise ValueError("no admissible ball")
    return best


def reproducing_check(dec: SpectralDecomposition, alpha: float, beta: float,
                      f: GridFunction, times: np.ndarray | None = None) -> float:
    """Relative L^2 residual of c * int (t^b d_t^b e^{-tL^a})^2 f dt/t = f."""
    times = times if times is not None else default_time_grid(dec, alpha, beta)
    coeff = dec.coefficients(f.values)
    if dec.has_zero_mode and abs(coeff[0]) > 1e-10 * max(np.linalg.norm(coeff), 1e-300):
        raise ValueError("zero-mode contamination: project the mean out of f first")
    mult = _d_multipliers(dec, alpha, beta, times) ** 2
    weights = _log_trapezoid_weights(times)
    integral = weights @ mult                     # per eigenvalue
    c = 2.0 ** (2.0 * beta) / _gamma(2.0 * beta)
    recon = dec.synthesize(c * integral * coeff)
    num = np.sqrt(np.sum((recon - f.values) ** 2))
    den = np.sqrt(np.sum(f.values ** 2))
    return float(num / den)


def duality_pairing_check(f: GridFunction, atom: Atom, dec: SpectralDecomposition,
                          alpha: float, beta: float,
                          times: np.ndarray | None = None):
    """Upper-half-space pairing over C_{a,b} <f, a>; 1.0 when the identity holds.

    Returns None for (numerically) orthogonal pairs.
    """
    times = times if times is not None else default_time_grid(dec, alpha, beta)
    w = dec.grid.cell_weight
    inner = float(np.sum(f.values * atom.function.values) * w)
    if abs(inner) < 1e-12:
        return None
    cf = dec.coefficients(f.values)
    ca = dec.coefficients(atom.function.values)
    mult = _d_multipliers(dec, alpha, beta, times) ** 2
    weights = _log_trapezoid_weights(times)
    pairing = float(np.sum((weights @ mult) * cf * ca))
    c = _gamma(2.0 * beta) / 2.0 ** (2.0 * beta)
    return pairing / (c * inner)


def nabla_alpha_field(dec: SpectralDecomposition, alpha: float, f: GridFunction,
                      times: np.ndarray):
    """|t^(1/2a) grad_x u|, |t^(1/2a) d_t^(1/2a) u| magnitudes per time, (J, N) each."""
    coeff = dec.coefficients(f.values)
    la = dec.eigenvalues ** alpha
    grads = np.empty((times.size, dec.grid.size))
    timeparts = np.empty_like(grads)
    for j, t in enumerate(times):
        u = dec.synthesize(np.exp(-t * la) * coeff)
        gf = gradient_of_function(grid_function(dec.grid, u))
        t_sc = t ** (1.0 / (2.0 * alpha))
        grads[j] = t_sc * gf.magnitude()
        timeparts[j] = t_sc * np.abs(
            dec.synthesize(np.sqrt(dec.eigenvalues) * np.exp(-t * la) * coeff))
    return grads, timeparts


def carleson_field_nu_alpha(dec: SpectralDecomposition, alpha: float,
                            f: GridFunction, times: np.ndarray) -> SpaceTimeField:
    """Squared density of |t grad e^{-t^(2a) L^a} f|^2 dx dt/t in semigroup time.

    With s = t^(2 alpha): |t grad_x|^2 = s^(1/alpha) |grad_x v(s)|^2 and
    |t d_t|^2 = 4 alpha^2 |s d_s v(s)|^2, while dt/t = ds/(2 alpha s); the
    1/(2 alpha) substitution factor is folded into the stored values.
    """
    coeff = dec.coefficients(f.values)
    la = dec.eigenvalues ** alpha
    vals = np.empty((times.size, dec.grid.size))
    for j, s in enumerate(times):
        v = dec.synthesize(np.exp(-s * la) * coeff)
        gf = gradient_of_function(grid_function(dec.grid, v))
        gsq = s ** (1.0 / alpha) * gf.magnitude() ** 2
        dsq = 4.0 * alpha ** 2 * (s * dec.synthesize(la * np.exp(-s * la) * coeff)) ** 2
        vals[j] = (gsq + dsq) / (2.0 * alpha)
    return SpaceTimeField(dec.grid, times, vals, _log_trapezoid_weights(times))


def make_equivalence_suite(dec: SpectralDecomposition, rho_values: np.ndarray,
                           gamma: float, seed: int = 0, count: int = 10) -> list[GridFunction]:
    """Functions with spread-out Campanato norms: truncated Holder profiles,
    atoms and random low-frequency combinations."""
    grid = dec.grid
    rng = np.random.default_rng(seed)
    x = grid.points
    L = grid.half_width
    suite: list[GridFunction] = []
    window = np.cos(0.5 * np.pi * np.clip(np.linalg.norm(x, axis=1) / L, 0.0, 1.0)) ** 2
    for c in (0.0, -2.5, 4.0):
        prof = np.minimum(np.linalg.norm(x - c, axis=1), 6.0) ** gamma
        suite.append(grid_function(grid, prof * window))
    for center, radius in ((-3.0, 0.5), (1.0, 0.35), (5.0, 0.6)):
        radius = max(radius, 2.2 * grid.spacing)
        ctr = np.full(grid.dimension, center)
        i_c = int(np.argmin(grid.distances_from(ctr)))
        r_at = rho_values[i_c] if np.isfinite(rho_values[i_c]) else radius * 4
        if radius > r_at:
            continue    # coarse grids cannot host sub-critical atoms
        ball = ball_points(grid, ctr, radius)
        atom = make_atom(grid, ball, gamma, r_at, kind="oscillating")
        suite.append(atom.function)
    k_low = min(12, grid.size - 1)
    while len(suite) < count:
        coeff = np.zeros(grid.size)
        start = 1 if dec.has_zero_mode else 0
        coeff[start:start + k_low] = rng.standard_normal(k_low)
        suite.append(grid_function(grid, dec.synthesize(coeff)))
    return suite


def equivalence_experiment(suite: list[GridFunction], dec: SpectralDecomposition,
                           alpha: float, beta: float, gamma: float,
                           rho_values: np.ndarray,
                           times: np.ndarray | None = None) -> dict:
    """The five Campanato-type functionals per suite member, with ratio ranges.

    N1 Campanato norm; N2 sup_t t^(-g/2a) |D f|_inf; N3 the Carleson-box
    quantity of the D-field; N4 sup_t t^(-g/2a) |t^(1/2a) nabla_alpha u|_inf;
    N5 the Carleson norm of the gradient measure. Desk-scale reading of the
    equivalence theorems: all ratios against N1 in one bounded interval.
    """
    if not gamma < min(2.0 * alpha, 2.0 * alpha * beta):
        raise ValueError("need gamma < min(2 alpha, 2 alpha beta)")
    if len(suite) < 1:
        raise ValueError("empty suite")
    grid = dec.grid
    times = times if times is not None else default_time_grid(dec, alpha, beta)
    params = BmoParams(gamma)
    balls = ball_family(grid, rho_values, params)
    kappa = 1.0 + 2.0 * gamma / grid.dimension
    g_over_a = gamma / (2.0 * alpha)
    from .grid import boundary_layer_mask, inner_box_mask
    interior = inner_box_mask(grid, 0.75) & ~boundary_layer_mask(grid)
    rows = []
    for f in suite:
        n1 = bmo_norm(f, params, rho_values, balls)
        if n1 == 0.0:
            continue
        fld = d_field(dec, alpha, beta, f, times)
        sup_d = np.max(np.abs(fld.values[:, interior]), axis=1)
        n2 = float(np.max(times ** (-g_over_a) * sup_d))
        n3 = np.sqrt(carleson_norm(
            SpaceTimeField(grid, times, fld.values ** 2, fld.weights),
            kappa, balls, box_exponent=2.0 * alpha))
        grads, timeparts = nabla_alpha_field(dec, alpha, f, times)
        mags = np.sqrt(grads ** 2 + timeparts ** 2)
        n4 = float(np.max(times ** (-g_over_a) * np.max(mags[:, interior], axis=1)))
        nu = carleson_field_nu_alpha(dec, alpha, f, times)
        n5 = np.sqrt(carleson_norm(nu, kappa, balls, box_exponent=2.0 * alpha))
        rows.append({"N1": n1, "N2": n2, "N3": n3, "N4": n4, "N5": n5})
    if not rows:
        raise ValueError("every suite member had vanishing Campanato norm")
    ratios = np.array([[row[k] / row["N1"] for k in ("N2", "N3", "N4", "N5")]
                       for row in rows])
    c_star = float(max(ratios.max(), 1.0 / ratios.min()))
    return {"rows": rows, "ratio_min": float(ratios.min()),
            "ratio_max": float(ratios.max()), "c_star": c_star}
