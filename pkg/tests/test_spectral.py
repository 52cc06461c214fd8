import numpy as np
import pytest

from subheat.closedform import (gaussian_heat_table, gaussian_heat_value,
                                oscillator_heat_value, poisson_value)
from subheat.grid import build_grid, from_callable, grid_function
from subheat.potentials import constant, power, zero
from subheat.spectral import (apply_kernel, assemble, compose, eigendecompose,
                              fractional_heat_kernel, heat_kernel, multiplier_kernel,
                              poisson_kernel)


@pytest.fixture(scope="module")
def periodic_free():
    g = build_grid(1, 16.0, 256, "periodic")
    return eigendecompose(assemble(g, zero()))


@pytest.fixture(scope="module")
def dirichlet_flat():
    g = build_grid(1, 16.0, 256, "dirichlet")
    return eigendecompose(assemble(g, constant(1.0)))


def test_periodic_row_sums_vanish():
    g = build_grid(1, 16.0, 64, "periodic")
    op = assemble(g, zero())
    assert np.max(np.abs(op.matrix.sum(axis=1))) < 1e-10


def test_stencil_entries_with_flat_potential():
    g = build_grid(1, 16.0, 64, "periodic")
    op = assemble(g, constant(1.0))
    h = g.spacing
    assert op.matrix[3, 3] == pytest.approx(2.0 / h ** 2 + 1.0)
    assert op.matrix[3, 4] == pytest.approx(-1.0 / h ** 2)


def test_dirichlet_ground_state_vs_continuum():
    g = build_grid(1, 16.0, 256, "dirichlet")
    dec = eigendecompose(assemble(g, zero()))
    target = (np.pi / 32.0) ** 2
    assert dec.eigenvalues[0] == pytest.approx(target, rel=0.02)


def test_periodic_spectrum_is_discrete_fourier():
    g = build_grid(1, 16.0, 64, "periodic")
    dec = eigendecompose(assemble(g, zero()))
    h, M = g.spacing, g.points_per_axis
    ks = np.arange(M)
    expect = np.sort((2.0 / h ** 2) * (1.0 - np.cos(2.0 * np.pi * ks / M)))
    assert np.allclose(np.sort(dec.eigenvalues), expect, atol=1e-8)
    # nonzero eigenvalues come in pairs
    lam = np.sort(dec.eigenvalues)[1:-1]
    assert np.allclose(lam[::2], lam[1::2], atol=1e-8)


def test_constant_shift_of_spectrum():
    g = build_grid(1, 16.0, 64, "periodic")
    lam0 = eigendecompose(assemble(g, zero())).eigenvalues
    lam1 = eigendecompose(assemble(g, constant(3.0))).eigenvalues
    assert np.allclose(lam1, lam0 + 3.0, atol=1e-8)


def test_orthonormality_and_residual(dirichlet_flat):
    dec = dirichlet_flat
    gram = dec.basis.T @ dec.basis * dec.grid.cell_weight
    assert np.max(np.abs(gram - np.eye(dec.grid.size))) < 1e-8
    op = assemble(dec.grid, constant(1.0))
    resid = op.matrix @ dec.basis - dec.basis * dec.eigenvalues[None, :]
    scale = 1.0 + dec.eigenvalues[None, :]
    assert np.max(np.abs(resid) / scale) < 1e-8


def test_identity_multiplier_is_discrete_delta(dirichlet_flat):
    dec = dirichlet_flat
    K = multiplier_kernel(dec, lambda lam: np.ones_like(lam), 0.0)
    expect = np.eye(dec.grid.size) / dec.grid.cell_weight
    assert np.max(np.abs(K.table - expect)) < 1e-6


def test_wrapped_gaussian_diagonal_value():
    g = build_grid(1, 16.0, 512, "periodic")
    dec = eigendecompose(assemble(g, zero()))
    K = heat_kernel(dec, 1.0)
    diag = K.table[g.size // 2, g.size // 2]
    assert diag == pytest.approx((4.0 * np.pi) ** -0.5, abs=1e-4)


def test_poisson_equals_fractional_half(dirichlet_flat):
    dec = dirichlet_flat
    Kp = poisson_kernel(dec, 0.7)
    Kf = fractional_heat_kernel(dec, 0.5, 0.7)
    assert np.max(np.abs(Kp.table - Kf.table)) < 1e-12


def test_apply_kernel_eigenrelation(dirichlet_flat):
    dec = dirichlet_flat
    K = heat_kernel(dec, 0.5)
    k = 5
    phi = grid_function(dec.grid, dec.basis[:, k])
    out = apply_kernel(K, phi)
    assert np.max(np.abs(out.values - np.exp(-0.5 * dec.eigenvalues[k]) * phi.values)) < 1e-8


def test_delta_applied_returns_function(dirichlet_flat):
    dec = dirichlet_flat
    K = multiplier_kernel(dec, lambda lam: np.ones_like(lam), 0.0)
    f = from_callable(dec.grid, lambda p: np.exp(-p[:, 0] ** 2) * np.sin(p[:, 0]))
    out = apply_kernel(K, f)
    assert np.max(np.abs(out.values - f.values)) < 1e-8


def test_heat_conserves_constants_periodic(periodic_free):
    dec = periodic_free
    K = heat_kernel(dec, 1.0)
    ones = grid_function(dec.grid, np.ones(dec.grid.size))
    out = apply_kernel(K, ones)
    assert np.max(np.abs(out.values - 1.0)) < 1e-10


def test_kernel_axioms_positivity_symmetry(dirichlet_flat):
    dec = dirichlet_flat
    for t in (0.25, 1.0, 4.0):
        K = heat_kernel(dec, t)
        assert K.table.min() >= -1e-10
        assert np.max(np.abs(K.table - K.table.T)) <= 1e-8


def test_chapman_kolmogorov(dirichlet_flat):
    dec = dirichlet_flat
    for s in (0.25, 0.5, 1.0):
        for t in (0.25, 0.5, 1.0):
            direct = heat_kernel(dec, s + t)
            comp = compose(heat_kernel(dec, s), heat_kernel(dec, t))
            assert np.max(np.abs(direct.table - comp.table)) <= 1e-6


def test_approximate_identity(dirichlet_flat):
    dec = dirichlet_flat
    f = from_callable(dec.grid, lambda p: np.exp(-2.0 * p[:, 0] ** 2))
    errs = []
    for t in (1e-1, 1e-2, 1e-3):
        out = apply_kernel(heat_kernel(dec, t), f)
        errs.append(np.max(np.abs(out.values - f.values)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 5e-3


def test_mass_bounded_by_one_dirichlet(dirichlet_flat):
    dec = dirichlet_flat
    for t in (0.05, 0.25, 1.0, 4.0):
        masses = heat_kernel(dec, t).row_masses()
        assert masses.max() <= 1.0 + 1e-8


def test_fractional_semigroup_property(dirichlet_flat):
    dec = dirichlet_flat
    alpha = 0.7
    direct = fractional_heat_kernel(dec, alpha, 1.5)
    comp = compose(fractional_heat_kernel(dec, alpha, 0.5),
                   fractional_heat_kernel(dec, alpha, 1.0))
    assert np.max(np.abs(direct.table - comp.table)) <= 1e-8


def test_spectral_matches_oscillator_closed_form():
    g = build_grid(1, 16.0, 256, "dirichlet")
    dec = eigendecompose(assemble(g, power(2.0)))
    K = heat_kernel(dec, 0.5)
    x = g.points[:, 0]
    mask = np.abs(x) <= 4.0
    approx = K.table[np.ix_(mask, mask)]
    exact = oscillator_heat_value(x[mask][:, None], x[mask][None, :], 0.5)
    # O(h^2) stencil dispersion bounds the gap at this resolution
    assert np.max(np.abs(approx - exact)) < 2e-3


def test_closed_form_tables():
    g = build_grid(1, 16.0, 128, "dirichlet")
    K = gaussian_heat_table(g, 1.0)
    i = g.size // 2
    assert K.table[i, i] == pytest.approx((4 * np.pi) ** -0.5)
    r = np.abs(g.points[:, 0] - g.points[i, 0])
    assert np.allclose(K.table[i], gaussian_heat_value(r, 1.0, 1), rtol=1e-12)
    assert poisson_value(0.0, 1.0, 1) == pytest.approx(1.0 / np.pi)


def test_size_cap_enforced():
    assemble(build_grid(2, 8.0, 48, "periodic"), zero())  # at the cap, fine
    with pytest.raises(ValueError):
        assemble(build_grid(3, 2.0, 18, "dirichlet"), zero())
