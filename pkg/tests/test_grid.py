import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semihartree.grid import (Field, boundary_mass, dilate, fourier_at, fourier_forward, fourier_inverse,
                              gauge_boost, gradient, h1_norm, inner_product, interp_matrix, l2, lp_norm,
                              make_grid, sigma_norm, spectral_shift)


def test_make_grid_spacing():
    g = make_grid(1, 64, 8.0)
    assert g.spacing == 0.25
    assert g.dual_spacing == pytest.approx(math.pi / 8, rel=1e-15)


def test_duality_identity():
    g = make_grid(2, 256, 10.0)
    assert g.spacing * g.dual_spacing * g.points_per_axis == pytest.approx(2 * math.pi, rel=1e-14)
    assert g.freq_axis[0] == pytest.approx(-math.pi / g.spacing)
    assert g.axis[0] == -10.0 and g.axis[-1] < 10.0


@pytest.mark.parametrize("args", [(1, 63, 8.0), (1, 8, 8.0), (4, 64, 1.0), (1, 64, 0.0), (2, 64, -1.0)])
def test_make_grid_rejects(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_field_invariants(grid2):
    with pytest.raises(ValueError):
        Field(grid2, np.zeros(10))
    bad = np.zeros(grid2.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Field(grid2, bad)
    with pytest.raises(ValueError):
        Field(grid2, np.zeros(grid2.shape), epsilon=1.5)
    u = Field(grid2, np.ones(grid2.shape))
    with pytest.raises(ValueError):
        u.values[0, 0] = 2


def test_fourier_of_gaussian_matches_analytic():
    # F exp(-|x|^2/2) = exp(-|xi|^2/2) in the unitary convention
    g = make_grid(2, 64, 8.0)
    x, y = g.coords
    uh = fourier_forward(Field(g, np.exp(-(x ** 2 + y ** 2) / 2)))
    kx, ky = uh.grid.coords
    assert np.max(np.abs(uh.values - np.exp(-(kx ** 2 + ky ** 2) / 2))) < 1e-13


def test_fourier_of_shifted_gaussian_phase():
    g = make_grid(1, 128, 10.0)
    x = g.axis
    uh = fourier_forward(Field(g, np.exp(-(x - 1.5) ** 2 / 2)))
    k = uh.grid.axis
    assert np.max(np.abs(uh.values - np.exp(-k ** 2 / 2 - 1.5j * k))) < 1e-12


def test_round_trip_and_plancherel(grid2):
    rng = np.random.default_rng(1)
    u = Field(grid2, rng.normal(size=grid2.shape) + 1j * rng.normal(size=grid2.shape))
    back = fourier_inverse(fourier_forward(u))
    assert np.max(np.abs(back.values - u.values)) < 1e-13
    assert lp_norm(fourier_forward(u)) == pytest.approx(lp_norm(u), rel=1e-13)


def test_fourier_at_agrees_with_lattice(grid2, gauss2):
    uh = fourier_forward(gauss2)
    direct = fourier_at(gauss2.values, grid2, uh.grid.axis)
    assert np.max(np.abs(direct - uh.values)) < 1e-13


def test_norms_of_gaussian(gauss2):
    # ||e^{-|x|^2/2}||_2^2 = pi, ||x u||^2 = pi, ||grad u||^2 = pi
    assert lp_norm(gauss2) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert sigma_norm(gauss2) == pytest.approx(3 * math.sqrt(math.pi), rel=1e-12)
    assert h1_norm(gauss2) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)
    # ||u||_4^4 = pi / 2
    assert lp_norm(gauss2, 4) == pytest.approx((math.pi / 2) ** 0.25, rel=1e-13)
    assert lp_norm(gauss2, np.inf) == 1.0
    with pytest.raises(ValueError):
        lp_norm(gauss2, 0.5)


def test_inner_product_conjugates_first(gauss2):
    v = gauss2.scale(1j)
    assert inner_product(gauss2, v) == pytest.approx(1j * math.pi, rel=1e-13)


def test_gradient_of_gaussian(grid2, gauss2):
    dx, dy = gradient(gauss2.values, grid2)
    x, y = grid2.coords
    assert np.max(np.abs(dx + x * gauss2.values)) < 1e-12


def test_spectral_shift_and_dilate(grid2, gauss2):
    x, y = grid2.coords
    s = spectral_shift(gauss2.values, grid2, [0.7, -0.3])
    assert np.max(np.abs(s - np.exp(-((x - 0.7) ** 2 + (y + 0.3) ** 2) / 2))) < 1e-11
    d = dilate(gauss2.values, grid2, 1.5)
    assert np.max(np.abs(d - np.exp(-(x ** 2 + y ** 2) / 4.5))) < 1e-11


def test_interp_matrix_reproduces_lattice():
    g = make_grid(1, 32, 4.0)
    m = interp_matrix(g, g.axis)
    assert np.max(np.abs(m - np.eye(32))) < 1e-12
    assert not np.any(interp_matrix(g, np.array([4.0, -4.1])))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.0, 6.3))
def test_gauge_boost_inverse_and_norm(a, b, t):
    g = make_grid(2, 64, 8.0)
    x, y = g.coords
    u = Field(g, np.exp(-(x ** 2 + y ** 2) / 2) * (1 + 0.2j * x), 0.5)
    v = gauge_boost(u, [a, b], t)
    assert lp_norm(v) == pytest.approx(lp_norm(u), rel=1e-12)
    w = gauge_boost(v, [a, b], t, "inverse")
    assert np.max(np.abs(w.values - u.values)) < 1e-11


def test_gauge_boost_rejects_unresolved(grid2, gauss2):
    with pytest.raises(ValueError):
        gauge_boost(gauss2.replace(epsilon=0.01), [1.0, 0.0], 0.3)
    with pytest.raises(ValueError):
        gauge_boost(gauss2, [0.1, 0.0], 0.3, "sideways")


def test_boundary_mass(grid2, gauss2):
    assert boundary_mass(gauss2.values, grid2) < 1e-24
    assert boundary_mass(np.ones(grid2.shape), grid2) == pytest.approx(1 - (60 / 64) ** 2)


def test_fourier_at_band_limited_drops_aliases():
    g = make_grid(1, 32, 8.0)
    u = np.exp(-g.axis ** 2 / 2)
    nyq = np.pi / g.spacing
    eta = np.array([0.0, 2 * nyq, 0.5 * nyq])
    raw = fourier_at(u, g, eta)
    assert abs(raw[1] - raw[0]) < 1e-12  # period 2 pi / dx
    bl = fourier_at(u, g, eta, band_limited=True)
    assert bl[1] == 0 and bl[0] == raw[0] and bl[2] == raw[2]
