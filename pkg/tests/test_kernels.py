import math

import numpy as np
import pytest
from scipy import special

from semihartree.grid import Field, make_grid
from semihartree.kernels import (box_average_transform, build_kernel, hartree_potential, local_power_potential,
                                 riesz_constant, truncated_transform)

# transform of |x|^-gamma on the ball |x| < D, from adaptive radial quadrature (scipy.integrate.quad)
BALL_TRANSFORM = [
    (1, 0.5, 4.0, 0.0, 3.1915382432114603),
    (1, 0.5, 4.0, 0.7, 1.449662990513785),
    (1, 0.5, 4.0, 3.1, 0.5417455422399303),
    (2, 1.5, 6.0, 0.0, 4.898979485566356),
    (2, 1.5, 6.0, 0.7, 2.4916238821508347),
    (2, 1.5, 6.0, 3.1, 1.1666799580974048),
    (2, 0.5, 6.0, 0.7, 0.48559738673731095),
    (2, 0.5, 6.0, 3.1, -0.03854695350954306),
    (3, 1.0, 5.0, 0.0, 9.973557010035817),
    (3, 1.0, 5.0, 0.7, 3.1532018233730383),
    (3, 1.0, 5.0, 3.1, 0.1642640449792043),
]


@pytest.mark.parametrize("n,gamma,D,xi,expected", BALL_TRANSFORM)
def test_truncated_transform_matches_quadrature(n, gamma, D, xi, expected):
    got = truncated_transform(n, gamma, D, np.array([xi]))[0]
    assert got == pytest.approx(expected, abs=1e-11)


def test_riesz_constant_known_values():
    # 2D Coulomb: F|x|^-1 = |xi|^-1 ; 3D Coulomb: F|x|^-1 = sqrt(2/pi) |xi|^-2
    assert riesz_constant(2, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert riesz_constant(3, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)


def test_truncated_tends_to_riesz_for_large_radius():
    # oscillatory tail averages out; check at xi = 1 for n = 3, gamma = 2 (tail ~ cos(D)/D)
    vals = truncated_transform(3, 2.0, 400.0, np.array([1.0]))
    assert vals[0] == pytest.approx(riesz_constant(3, 2.0), abs=5e-3)


def test_box_average_1d_closed_form():
    assert box_average_transform(1, 0.5, 4.0) == pytest.approx(2 * 2 / 0.5 / math.sqrt(2 * math.pi), rel=1e-14)


def _gauss(grid):
    return Field(grid, np.exp(-grid.r2 / 2))  # density exp(-|x|^2)


def test_potential_of_gaussian_2d_coulomb():
    # |x|^-1 * exp(-|y|^2) = pi^(3/2) exp(-r^2/2) I0(r^2/2)
    g = make_grid(2, 64, 8.0)
    v = hartree_potential(build_kernel(g, 1.0), _gauss(g)).values.real
    r2 = g.r2
    exact = math.pi ** 1.5 * special.i0e(r2 / 2)
    inner = r2 < 9.0
    assert np.max(np.abs(v - exact)[inner]) < 1e-10


def test_potential_of_gaussian_3d_coulomb():
    # |x|^-1 * exp(-|y|^2) = pi^(3/2) erf(r) / r
    g = make_grid(3, 32, 6.0)
    v = hartree_potential(build_kernel(g, 1.0), _gauss(g)).values.real
    r = np.sqrt(g.r2)
    exact = np.where(r > 0, math.pi ** 1.5 * special.erf(r) / np.where(r > 0, r, 1), 2 * math.pi)
    inner = r < 1.5   # the kernel is cut at |x| = L = 6; farther density is not seen
    assert np.max(np.abs(v - exact)[inner]) < 1e-9


@pytest.mark.parametrize("n,gamma,expected", [(1, 0.5, special.gamma(0.25)),
                                              (2, 0.5, math.pi * special.gamma(0.75)),
                                              (2, 1.5, math.pi * special.gamma(0.25))])
def test_potential_at_origin(n, gamma, expected):
    g = make_grid(n, 64, 8.0)
    v = hartree_potential(build_kernel(g, gamma), _gauss(g)).values.real
    assert v[(32,) * n] == pytest.approx(expected, rel=1e-10)


def test_finite_part_rule_differs_but_is_close():
    g = make_grid(2, 64, 8.0)
    exact = hartree_potential(build_kernel(g, 1.0), _gauss(g)).values.real
    fp = hartree_potential(build_kernel(g, 1.0, "finite-part"), _gauss(g)).values.real
    rel = np.max(np.abs(fp - exact)) / np.max(np.abs(exact))
    assert 1e-4 < rel < 0.1


def test_kernel_radial_symmetry_and_realness():
    g = make_grid(2, 32, 6.0)
    x, y = g.coords
    u = Field(g, np.exp(-(x ** 2 + y ** 2) / 2))
    v = hartree_potential(build_kernel(g, 0.7), u).values
    assert np.max(np.abs(v.imag)) == 0.0
    core = v[1:, 1:]
    assert np.max(np.abs(core - core.T)) < 1e-12
    assert np.max(np.abs(core - core[::-1, :])) < 1e-12


def test_build_kernel_rejects():
    g = make_grid(2, 32, 6.0)
    with pytest.raises(ValueError):
        build_kernel(g, 2.0)
    with pytest.raises(ValueError):
        build_kernel(g, 0.0)
    with pytest.raises(ValueError):
        build_kernel(g, 1.0, "bogus")
    with pytest.raises(ValueError):
        build_kernel(make_grid(1, 32, 6.0), 1.2)


def test_local_power():
    g = make_grid(2, 32, 6.0)
    u = Field(g, 2.0 * np.ones(g.shape))
    assert np.allclose(local_power_potential(u, 0.5).values, 2.0)
    with pytest.raises(ValueError):
        local_power_potential(u, 1.0)
