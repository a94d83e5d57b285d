"""Hartree convolution |x|^-gamma * |u|^2 as a Fourier multiplier, and the local power term."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy import integrate, special

from .grid import Field, Grid

log = logging.getLogger(__name__)

ZERO_MODE_RULES = ("truncated", "finite-part", "zero")

_SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}


def riesz_constant(n: int, gamma: float) -> float:
    """c(n, gamma) with F(|x|^-gamma) = c |xi|^(gamma - n) in the unitary convention."""
    return 2.0 ** (n / 2 - gamma) * special.gamma((n - gamma) / 2) / special.gamma(gamma / 2)


def _radial_profile(n: int, z: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.cos(z)
    if n == 2:
        return special.j0(z)
    return np.sinc(z / np.pi)


def truncated_transform(n: int, gamma: float, radius: float, xi: np.ndarray) -> np.ndarray:
    """Continuum transform of |x|^-gamma restricted to the ball |x| < radius.

    Evaluated with Gauss-Jacobi quadrature in r, which absorbs the r^(n-1-gamma)
    endpoint behaviour exactly.
    """
    xi = np.asarray(xi, dtype=float)
    beta = n - 1 - gamma
    m = int(0.6 * float(np.max(xi, initial=0.0)) * radius) + 48
    s, w = special.roots_jacobi(m, 0.0, beta)
    r = radius * (1.0 + s) / 2.0
    pref = _SPHERE_AREA[n] / (2.0 * np.pi) ** (n / 2) * (radius / 2.0) ** (beta + 1.0)
    out = np.empty(xi.shape)
    flat = xi.ravel()
    res = out.ravel()
    step = max(1, 4_000_000 // m)
    for i in range(0, flat.size, step):
        z = np.outer(flat[i:i + step], r)
        res[i:i + step] = _radial_profile(n, z) @ w
    return pref * out


def box_average_transform(n: int, gamma: float, half_extent: float) -> float:
    """(2 pi)^(-n/2) int_{[-L,L]^n} |x|^-gamma dx, the cell-average zero mode."""
    L = half_extent
    if n == 1:
        total = 2.0 * L ** (1 - gamma) / (1 - gamma)
    elif n == 2:
        val, _ = integrate.quad(lambda th: (L / np.cos(th)) ** (2 - gamma), 0.0, np.pi / 4, epsabs=0, epsrel=1e-13)
        total = 8.0 * val / (2 - gamma)
    else:
        def inner(ph, th):
            d = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            return (L / np.max(np.abs(d))) ** (3 - gamma) * np.sin(th)

        val, _ = integrate.dblquad(inner, 0.0, np.pi, 0.0, 2 * np.pi, epsabs=0, epsrel=1e-11)
        total = val / (3 - gamma)
    return total / (2.0 * np.pi) ** (n / 2)


@dataclass(frozen=True)
class HartreeKernel:
    """Precomputed multiplier for convolution with |x|^-gamma on ``grid``.

    ``multiplier`` holds (2 pi)^(n/2) K_hat on the half-spectrum used by rfftn,
    so that the potential is irfftn(multiplier * rfftn(rho)).
    """

    gamma: float
    grid: Grid
    multiplier: np.ndarray = field(repr=False)
    zero_mode_rule: str = "truncated"
    radius: float = float("inf")

    def centered_multiplier(self) -> np.ndarray:
        """K_hat on the full centered lattice (for inspection)."""
        g = self.grid
        full = _khat_full(g, self.gamma, self.zero_mode_rule, self.radius)
        return sfft.fftshift(full) / (2.0 * np.pi) ** (g.dim / 2)


def _rfft_k2(grid: Grid) -> np.ndarray:
    n = grid.points_per_axis
    ks = [np.fft.fftfreq(n) * n] * (grid.dim - 1) + [np.fft.rfftfreq(n) * n]
    mesh = np.meshgrid(*ks, indexing="ij", sparse=True)
    return np.rint(sum(k * k for k in mesh)).astype(np.int64)


def _khat_from_index(grid: Grid, k2: np.ndarray, gamma: float, rule: str, radius: float) -> np.ndarray:
    n = grid.dim
    uniq, inv = np.unique(k2, return_inverse=True)
    xi = grid.dual_spacing * np.sqrt(uniq.astype(float))
    vals = np.empty(xi.shape)
    nz = uniq > 0
    if rule == "truncated":
        vals = truncated_transform(n, gamma, radius, xi)
    else:
        vals[nz] = riesz_constant(n, gamma) * xi[nz] ** (gamma - n)
        vals[~nz] = box_average_transform(n, gamma, grid.half_extent) if rule == "finite-part" else 0.0
    return ((2.0 * np.pi) ** (n / 2) * vals)[inv].reshape(k2.shape)


def _khat_full(grid: Grid, gamma: float, rule: str, radius: float) -> np.ndarray:
    n = grid.points_per_axis
    mesh = np.meshgrid(*([np.fft.fftfreq(n) * n] * grid.dim), indexing="ij", sparse=True)
    k2 = np.rint(sum(k * k for k in mesh)).astype(np.int64)
    return _khat_from_index(grid, k2, gamma, rule, radius)


@lru_cache(maxsize=16)
def _cached_multiplier(grid: Grid, gamma: float, rule: str, radius: float) -> np.ndarray:
    m = _khat_from_index(grid, _rfft_k2(grid), gamma, rule, radius)
    m.flags.writeable = False
    return m


def build_kernel(grid: Grid, gamma: float, zero_mode_rule: str = "truncated",
                 radius: float | None = None) -> HartreeKernel:
    """Multiplier for |x|^-gamma * rho on ``grid``.

    zero_mode_rule:
      "truncated"    transform of |x|^-gamma cut off at |x| = radius (default L);
                     reproduces the free-space convolution for data supported
                     well inside the box, including its additive constant.
      "finite-part"  c |xi|^(gamma-n) with the xi = 0 entry set so that the
                     periodic kernel has the box average of |x|^-gamma.
      "zero"         c |xi|^(gamma-n) with the xi = 0 entry removed.
    """
    n = grid.dim
    if not 0.0 < gamma < n:
        raise ValueError(f"gamma must lie in (0, {n}), got {gamma}")
    if zero_mode_rule not in ZERO_MODE_RULES:
        raise ValueError(f"unknown zero_mode_rule {zero_mode_rule!r}")
    if zero_mode_rule == "truncated" and n == 1 and gamma >= 1:
        raise ValueError("truncated rule needs gamma < 1 in one dimension")
    rad = float(grid.half_extent if radius is None else radius)
    mult = _cached_multiplier(grid, float(gamma), zero_mode_rule, rad)
    return HartreeKernel(float(gamma), grid, mult, zero_mode_rule, rad)


def potential_values(k: HartreeKernel, rho: np.ndarray) -> np.ndarray:
    """Raw-array form of the convolution, for use inside steppers."""
    return sfft.irfftn(k.multiplier * sfft.rfftn(rho), s=rho.shape)


def hartree_potential(k: HartreeKernel, u: Field) -> Field:
    """V = |x|^-gamma * |u|^2 (real)."""
    if not k.grid.same_as(u.grid):
        raise ValueError("field and kernel live on different grids")
    rho = np.abs(u.values) ** 2
    return u.replace(potential_values(k, rho))


def local_power_potential(u: Field, sigma: float) -> Field:
    """Pointwise |u|^(2 sigma), subcritical sigma in (0, 2/n)."""
    n = u.grid.dim
    if not 0.0 < sigma < 2.0 / n:
        raise ValueError(f"sigma must lie in (0, {2.0 / n}), got {sigma}")
    return u.replace(np.abs(u.values) ** (2.0 * sigma))
