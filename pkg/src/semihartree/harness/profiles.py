"""Analytic initial data and the default lattice for a given eps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..grid import Field, Grid, make_grid, sigma_norm

PROFILE_NAMES = ("gaussian", "anisotropic", "polynomial")


@dataclass(frozen=True)
class ProfileSpec:
    """Gaussian a exp(-sum (x_i - c_i)^2 / 2 w_i^2), optionally times sum_k p_k x_0^k.

    ``target_sigma_norm`` rescales a so that ||f||_Sigma hits the value.
    """

    name: str = "gaussian"
    amplitude: float = 1.0
    widths: tuple = ()
    center: tuple = ()
    poly: tuple = ()
    target_sigma_norm: float | None = None

    def __post_init__(self):
        if self.name not in PROFILE_NAMES:
            raise ValueError(f"unknown profile {self.name!r}; choose from {PROFILE_NAMES}")
        if any(w <= 0 for w in self.widths):
            raise ValueError("widths must be positive")

    def _shape(self, grid: Grid) -> np.ndarray:
        n = grid.dim
        w = self.widths or (1.0,) * n
        if self.name == "anisotropic" and not self.widths:
            w = tuple(1.0 / (1.0 + 0.5 * i) for i in range(n))
        if len(w) != n:
            raise ValueError(f"need {n} widths, got {len(w)}")
        c = self.center or (0.0,) * n
        arg = sum((x - ci) ** 2 / (2.0 * wi * wi) for x, ci, wi in zip(grid.coords, c, w))
        out = np.exp(-arg).astype(complex)
        if self.name == "polynomial":
            coeffs = self.poly or (1.0, 0.0, 0.5)
            x0 = grid.coords[0]
            out = out * sum(p * x0 ** k for k, p in enumerate(coeffs))
        return out

    def sample(self, grid: Grid, epsilon: float = 1.0) -> Field:
        vals = self.amplitude * self._shape(grid)
        f = Field(grid, vals, epsilon)
        if self.target_sigma_norm is not None:
            f = f.scale(self.target_sigma_norm / sigma_norm(f))
        return f


def balanced_grid(dim: int, epsilon: float, points_per_unit: float = 16.0) -> Grid:
    """N = 2^ceil(log2(16/eps)) and L = sqrt(pi eps N / 2).

    Equal reach in x and in eps xi: both the spread profile at t = 0 and the
    focused profile at t = pi/2 then see the same Gaussian tail.
    """
    N = max(16, 2 ** math.ceil(math.log2(points_per_unit / epsilon - 1e-9)))
    return make_grid(dim, N, math.sqrt(math.pi * epsilon * N / 2.0))


def focus_width_resolved(grid: Grid, epsilon: float, support: float = 5.0, points: int = 8) -> bool:
    """At least ``points`` samples across the focal spot |x| <= support * eps."""
    return 2.0 * support * epsilon / grid.spacing >= points
