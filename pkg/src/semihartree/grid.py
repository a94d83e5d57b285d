"""Periodic lattices, fields and the continuum-normalized Fourier transform.

The transform convention is

    F phi(xi) = (2 pi)^(-n/2) int exp(-i x.xi) phi(x) dx

approximated on the lattice with the quadrature weight dx^n, so analytic
transforms can be compared pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on [-L, L)^n with N points per axis."""

    dim: int
    points_per_axis: int
    half_extent: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    @property
    def dual_spacing(self) -> float:
        return np.pi / self.half_extent

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def cell(self) -> float:
        """Quadrature weight dx^n."""
        return self.spacing ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        """Centered frequencies -N/2 ... N/2-1 times d xi."""
        n = self.points_per_axis
        return self.dual_spacing * (np.arange(n) - n // 2)

    @cached_property
    def fft_freq_axis(self) -> np.ndarray:
        """Frequencies in the native FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, self.spacing)

    @cached_property
    def coords(self) -> tuple:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def r2(self) -> np.ndarray:
        return sum(c * c for c in self.coords) * np.ones(self.shape)

    @cached_property
    def k_fft(self) -> tuple:
        return tuple(np.meshgrid(*([self.fft_freq_axis] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def k2_fft(self) -> np.ndarray:
        return sum(k * k for k in self.k_fft) * np.ones(self.shape)

    def dual(self) -> "Grid":
        """Lattice carrying the frequency samples (half extent pi/dx)."""
        return Grid(self.dim, self.points_per_axis, np.pi / self.spacing)

    def same_as(self, other: "Grid") -> bool:
        return (self.dim == other.dim and self.points_per_axis == other.points_per_axis
                and np.isclose(self.half_extent, other.half_extent, rtol=1e-14, atol=0.0))


def make_grid(dim: int, points_per_axis: int, half_extent: float) -> Grid:
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    n = int(points_per_axis)
    if n != points_per_axis or n < 16 or n & (n - 1):
        raise ValueError(f"points_per_axis must be a power of two >= 16, got {points_per_axis}")
    if not half_extent > 0:
        raise ValueError(f"half_extent must be positive, got {half_extent}")
    return Grid(int(dim), n, float(half_extent))


@dataclass(frozen=True)
class Field:
    """Complex samples on a grid, tagged with epsilon and time. Immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    epsilon: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != self.grid.shape:
            if v.size != self.grid.points_per_axis ** self.grid.dim:
                raise ValueError(f"expected {self.grid.shape} samples, got shape {v.shape}")
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite samples")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def replace(self, values=None, time=None, epsilon=None, grid=None) -> "Field":
        return Field(self.grid if grid is None else grid,
                     self.values if values is None else values,
                     self.epsilon if epsilon is None else epsilon,
                     self.time if time is None else time)

    def __add__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return self.replace(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return self.replace(self.values - other.values)

    def scale(self, c) -> "Field":
        return self.replace(self.values * c)


def _check_same(u: Field, v: Field) -> None:
    if not u.grid.same_as(v.grid):
        raise ValueError("fields live on different grids")


# -- transforms -------------------------------------------------------------

def _fwd(values: np.ndarray, grid: Grid) -> np.ndarray:
    c = grid.cell / (2.0 * np.pi) ** (grid.dim / 2)
    return c * sfft.fftshift(sfft.fftn(sfft.ifftshift(values)))


def _inv(values: np.ndarray, grid: Grid) -> np.ndarray:
    # grid is the spatial grid; the inverse uses the dual weight d xi^n
    c = (grid.dual_spacing * grid.points_per_axis) ** grid.dim / (2.0 * np.pi) ** (grid.dim / 2)
    return c * sfft.fftshift(sfft.ifftn(sfft.ifftshift(values)))


def fourier_forward(u: Field) -> Field:
    """Samples of F u on the centered frequency lattice (returned on the dual grid)."""
    return u.replace(_fwd(u.values, u.grid), grid=u.grid.dual())


def fourier_inverse(uhat: Field) -> Field:
    """Inverse of fourier_forward; ``uhat`` lives on a dual grid."""
    space = uhat.grid.dual()
    return uhat.replace(_inv(uhat.values, space), grid=space)


def spectral_multiply(values: np.ndarray, grid: Grid, mult: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier given in native FFT ordering."""
    return sfft.ifftn(sfft.fftn(values) * mult)


def gradient(values: np.ndarray, grid: Grid) -> list:
    """Spectral gradient, one array per axis."""
    vh = sfft.fftn(values)
    return [sfft.ifftn(1j * k * vh) for k in grid.k_fft]


def spectral_shift(values: np.ndarray, grid: Grid, a) -> np.ndarray:
    """Return samples of x -> phi(x - a); exact for band-limited phi."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (grid.dim,))
    if not np.any(a):
        return np.array(values, dtype=complex)
    phase = np.exp(-1j * sum(k * ai for k, ai in zip(grid.k_fft, a)))
    return spectral_multiply(values, grid, phase)


# -- norms ------------------------------------------------------------------

def inner_product(u: Field, v: Field) -> complex:
    """<u, v> = int conj(u) v dx."""
    _check_same(u, v)
    return complex(np.vdot(u.values, v.values) * u.grid.cell)


def lp_norm(u: Field, p: float = 2.0) -> float:
    if p == np.inf:
        return float(np.max(np.abs(u.values))) if u.values.size else 0.0
    if p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    a = np.abs(u.values)
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * u.grid.cell))
    return float((np.sum(a ** p) * u.grid.cell) ** (1.0 / p))


def l2(values: np.ndarray, grid: Grid) -> float:
    a = np.abs(values)
    return float(np.sqrt(np.sum(a * a) * grid.cell))


def sigma_norm(u: Field) -> float:
    """||u||_2 + ||x u||_2 + ||grad u||_2."""
    g = u.grid
    xu = np.sqrt(np.sum(g.r2 * np.abs(u.values) ** 2) * g.cell)
    du = np.sqrt(sum(np.sum(np.abs(d) ** 2) for d in gradient(u.values, g)) * g.cell)
    return lp_norm(u) + float(xu) + float(du)


def h1_norm(u: Field) -> float:
    """(||u||_2^2 + ||grad u||_2^2)^(1/2), with the gradient taken spectrally."""
    g = u.grid
    vh = np.abs(sfft.fftn(u.values)) ** 2
    ratio = np.sum((1.0 + g.k2_fft) * vh) / np.sum(vh) if np.any(vh) else 0.0
    return float(lp_norm(u) * np.sqrt(ratio))


# -- plane-wave gauge -------------------------------------------------------

def gauge_boost(u: Field, xi0, t: float, direction: str = "forward") -> Field:
    """Galilean-type boost for the harmonic flow.

    forward:  u(x - xi0 sin t) exp(i (x - xi0 sin t / 2).xi0 cos t / eps)
    inverse:  undoes the forward map.
    """
    g, eps = u.grid, u.epsilon
    xi0 = np.broadcast_to(np.asarray(xi0, dtype=float), (g.dim,))
    if np.linalg.norm(xi0) / eps >= np.pi / g.spacing:
        raise ValueError("boost frequency |xi0|/eps outside the resolvable band")
    a = xi0 * np.sin(t)
    b = xi0 * np.cos(t) / eps
    phase = np.exp(1j * sum((x - ai / 2) * bi for x, ai, bi in zip(g.coords, a, b)))
    if direction == "forward":
        return u.replace(spectral_shift(u.values, g, a) * phase)
    if direction == "inverse":
        return u.replace(spectral_shift(u.values * np.conj(phase), g, -a))
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


# -- off-lattice evaluation -------------------------------------------------

def _apply_axes(values: np.ndarray, mats) -> np.ndarray:
    """Apply one (N_out x N_in) matrix along every axis."""
    out = values
    for ax, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m, out, axes=([1], [ax])), 0, ax)
    return out


def interp_matrix(grid: Grid, targets: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of lattice data at ``targets``.

    Targets outside [-L, L) get zero rows (data are assumed to have decayed).
    """
    x = grid.axis
    xi = grid.freq_axis
    n = grid.points_per_axis
    m = np.exp(1j * np.outer(targets, xi)) @ np.exp(-1j * np.outer(xi, x)) / n
    outside = (targets < -grid.half_extent) | (targets >= grid.half_extent)
    m[outside] = 0.0
    return m


def dilate(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """Samples of x -> phi(x / s) computed from the band-limited interpolant."""
    if s == 1.0:
        return np.array(values, dtype=complex)
    m = interp_matrix(grid, grid.axis / s)
    return _apply_axes(values, [m] * grid.dim)


def fourier_at(values: np.ndarray, grid: Grid, eta: np.ndarray, band_limited: bool = False) -> np.ndarray:
    """Continuum transform (2 pi)^(-n/2) int exp(-i x.eta) phi dx on the tensor lattice eta^n.

    Direct trapezoid sums per axis, so eta need not be a lattice frequency.  The
    sums are periodic in eta with period 2 pi / dx; ``band_limited`` returns zero
    beyond the Nyquist frequency instead of an alias.
    """
    eta = np.asarray(eta, dtype=float)
    m = np.exp(-1j * np.outer(eta, grid.axis)) * (grid.spacing / np.sqrt(2.0 * np.pi))
    if band_limited:
        m[np.abs(eta) > np.pi / grid.spacing] = 0.0
    return _apply_axes(values, [m] * grid.dim)


def boundary_mass(values: np.ndarray, grid: Grid, width: int = 2) -> float:
    """Fraction of mass in the outer ``width`` cells of any axis."""
    total = np.sum(np.abs(values) ** 2)
    if total == 0:
        return 0.0
    n = grid.points_per_axis
    mask = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        idx = [slice(None)] * grid.dim
        idx[ax] = np.r_[0:width, n - width:n]
        mask[tuple(idx)] = True
    return float(np.sum(np.abs(values[mask]) ** 2) / total)


def spectral_tail(values: np.ndarray, grid: Grid, fraction: float = 2.0 / 3.0) -> float:
    """Fraction of spectral mass with some |k_i| above ``fraction`` of Nyquist."""
    p = np.abs(sfft.fftn(values)) ** 2
    total = np.sum(p)
    if total == 0:
        return 0.0
    kmax = fraction * np.pi / grid.spacing
    mask = np.zeros(grid.shape, dtype=bool)
    for k in grid.k_fft:
        mask |= np.abs(k) * np.ones(grid.shape) > kmax
    return float(np.sum(p[mask]) / total)
