"""Conserved quantities, the J/H vector fields, Lp diagnostics and Wigner transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, gradient, interp_matrix, l2, lp_norm, _apply_axes
from .kernels import HartreeKernel, potential_values
from .propagators import SolverConfig


def mass(u: Field) -> float:
    """L2 norm ||u||_2 (the conserved mass is its square)."""
    return lp_norm(u, 2)


def energy_parts(u: Field, cfg: SolverConfig, k: Optional[HartreeKernel]) -> dict:
    g, eps = u.grid, cfg.epsilon
    if k is not None and not k.grid.same_as(g):
        raise ValueError("field and kernel live on different grids")
    rho = np.abs(u.values) ** 2
    vh = np.abs(sfft.fftn(u.values)) ** 2
    # Parseval on the raw DFT: sum |fft u|^2 = N^n sum |u|^2
    kin = 0.5 * eps ** 2 * float(np.sum(g.k2_fft * vh)) / vh.size * g.cell
    pot = 0.5 * float(np.sum(g.r2 * rho)) * g.cell
    hart = 0.0
    if k is not None:
        hart = 0.5 * cfg.hartree_coupling * float(np.sum(potential_values(k, rho) * rho)) * g.cell
    loc = 0.0
    if cfg.beta is not None:
        loc = -cfg.local_coupling / (cfg.sigma + 1) * float(np.sum(rho ** (cfg.sigma + 1))) * g.cell
    return {"kinetic": kin, "harmonic": pot, "hartree": hart, "local": loc}


def energy(u: Field, cfg: SolverConfig, k: Optional[HartreeKernel]) -> float:
    """1/2||eps grad u||^2 + 1/2||x u||^2 + eps^alpha/2 int (K*|u|^2)|u|^2 - eps^beta/(sigma+1) int |u|^(2sigma+2)."""
    return float(sum(energy_parts(u, cfg, k).values()))


def jh_apply(u: Field, which: str, t: float) -> tuple:
    """Components of J(t) u = (x/eps) sin t u - i cos t grad u, or H(t) u = x cos t u + i eps sin t grad u."""
    g, eps = u.grid, u.epsilon
    grads = gradient(u.values, g)
    s, c = math.sin(t), math.cos(t)
    if which == "J":
        comps = [x * (s / eps) * u.values - 1j * c * d for x, d in zip(g.coords, grads)]
    elif which == "H":
        comps = [x * c * u.values + 1j * eps * s * d for x, d in zip(g.coords, grads)]
    else:
        raise ValueError(f"which must be 'J' or 'H', got {which!r}")
    return tuple(u.replace(v) for v in comps)


def jh_norm(u: Field, which: str, t: float) -> float:
    return float(math.sqrt(sum(lp_norm(c) ** 2 for c in jh_apply(u, which, t))))


def sobolev_constant(u: Field, t: float, r: float = 4.0) -> float:
    """Smallest C with ||u||_r <= C |cos t|^-d ||u||_2^(1-d) ||J u||_2^d, d = n(1/2 - 1/r)."""
    d = u.grid.dim * (0.5 - 1.0 / r)
    num = lp_norm(u, r)
    den = abs(math.cos(t)) ** (-d) * lp_norm(u) ** (1 - d) * jh_norm(u, "J", t) ** d
    return num / den


# -- Wigner transform -------------------------------------------------------

@dataclass(frozen=True)
class WignerSlice:
    """W(x, xi) on retained positions (grid_x) times the momentum lattice (grid_xi)."""

    grid_x: Grid
    grid_xi: Grid
    values: np.ndarray = field(repr=False)
    epsilon: float
    time: float

    def total(self) -> float:
        return float(np.sum(self.values) * self.grid_x.cell * self.grid_xi.cell)

    def marginal_x(self) -> np.ndarray:
        n = self.grid_x.dim
        return np.sum(self.values, axis=tuple(range(n, 2 * n))) * self.grid_xi.cell


def _half_lattice(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Band-limited interpolant sampled on the lattice of spacing dx/2."""
    fine = -grid.half_extent + 0.5 * grid.spacing * np.arange(2 * grid.points_per_axis)
    return _apply_axes(values, [interp_matrix(grid, fine)] * grid.dim)


def _wigner_rows(u: Field, coarsen_x: int) -> Iterator:
    g, eps = u.grid, u.epsilon
    n, N = g.dim, g.points_per_axis
    if coarsen_x < 1 or N % coarsen_x:
        raise ValueError(f"coarsen_x must divide {N}")
    fine = _half_lattice(u.values, g)
    M = 2 * N   # half-lattice length; lags |eps v / 2| < L / 2
    j = np.arange(N) - N // 2
    dv = g.spacing / eps
    scale = (dv * N / (2 * np.pi)) ** n
    keep = np.arange(0, N, coarsen_x)
    for idx in np.ndindex(*([keep.size] * n)):
        centre = [2 * keep[i] for i in idx]
        minus = np.ix_(*[(c - j) % M for c in centre])
        plus = np.ix_(*[(c + j) % M for c in centre])
        corr = fine[minus] * np.conj(fine[plus])
        # u vanishes outside the box: wrapped pairs would pair bulk points with
        # each other and plant ghost terms in rows near the edge
        for ax, c in enumerate(centre):
            inside = (np.abs(j) <= min(c, M - c)).astype(float)
            shape = [1] * n
            shape[ax] = N
            corr = corr * inside.reshape(shape)
        w = scale * sfft.fftshift(sfft.ifftn(sfft.ifftshift(corr)))
        yield idx, w.real


def _wigner_grids(g: Grid, eps: float, coarsen_x: int):
    gx = Grid(g.dim, g.points_per_axis // coarsen_x, g.half_extent)
    gxi = Grid(g.dim, g.points_per_axis, eps * np.pi / g.spacing)
    return gx, gxi


def wigner_transform(u: Field, coarsen_x: int = 1, memory_budget: float = 1.0e9) -> WignerSlice:
    """W(x, xi) = (2 pi)^-n int u(x - eps v/2) conj(u)(x + eps v/2) exp(i xi.v) dv.

    Half-lattice samples come from the band-limited interpolant, so the eps v/2
    shifts are exact; xi ranges over eps times the frequency lattice.
    """
    g = u.grid
    gx, gxi = _wigner_grids(g, u.epsilon, coarsen_x)
    need = 8.0 * gx.points_per_axis ** g.dim * gxi.points_per_axis ** g.dim
    if need > memory_budget:
        raise MemoryError(f"Wigner slice needs {need:.3g} bytes; increase coarsen_x")
    out = np.empty(gx.shape + gxi.shape)
    for idx, w in _wigner_rows(u, coarsen_x):
        out[idx] = w
    return WignerSlice(gx, gxi, out, u.epsilon, u.time)


def _band_mask(gx: Grid, gxi: Grid, idx, t: float, band: float) -> np.ndarray:
    # the WKB phase -|x|^2 tan t / 2 has gradient -x tan t, which is where this
    # transform puts the mass (classical flow (x0, 0) -> (x0 cos t, -x0 sin t))
    tt = math.tan(t)
    d2 = 0
    xi = np.meshgrid(*([gxi.axis] * gxi.dim), indexing="ij", sparse=True)
    for i, a in enumerate(idx):
        d2 = d2 + (xi[i] + gx.axis[a] * tt) ** 2
    return d2 <= band * band


def _check_focus(t: float) -> None:
    if abs(math.cos(t)) < math.sin(0.05):
        raise ValueError("time too close to a focus for the tan t concentration line")


def concentration_metric(w: WignerSlice, t: float, band_width: float) -> float:
    """Fraction of |W| mass within band_width of the Lagrangian line xi = -x tan t."""
    _check_focus(t)
    inside = total = 0.0
    n = w.grid_x.dim
    for idx in np.ndindex(*w.grid_x.shape):
        a = np.abs(w.values[idx])
        total += float(np.sum(a))
        inside += float(np.sum(a[_band_mask(w.grid_x, w.grid_xi, idx, t, band_width)]))
    return inside / total if total else 0.0


def wigner_concentration(u: Field, t: float, band_width: float, coarsen_x: int = 1) -> float:
    """Streaming version of concentration_metric that never stores the slice."""
    _check_focus(t)
    gx, gxi = _wigner_grids(u.grid, u.epsilon, coarsen_x)
    inside = total = 0.0
    for idx, w in _wigner_rows(u, coarsen_x):
        a = np.abs(w)
        total += float(np.sum(a))
        inside += float(np.sum(a[_band_mask(gx, gxi, idx, t, band_width)]))
    return inside / total if total else 0.0


def write_wigner_csv(w: WignerSlice, path) -> None:
    """Columns x..., xi..., w with 17 significant digits."""
    n = w.grid_x.dim
    names = [f"x{i}" for i in range(n)] + [f"xi{i}" for i in range(n)] + ["w"]
    xi = np.meshgrid(*([w.grid_xi.axis] * n), indexing="ij")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for idx in np.ndindex(*w.grid_x.shape):
            xs = [w.grid_x.axis[a] for a in idx]
            row = w.values[idx].ravel()
            cols = [c.ravel() for c in xi]
            for m in range(row.size):
                vals = xs + [c[m] for c in cols] + [row[m]]
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
