"""Scattering operator for i psi_t + 1/2 Lap psi = (|x|^-gamma * |psi|^2) psi.

psi_minus is pushed back to -T with the free group, integrated to +T, and
pulled back with the free group.  T doubles until two horizons agree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grid import Field, Grid, boundary_mass, l2, sigma_norm
from .kernels import build_kernel
from .propagators import SplitStepper, free_apply

log = logging.getLogger(__name__)


class ScatteringError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScatteringJob:
    gamma: float
    horizon_T: float
    dt: float
    psi_minus: Field = field(repr=False)
    small_data_norm: float = 0.3
    max_horizon: float = 64.0
    max_points: int = 1024
    boundary_tol: float = 1e-8

    def __post_init__(self):
        n = self.psi_minus.grid.dim
        if not 1.0 < self.gamma < min(4.0, n):
            raise ValueError(f"gamma must lie in (1, {min(4.0, n)}), got {self.gamma}")
        if self.psi_minus.epsilon != 1.0:
            raise ValueError("scattering fields carry epsilon = 1")
        if not self.horizon_T > 0 or not self.dt > 0:
            raise ValueError("horizon and dt must be positive")
        if self.gamma <= 4.0 / 3.0:
            s = sigma_norm(self.psi_minus)
            if s > self.small_data_norm:
                raise ValueError(f"||psi_-||_Sigma = {s:.4g} exceeds the small-data bound {self.small_data_norm}")


@dataclass(frozen=True)
class ScatteringResult:
    psi_plus: Field = field(repr=False)
    convergence_certificate: float
    horizon_used: float
    converged: bool
    history: tuple = ()
    grid_used: Optional[Grid] = None


def embed(values: np.ndarray, small: Grid, big: Grid) -> np.ndarray:
    """Zero-pad onto a larger lattice with the same spacing."""
    off = (big.points_per_axis - small.points_per_axis) // 2
    out = np.zeros(big.shape, dtype=complex)
    out[tuple(slice(off, off + small.points_per_axis) for _ in range(small.dim))] = values
    return out


def crop(values: np.ndarray, big: Grid, small: Grid) -> tuple:
    """Inverse of embed; also returns the mass fraction that was dropped."""
    off = (big.points_per_axis - small.points_per_axis) // 2
    sl = tuple(slice(off, off + small.points_per_axis) for _ in range(small.dim))
    inner = values[sl]
    total = np.sum(np.abs(values) ** 2)
    lost = 0.0 if total == 0 else float(1.0 - np.sum(np.abs(inner) ** 2) / total)
    return np.array(inner), lost


def _working_grid(job: ScatteringJob, T: float) -> Grid:
    """Smallest same-spacing enlargement holding the free evolution on [-T, T]."""
    g = job.psi_minus.grid
    big = g
    while True:
        vals = embed(job.psi_minus.values, g, big)
        probe = Field(big, vals, 1.0)
        bm = max(boundary_mass(free_apply(probe, -T).values, big),
                 boundary_mass(free_apply(probe, T).values, big))
        if bm < job.boundary_tol:
            return big
        if 2 * big.points_per_axis > job.max_points:
            raise ScatteringError(f"boundary mass {bm:.2e} at T = {T} with the largest allowed grid")
        big = Grid(g.dim, 2 * big.points_per_axis, 2 * big.half_extent)


def scatter_at_horizon(job: ScatteringJob, T: float) -> tuple:
    """psi_plus extracted with horizon T, on the psi_minus grid, plus the working grid."""
    g = job.psi_minus.grid
    if not np.any(job.psi_minus.values):
        return job.psi_minus.replace(np.zeros(g.shape)), g
    big = _working_grid(job, T)
    k = build_kernel(big, job.gamma)
    st = SplitStepper(big, 1.0, k, hartree_coupling=1.0, trap=False)
    start = free_apply(Field(big, embed(job.psi_minus.values, g, big), 1.0), -T)
    end = st.run(start.values, -T, T, job.dt)
    if boundary_mass(end, big) > job.boundary_tol:
        raise ScatteringError("nonlinear state reached the boundary")
    back = free_apply(Field(big, end, 1.0), -T).values
    vals, lost = crop(back, big, g)
    if lost > 1e-10:
        log.warning("psi_plus loses %.2e of its mass when cropped to the input grid", lost)
    return job.psi_minus.replace(vals), big


def scattering_compute(job: ScatteringJob, tol: float = 1e-3) -> ScatteringResult:
    """Double the horizon until psi_plus(T) and psi_plus(2T) agree within ``tol`` in L2."""
    T = job.horizon_T
    prev, _ = scatter_at_horizon(job, T)
    history = []
    while True:
        if 2 * T > job.max_horizon:
            cert = history[-1][1] if history else float("inf")
            return ScatteringResult(prev, cert, T, False, tuple(history))
        cur, big = scatter_at_horizon(job, 2 * T)
        cert = l2(cur.values - prev.values, cur.grid)
        T *= 2
        history.append((T, cert))
        log.info("scattering horizon %g: certificate %.3e", T, cert)
        if cert <= tol:
            return ScatteringResult(cur, cert, T, True, tuple(history), big)
        prev = cur


class ScatteringOperator:
    """Callable handle for S built from a job template; records certification."""

    def __init__(self, template: ScatteringJob, tol: float = 1e-3):
        self.template = template
        self.tol = tol
        self.grid = template.psi_minus.grid
        self.converged: Optional[bool] = None
        self.results: list = []

    def apply(self, psi: Field) -> Field:
        if not psi.grid.same_as(self.grid):
            raise ValueError("input is not on the scattering grid")
        res = scattering_compute(replace(self.template, psi_minus=psi.replace(epsilon=1.0)), self.tol)
        self.results.append(res)
        self.converged = res.converged and (self.converged is not False)
        if not res.converged:
            raise ScatteringError(f"unconverged: certificate {res.convergence_certificate:.3e} at T = {res.horizon_used}")
        return res.psi_plus


def s_iterate(s_input: Field, k: int, template: ScatteringJob, tol: float = 1e-3) -> Field:
    """S applied k times; every intermediate must pass the job's small-data guard."""
    if k < 1:
        raise ValueError("k must be >= 1")
    psi = s_input
    for _ in range(k):
        job = replace(template, psi_minus=psi.replace(epsilon=1.0))
        res = scattering_compute(job, tol)
        if not res.converged:
            raise ScatteringError(f"unconverged: certificate {res.convergence_certificate:.3e}")
        psi = res.psi_plus
    return psi


def convergence_log_csv(res: ScatteringResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("T,certificate\n")
        for T, c in res.history:
            fh.write(f"{T:.17g},{c:.17g}\n")
