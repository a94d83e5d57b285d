"""Scaled Hartree equation with a harmonic potential.

    i eps u_t + eps^2/2 Lap u = |x|^2/2 u + eps^alpha (|x|^-gamma * |u|^2) u  [- eps^beta |u|^(2 sigma) u]

Spectral grids, exact harmonic propagators, Strang splitting, observables,
leading-order profiles around the focus and a numerical scattering operator.
"""

from .grid import Field, Grid, fourier_forward, fourier_inverse, gauge_boost, make_grid
from .kernels import HartreeKernel, build_kernel
from .propagators import SolverConfig, evolve, mehler_apply, strang_step
from .scattering import ScatteringJob, ScatteringResult, scattering_compute, s_iterate

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "make_grid", "fourier_forward", "fourier_inverse", "gauge_boost",
    "HartreeKernel", "build_kernel",
    "SolverConfig", "evolve", "mehler_apply", "strang_step",
    "ScatteringJob", "ScatteringResult", "scattering_compute", "s_iterate",
]
