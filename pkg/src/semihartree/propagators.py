"""Linear propagators and the Strang-split integrator.

The scaled equation is

    i eps u_t + eps^2/2 Lap u = |x|^2/2 u + eps^alpha (K * |u|^2) u - eps^beta |u|^(2 sigma) u

with K = |x|^-gamma.  The harmonic propagator is applied exactly through the
Mehler factorization; free-space evolution uses the multiplier exp(-i t |xi|^2 / 2).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, boundary_mass, fourier_at
from .kernels import HartreeKernel, potential_values

log = logging.getLogger(__name__)

SIN_FLOOR = 0.1
# the chirp exp(i x^2 cot t / 2eps) shears phase space by cot t; beyond this
# slope the sheared state leaves the lattice band, so the step is split
MAX_SHEAR = 0.6


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    alpha: float
    gamma: float
    dt: float
    t_end: float
    beta: Optional[float] = None
    sigma: Optional[float] = None
    splitting: str = "strang"

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if (self.beta is None) != (self.sigma is None):
            raise ValueError("beta and sigma must be given together")
        if self.beta is not None and self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.dt > self.epsilon / 4 * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds eps/4 = {self.epsilon / 4}")
        if self.splitting != "strang":
            raise ValueError(f"unsupported splitting {self.splitting!r}")

    @property
    def hartree_coupling(self) -> float:
        return self.epsilon ** self.alpha

    @property
    def local_coupling(self) -> float:
        return 0.0 if self.beta is None else self.epsilon ** self.beta


# -- harmonic propagator ----------------------------------------------------

def _quarter_phase(n: int, s: float) -> complex:
    """(i s)^(-n/2) / |s|^(-n/2) on the principal branch."""
    return complex(np.exp(-1j * np.sign(s) * n * np.pi / 4))


def _factorized(values: np.ndarray, grid: Grid, eps: float, t: float) -> np.ndarray:
    """exp(-i t H / eps) for |sin t| >= SIN_FLOOR as chirp, dilated transform, chirp."""
    s, c = math.sin(t), math.cos(t)
    n = grid.dim
    chirp = np.exp(1j * grid.r2 * (c / s) / (2 * eps))
    eta = grid.axis / (eps * s)
    out = fourier_at(values * chirp, grid, eta)
    out *= chirp * (_quarter_phase(n, s) * (eps * abs(s)) ** (-n / 2))
    return out


def _reflect(values: np.ndarray, grid: Grid) -> np.ndarray:
    """phi(-x) on a lattice starting at -L (index j -> N - j mod N)."""
    out = values
    for ax in range(grid.dim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def harmonic_rotate(values: np.ndarray, grid: Grid, eps: float, t: float, max_angle: float = 0.05) -> np.ndarray:
    """Exact harmonic propagator as a product of chirp / free / chirp factors.

    Each factor exp(-i a x^2/2eps) exp(i eps b Lap/2) exp(-i a x^2/2eps) with
    a = tan(th/2), b = sin(th) is the exact rotation by th.  Independent of the
    dilation route; used as a cross-check.
    """
    m = max(1, int(math.ceil(abs(t) / max_angle)))
    th = t / m
    kick = np.exp(-1j * math.tan(th / 2) * grid.r2 / (2 * eps))
    drift = np.exp(-1j * math.sin(th) * eps * grid.k2_fft / 2)
    out = np.array(values, dtype=complex)
    for _ in range(m):
        out = sfft.ifftn(sfft.fftn(out * kick) * drift) * kick
    return out


def _harmonic(values: np.ndarray, grid: Grid, eps: float, t: float, method: str) -> np.ndarray:
    n = grid.dim
    m = int(round(t / math.pi))
    r = t - m * math.pi
    out = np.array(values, dtype=complex)
    if m % 2:
        out = _reflect(out, grid)
    if m:
        out *= np.exp(-1j * m * n * np.pi / 2)
    if abs(r) < 1e-15:
        return out
    if method == "rotation":
        return harmonic_rotate(out, grid, eps, r)
    if abs(math.sin(r)) >= SIN_FLOOR and abs(math.cos(r)) <= MAX_SHEAR * abs(math.sin(r)):
        return _factorized(out, grid, eps, r)
    # split as (r/2 - pi/2) then (r/2 + pi/2): both factors sit near a quarter
    # period, where the chirps are mild and the dilation is regular
    out = _factorized(out, grid, eps, r / 2 - math.pi / 2)
    return _factorized(out, grid, eps, r / 2 + math.pi / 2)


def mehler_apply(u: Field, t: float, method: str = "factorized", check_boundary: bool = True) -> Field:
    """U(t) u = exp(-i t (-eps^2 Lap + |x|^2) / (2 eps)) u.

    method "factorized" reduces t modulo pi with U(pi) phi = exp(-i n pi/2) phi(-x)
    and applies chirp * dilated transform * chirp; "rotation" uses harmonic_rotate.
    """
    if method not in ("factorized", "rotation"):
        raise ValueError(f"unknown method {method!r}")
    out = _harmonic(u.values, u.grid, u.epsilon, float(t), method)
    if check_boundary:
        bm = boundary_mass(out, u.grid)
        if bm > 1e-8:
            raise IntegrationError(f"state not resolvable after harmonic step: boundary mass {bm:.2e}")
    return u.replace(out, time=u.time + t)


def free_apply(psi: Field, t: float) -> Field:
    """Free Schroedinger group exp(i t Lap / 2), multiplier exp(-i t |xi|^2 / 2)."""
    if t == 0:
        return psi.replace(time=psi.time)
    g = psi.grid
    out = sfft.ifftn(sfft.fftn(psi.values) * np.exp(-0.5j * t * g.k2_fft))
    return psi.replace(out, time=psi.time + t)


# -- split-step integrator --------------------------------------------------

class SplitStepper:
    """Strang splitting for i eps u_t = -eps^2/2 Lap u + W(x, |u|) u.

    W = trap * |x|^2/2 + c_h (K * |u|^2) - c_l |u|^(2 sigma).  Potential substeps
    are exact phase multiplications, so the density is frozen inside each.
    """

    def __init__(self, grid: Grid, eps: float, kernel: Optional[HartreeKernel] = None,
                 hartree_coupling: float = 0.0, local_coupling: float = 0.0,
                 sigma: Optional[float] = None, trap: bool = True, coupling_profile=None):
        self.grid = grid
        self.eps = eps
        self.kernel = kernel
        self.ch = float(hartree_coupling)
        self.cl = float(local_coupling)
        self.sigma = sigma
        self.trap = trap
        self.coupling_profile = coupling_profile
        self._half_x2 = grid.r2 / 2 if trap else None
        self._drift = {}
        if self.ch and kernel is None:
            raise ValueError("Hartree coupling requires a kernel")
        if kernel is not None and not kernel.grid.same_as(grid):
            raise ValueError("kernel grid differs from the stepper grid")

    def potential(self, values: np.ndarray, t: float = 0.0) -> np.ndarray:
        w = np.zeros(self.grid.shape) if self._half_x2 is None else self._half_x2.copy()
        ch = self.ch
        if self.coupling_profile is not None:
            ch = ch * self.coupling_profile(t)
        if ch:
            w += ch * potential_values(self.kernel, np.abs(values) ** 2)
        if self.cl:
            w -= self.cl * np.abs(values) ** (2 * self.sigma)
        return w

    def kick(self, values: np.ndarray, h: float, t: float = 0.0) -> np.ndarray:
        if h == 0:
            return values
        return values * np.exp((-1j * h / self.eps) * self.potential(values, t))

    def drift(self, values: np.ndarray, h: float) -> np.ndarray:
        mult = self._drift.get(h)
        if mult is None:
            mult = np.exp((-0.5j * h * self.eps) * self.grid.k2_fft)
            if len(self._drift) > 8:
                self._drift.clear()
            self._drift[h] = mult
        return sfft.ifftn(sfft.fftn(values) * mult)

    def step(self, values: np.ndarray, h: float, t: float = 0.0) -> np.ndarray:
        out = self.kick(values, h / 2, t)
        out = self.drift(out, h)
        return self.kick(out, h / 2, t + h)

    def run(self, values: np.ndarray, t0: float, t1: float, dt: float, check_every: int = 64) -> np.ndarray:
        """Integrate from t0 to t1 with steps dt (last one shortened).

        Adjacent half kicks are merged; they see the same density since the
        kick leaves |u| unchanged.
        """
        span = t1 - t0
        if span < -1e-14:
            raise ValueError("cannot integrate backwards")
        if span <= 1e-14:
            return np.array(values, dtype=complex)
        nfull = int(math.floor(span / dt + 1e-9))
        rest = span - nfull * dt
        steps = [dt] * nfull
        if rest > 1e-12 * dt:
            steps.append(rest)
        elif nfull == 0:
            steps = [span]
        out = np.array(values, dtype=complex)
        t = t0
        out = self.kick(out, steps[0] / 2, t)
        for i, h in enumerate(steps):
            out = self.drift(out, h)
            t += h
            nxt = (steps[i + 1] / 2) if i + 1 < len(steps) else 0.0
            out = self.kick(out, h / 2 + nxt, t)
            if (i + 1) % check_every == 0 and not np.isfinite(np.sum(np.abs(out))):
                raise IntegrationError(f"non-finite state at t = {t:.6g}")
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"non-finite state at t = {t1:.6g}")
        return out


def make_stepper(cfg: SolverConfig, grid: Grid, k: Optional[HartreeKernel]) -> SplitStepper:
    if cfg.sigma is not None and not cfg.sigma < 2.0 / grid.dim:
        raise ValueError(f"sigma must lie in (0, {2.0 / grid.dim})")
    if k is not None and abs(k.gamma - cfg.gamma) > 1e-14:
        raise ValueError("kernel gamma differs from the configuration")
    return SplitStepper(grid, cfg.epsilon, k, cfg.hartree_coupling if k is not None else 0.0,
                        cfg.local_coupling, cfg.sigma)


def _check_field(u: Field, cfg: SolverConfig) -> None:
    if abs(u.epsilon - cfg.epsilon) > 1e-15:
        raise ValueError(f"field epsilon {u.epsilon} differs from configuration {cfg.epsilon}")


def strang_step(u: Field, cfg: SolverConfig, k: Optional[HartreeKernel]) -> Field:
    """One Strang step of size cfg.dt."""
    _check_field(u, cfg)
    st = make_stepper(cfg, u.grid, k)
    out = st.step(u.values, cfg.dt, u.time)
    if not np.all(np.isfinite(out)):
        raise IntegrationError(f"non-finite state after step at t = {u.time:.6g}")
    return u.replace(out, time=u.time + cfg.dt)


def evolve(f: Field, cfg: SolverConfig, k: Optional[HartreeKernel], snapshots: Sequence[float],
           on_snapshot: Optional[Callable[[Field], None]] = None) -> list:
    """Integrate from f.time, landing exactly on every snapshot time.

    With ``on_snapshot`` the fields are handed to the callback and not kept.
    """
    _check_field(f, cfg)
    times = [float(s) for s in snapshots]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must be increasing")
    if times and (times[0] < f.time - 1e-12 or times[-1] > cfg.t_end + 1e-12):
        raise ValueError("snapshot times must lie in [f.time, t_end]")
    st = make_stepper(cfg, f.grid, k)
    out, t = f.values, f.time
    kept = []
    for s in times:
        out = st.run(out, t, s, cfg.dt)
        t = s
        snap = f.replace(out, time=s)
        if on_snapshot is None:
            kept.append(snap)
        else:
            on_snapshot(snap)
    return kept
