"""Leading-order profiles for the harmonic Hartree flow.

Outer profiles away from the focus, the nonlinear phase g, focus profiles
with or without a scattering operator, long-range log phases, and Maslov
phase extraction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from .grid import Field, Grid, dilate, fourier_at, interp_matrix, _apply_axes
from .kernels import build_kernel, hartree_potential
from .propagators import mehler_apply

log = logging.getLogger(__name__)

FOCUS_WINDOW = 0.05


# -- I(t) = int_0^t |cos tau|^-gamma dtau -----------------------------------

def _half_period(gamma: float) -> float:
    """int_0^{pi/2} cos^-gamma = B(1/2, (1-gamma)/2) / 2."""
    return 0.5 * special.beta(0.5, (1.0 - gamma) / 2.0)


def _fold(t: float, gamma: float, first_quarter) -> float:
    sign = 1.0 if t >= 0 else -1.0
    t = abs(t)
    m = math.floor(t / math.pi)
    r = t - m * math.pi
    h = _half_period(gamma)
    part = first_quarter(r) if r <= math.pi / 2 else 2 * h - first_quarter(math.pi - r)
    return sign * (2 * h * m + part)


def time_integral(t: float, gamma: float) -> float:
    """I(t) by adaptive quadrature; near pi/2 the substitution tau = pi/2 - s^2 is used."""
    if not 0 <= gamma < 1:
        raise ValueError(f"I(t) needs 0 <= gamma < 1, got {gamma}")
    split = math.pi / 2 - 0.25

    def smooth(s):
        # 2 s sin(s^2)^-gamma = 2 s^(1 - 2 gamma) (s^2 / sin s^2)^gamma
        return 2.0 * (s * s / math.sin(s * s)) ** gamma if s > 0 else 2.0

    def quarter(r):
        val, _ = integrate.quad(lambda x: math.cos(x) ** -gamma, 0.0, min(r, split), epsabs=0, epsrel=1e-13)
        if r > split:
            lo = math.sqrt(max(math.pi / 2 - r, 0.0))
            w = 0.0
            for a, b, sgn in ((0.0, 0.5, 1.0), (0.0, lo, -1.0)):
                if b > a:
                    part, _ = integrate.quad(smooth, a, b, weight="alg", wvar=(1.0 - 2.0 * gamma, 0.0),
                                             epsabs=0, epsrel=1e-13)
                    w += sgn * part
            val += w
        return val

    return _fold(float(t), gamma, quarter)


def time_integral_closed_form(t: float, gamma: float) -> float:
    """I(t) through the regularized incomplete beta function (independent route)."""
    if not 0 <= gamma < 1:
        raise ValueError(f"I(t) needs 0 <= gamma < 1, got {gamma}")
    a, b = 0.5, (1.0 - gamma) / 2.0
    full = special.beta(a, b)

    def quarter(r):
        s2, c2 = math.sin(r) ** 2, math.cos(r) ** 2
        frac = special.betainc(a, b, s2) if s2 <= 0.5 else 1.0 - special.betainc(b, a, c2)
        return 0.5 * full * frac

    return _fold(float(t), gamma, quarter)


@dataclass(frozen=True)
class PhaseTable:
    """P = |x|^-gamma * |f|^2 and the time factor I(t); g(t, x) = -P(x) I(t)."""

    gamma: float
    potential_P: Field = field(repr=False)

    def time_integral(self, t: float) -> float:
        return time_integral(t, self.gamma)


def build_phase_table(f: Field, gamma: float, kernel=None) -> PhaseTable:
    if not 0 < gamma < 1:
        raise ValueError(f"the phase g is defined for 0 < gamma < 1 only, got {gamma}")
    k = kernel if kernel is not None else build_kernel(f.grid, gamma)
    return PhaseTable(float(gamma), hartree_potential(k, f))


def zero_phase_table(f: Field, gamma: float) -> PhaseTable:
    """Table with P = 0, i.e. g identically zero."""
    return PhaseTable(float(gamma), f.replace(np.zeros(f.grid.shape)))


def g_phase(pt: PhaseTable, t: float) -> Field:
    if not pt.gamma < 1:
        raise ValueError("g diverges for gamma >= 1; use longrange_phase")
    p = pt.potential_P
    return p.replace(-p.values.real * pt.time_integral(t))


# -- outer profiles ---------------------------------------------------------

def _check_outer_time(t: float) -> None:
    if not 0.0 <= t <= math.pi + 1e-12:
        raise ValueError(f"profile time must lie in [0, pi], got {t}")
    if abs(t - math.pi / 2) < FOCUS_WINDOW:
        raise ValueError("time inside the focus window")


def outer_profile(values: np.ndarray, grid: Grid, eps: float, t: float, crossings: int) -> np.ndarray:
    """exp(-i n k pi/2) |cos t|^(-n/2) phi(x / cos t) exp(-i x^2 tan t / 2 eps) for any non-focal t."""
    c = math.cos(t)
    n = grid.dim
    out = dilate(values, grid, c) * abs(c) ** (-n / 2)
    out *= np.exp(-1j * grid.r2 * math.tan(t) / (2 * eps))
    if crossings:
        out *= np.exp(-1j * crossings * n * np.pi / 2)
    return out


def vprofile_apply(phi: Field, t: float) -> Field:
    """V(t) phi for t in [0, pi] outside the focus window."""
    _check_outer_time(t)
    k = 1 if t > math.pi / 2 else 0
    return phi.replace(outer_profile(phi.values, phi.grid, phi.epsilon, t, k), time=phi.time + t)


def wkb_profile(f: Field, pt: PhaseTable, t: float) -> Field:
    """V(t) (f exp(i g(t, .))): the outer profile with the nonlinear phase."""
    _check_outer_time(t)
    if not f.grid.same_as(pt.potential_P.grid):
        raise ValueError("phase table built on another grid")
    phased = f.values * np.exp(1j * g_phase(pt, t).values)
    k = 1 if t > math.pi / 2 else 0
    return f.replace(outer_profile(phased, f.grid, f.epsilon, t, k), time=f.time + t)


def profile_defect(u_t: Field, f: Field, pt: PhaseTable, t: float) -> Field:
    """b - f with b = exp(-i g(t)) U(-t) u(t)."""
    back = mehler_apply(u_t, -t, check_boundary=False)
    b = back.values * np.exp(-1j * g_phase(pt, t).values)
    return f.replace(b - f.values)


# -- focus profiles ---------------------------------------------------------

def resample(u: Field, grid: Grid) -> Field:
    """Band-limited transfer of ``u`` onto another lattice of the same dimension."""
    if grid.dim != u.grid.dim:
        raise ValueError("dimension mismatch")
    if grid.same_as(u.grid):
        return u
    m = interp_matrix(u.grid, grid.axis)
    return Field(grid, _apply_axes(u.values, [m] * grid.dim), u.epsilon, u.time)


def _require_certificate(s) -> None:
    # checked after application: handles certify as they compute
    if getattr(s, "converged", False) is not True:
        raise ValueError("scattering operator lacks a convergence certificate")


def _iterate(s, psi: Field, k: int) -> Field:
    for _ in range(k):
        psi = s.apply(psi)
    return psi


def focus_profile(f: Field, pt: Optional[PhaseTable] = None, s=None, k: int = 0,
                  epsilon: Optional[float] = None, quarter_phase: bool = True) -> Field:
    """Prediction at the focus t = pi/2 + k pi (after k earlier crossings).

    eps^(-n/2) exp(-i n k pi/2) F(S^k b)(x / eps), with b = f exp(i g(pi/2))
    when a phase table is given and b = f otherwise.  ``s`` is a certified
    scattering operator handle or None for the identity.  With quarter_phase
    the linear factor exp(-i n pi/4) of the harmonic flow at a quarter period
    is included, so the k = 0 linear profile equals U(pi/2) f.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    eps = f.epsilon if epsilon is None else float(epsilon)
    g, n = f.grid, f.grid.dim
    b = f
    if pt is not None:
        b = f.replace(f.values * np.exp(1j * g_phase(pt, math.pi / 2).values))
    if s is not None and k > 0:
        b = _iterate(s, resample(b.replace(epsilon=1.0), s.grid), k)
        _require_certificate(s)
    out = fourier_at(b.values, b.grid, g.axis / eps, band_limited=True) * eps ** (-n / 2)
    phase = -k * n * np.pi / 2 - (n * np.pi / 4 if quarter_phase else 0.0)
    return Field(g, out * np.exp(1j * phase), eps, f.time + math.pi / 2 + k * math.pi)


def scattered_outer_profile(f: Field, s, k: int, t: float) -> Field:
    """exp(-i n k pi/2) |cos t|^(-n/2) (F S^k F^-1 f)(x / cos t) exp(-i x^2 tan t / 2 eps).

    Valid between the k-th and (k+1)-th focus; s = None gives the linear profile.
    """
    g = f.grid
    if abs(math.cos(t)) < math.sin(FOCUS_WINDOW):
        raise ValueError("time inside the focus window")
    if s is None or k == 0:
        out = outer_profile(f.values, g, f.epsilon, t, k)
        return f.replace(out, time=f.time + t)
    sg = s.grid
    inv = fourier_at(f.values, g, -sg.axis)  # F^-1 f sampled on the scattering lattice
    psi = _iterate(s, Field(sg, inv, 1.0), k)
    _require_certificate(s)
    return outer_from_scattered(psi, g, f.epsilon, k, t).replace(time=f.time + t)


def outer_from_scattered(psi: Field, grid: Grid, eps: float, k: int, t: float) -> Field:
    """The outer profile built from psi = S^k F^-1 f, which lives on its own lattice."""
    c = math.cos(t)
    if abs(c) < math.sin(FOCUS_WINDOW):
        raise ValueError("time inside the focus window")
    n = grid.dim
    out = fourier_at(psi.values, psi.grid, grid.axis / c, band_limited=True)
    out = out * abs(c) ** (-n / 2) * np.exp(-1j * grid.r2 * math.tan(t) / (2 * eps))
    out *= np.exp(-1j * k * n * np.pi / 2)
    return Field(grid, out, eps, t)


# -- long-range phases ------------------------------------------------------

def coulomb_potential(f: Field) -> Field:
    """|x|^-1 * |f|^2 (needs n >= 2)."""
    if f.grid.dim < 2:
        raise ValueError("the |x|^-1 kernel needs n >= 2")
    return hartree_potential(build_kernel(f.grid, 1.0), f)


def longrange_phase(f: Field, t: float, epsilon: float, after_focus_profile: Optional[Field] = None) -> Field:
    """Exploratory log phases for gamma = 1.

    before the focus:  g(t, x) =  (|x|^-1 * |f|^2)(x) log(cos t / eps)
    after the focus:   h(t, x) = -(|x|^-1 * |p|^2)(x) log(|cos t| / eps), p the supplied profile
    """
    c = math.cos(t)
    if after_focus_profile is None:
        arg = c / epsilon
        if arg <= 0:
            raise ValueError("log argument cos t / eps must be positive")
        p = coulomb_potential(f)
        return f.replace(p.values.real * math.log(arg))
    arg = abs(c) / epsilon
    if arg <= 0:
        raise ValueError("log argument |cos t| / eps must be positive")
    p = coulomb_potential(after_focus_profile)
    return after_focus_profile.replace(-p.values.real * math.log(arg))


# -- Maslov phase -----------------------------------------------------------

def maslov_extract(u: Field, reference: Field, max_modulus_gap: float = 0.2) -> float:
    """arg <reference, u>, in (-pi, pi]."""
    if not u.grid.same_as(reference.grid):
        raise ValueError("fields live on different grids")
    rn = float(np.sqrt(np.sum(np.abs(reference.values) ** 2)))
    if rn == 0:
        raise ValueError("reference has zero norm")
    gap = float(np.sqrt(np.sum((np.abs(u.values) - np.abs(reference.values)) ** 2))) / rn
    if gap > max_modulus_gap:
        raise ValueError(f"moduli differ by {gap:.3g} (relative), above {max_modulus_gap}")
    z = np.vdot(reference.values, u.values)
    if abs(z) <= 1e-12 * rn * rn:
        raise ValueError("reference is orthogonal to the field")
    ang = float(np.angle(z))
    return math.pi if ang == -math.pi else ang


def wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    b = math.remainder(a, 2 * math.pi)
    return math.pi if b == -math.pi else b
