"""Which nonlinear effects survive the eps -> 0 limit, away from and at the focus."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

log = logging.getLogger(__name__)

EQUALITY_TOL = 1e-12


@dataclass(frozen=True)
class RegimeLabel:
    wkb: str    # "Linear" or "Nonlinear"
    focus: str

    def __str__(self):
        return f"{self.wkb} WKB, {self.focus.lower()} focus"


def _equal(a, b) -> bool:
    if isinstance(a, Rational) and isinstance(b, Rational):
        return Fraction(a) == Fraction(b)
    return abs(float(a) - float(b)) <= EQUALITY_TOL


def classify_regime(alpha, gamma, beta=None, sigma=None, n: int = 2) -> RegimeLabel:
    """Regime of the scaled Hartree (optionally plus local power) equation.

    Exact comparison for int/Fraction inputs, tolerance 1e-12 otherwise.
    """
    if (beta is None) != (sigma is None):
        raise ValueError("beta and sigma must be given together")
    if n < 1:
        raise ValueError("n must be positive")
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    wkb = _equal(alpha, 1)
    focus = _equal(alpha, gamma)
    if not focus and alpha < gamma:
        log.warning("alpha < gamma lies outside the classification tables")
    if beta is not None:
        if not beta >= 1:
            raise ValueError(f"beta must be >= 1, got {beta}")
        if not 0 < sigma < Fraction(2, n):
            raise ValueError(f"sigma must lie in (0, 2/n), got {sigma}")
        sn = sigma * n
        wkb = wkb or _equal(beta, 1)
        crit = _equal(beta, sn)
        if not crit and beta < sn:
            log.warning("beta < sigma n lies outside the classification tables")
        focus = focus or crit
    return RegimeLabel("Nonlinear" if wkb else "Linear", "Nonlinear" if focus else "Linear")
