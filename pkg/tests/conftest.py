import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from semihartree.grid import Field, make_grid

ACCEPTANCE_LINES = []

# (alpha, gamma, beta, sigma, n) -> (wkb, focus), one row per cell of the two regime
# tables; the combined table is hit once per way of reaching each cell
HARTREE_CORNERS = [
    ((2, 1, None, None, n), ("Linear", "Linear")) for n in (2, 3)
] + [
    ((Fr(3, 2), Fr(3, 2), None, None, n), ("Linear", "Nonlinear")) for n in (2, 3)
] + [
    ((1, Fr(1, 2), None, None, n), ("Nonlinear", "Linear")) for n in (2, 3)
] + [
    ((1, 1, None, None, n), ("Nonlinear", "Nonlinear")) for n in (2, 3)
]
COMBINED_CORNERS = [
    ((2, 1, 2, Fr(1, 2), 2), ("Linear", "Linear")),
    ((Fr(3, 2), Fr(3, 2), 2, Fr(1, 2), 2), ("Linear", "Nonlinear")),         # alpha = gamma
    ((2, 1, Fr(3, 2), Fr(3, 4), 2), ("Linear", "Nonlinear")),                # beta = sigma n
    ((1, Fr(1, 2), 2, Fr(1, 2), 2), ("Nonlinear", "Linear")),                # alpha = 1
    ((2, 1, 1, Fr(1, 4), 2), ("Nonlinear", "Linear")),                       # beta = 1
    ((1, 1, 2, Fr(1, 2), 2), ("Nonlinear", "Nonlinear")),                    # alpha = gamma = 1
    ((2, 1, 1, Fr(1, 2), 2), ("Nonlinear", "Nonlinear")),                    # beta = sigma n = 1
    ((1, Fr(1, 2), Fr(3, 2), Fr(3, 4), 2), ("Nonlinear", "Nonlinear")),      # alpha = 1, beta = sigma n
]
CORNERS = HARTREE_CORNERS + COMBINED_CORNERS


def record(k, ok, detail):
    ACCEPTANCE_LINES.append((k, f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"))


def coherent_state(grid, eps, q, p, t=0.0):
    """Exact harmonic-oscillator evolution of a Gaussian wave packet centred at (q, p)."""
    n = grid.dim
    q = np.broadcast_to(np.asarray(q, float), (n,))
    p = np.broadcast_to(np.asarray(p, float), (n,))
    qt = q * math.cos(t) + p * math.sin(t)
    pt = p * math.cos(t) - q * math.sin(t)
    phase = (np.sum(p * p - q * q) * math.sin(2 * t) / 4 + np.dot(p, q) * (math.cos(2 * t) - 1) / 2) / eps
    phase -= n * t / 2
    arg = sum(-(x - a) ** 2 / (2 * eps) + 1j * b * (x - a) / eps for x, a, b in zip(grid.coords, qt, pt))
    vals = (math.pi * eps) ** (-n / 4) * np.exp(arg + 1j * phase)
    return Field(grid, vals, eps, t)


@pytest.fixture
def grid2():
    return make_grid(2, 64, 8.0)


@pytest.fixture
def gauss2(grid2):
    x, y = grid2.coords
    return Field(grid2, np.exp(-(x ** 2 + y ** 2) / 2), 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
