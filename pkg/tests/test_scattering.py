import math

import numpy as np
import pytest

from semihartree.grid import Field, l2, make_grid, sigma_norm
from semihartree.scattering import (ScatteringError, ScatteringJob, ScatteringOperator, convergence_log_csv, crop,
                                    embed, s_iterate, scatter_at_horizon, scattering_compute)

GAMMA = 1.5


@pytest.fixture(scope="module")
def grid():
    return make_grid(2, 32, 8.0)


def gaussian(grid, norm, center=(0.0, 0.0)):
    x, y = grid.coords
    f = Field(grid, np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2) / 2).astype(complex), 1.0)
    return f.scale(norm / sigma_norm(f))


def job(psi, **kw):
    return ScatteringJob(kw.pop("gamma", GAMMA), kw.pop("T", 2.0), kw.pop("dt", 0.1), psi, **kw)


@pytest.fixture(scope="module")
def base(grid):
    psi = gaussian(grid, 0.2)
    return psi, scattering_compute(job(psi), tol=5e-3)


def test_zero_maps_to_zero(grid):
    z = Field(grid, np.zeros(grid.shape, dtype=complex), 1.0)
    res = scattering_compute(job(z))
    assert res.converged and not np.any(res.psi_plus.values)


def test_converges_and_preserves_mass(base):
    psi, res = base
    assert res.converged
    assert res.convergence_certificate <= 5e-3
    assert l2(res.psi_plus.values, psi.grid) == pytest.approx(l2(psi.values, psi.grid), rel=1e-6)
    assert l2(res.psi_plus.values - psi.values, psi.grid) > 1e-4  # S is not the identity


def test_gauge_equivariance(base):
    psi, res = base
    th = 0.7
    rot = scattering_compute(job(psi.scale(np.exp(1j * th))), tol=5e-3)
    assert l2(rot.psi_plus.values - res.psi_plus.values * np.exp(1j * th), psi.grid) < 1e-8


def test_radial_data_stay_symmetric(base):
    psi, res = base
    v = res.psi_plus.values
    assert np.max(np.abs(v - v.T)) < 1e-10
    assert np.max(np.abs(v[1:, :] - v[1:, :][::-1, :])) < 1e-10


def test_born_cubic_scaling(grid):
    # S psi - psi = O(|psi|^3) for small data
    d = []
    for a in (0.1, 0.05):
        psi = gaussian(grid, a)
        out, _ = scatter_at_horizon(job(psi), 8.0)
        d.append(l2(out.values - psi.values, grid))
    assert math.log2(d[0] / d[1]) == pytest.approx(3.0, abs=0.05)


def test_certificate_decreases_with_horizon(grid):
    res = scattering_compute(job(gaussian(grid, 0.2), T=1.0, max_horizon=8.0), tol=1e-9)
    certs = [c for _, c in res.history]
    assert not res.converged
    assert all(b < a for a, b in zip(certs, certs[1:]))


def test_guards(grid):
    psi = gaussian(grid, 0.2)
    with pytest.raises(ValueError):
        job(psi, gamma=1.0)
    with pytest.raises(ValueError):
        job(psi, gamma=2.0)
    with pytest.raises(ValueError):
        job(psi.replace(epsilon=0.5))
    with pytest.raises(ValueError):
        job(psi, T=0.0)
    with pytest.raises(ValueError):
        job(gaussian(grid, 0.5), gamma=1.2)  # small-data guard
    job(gaussian(grid, 0.5), gamma=1.5)  # no guard above 4/3


def test_operator_records_certification(grid):
    psi = gaussian(grid, 0.2)
    s = ScatteringOperator(job(psi), tol=5e-3)
    assert s.converged is None
    out = s.apply(psi)
    assert s.converged is True and len(s.results) == 1
    assert out.grid.same_as(grid)
    with pytest.raises(ValueError):
        s.apply(gaussian(make_grid(2, 16, 8.0), 0.2))
    strict = ScatteringOperator(job(psi, max_horizon=4.0), tol=1e-12)
    with pytest.raises(ScatteringError):
        strict.apply(psi)
    assert strict.converged is False


def test_s_iterate(base):
    psi, res = base
    once = s_iterate(psi, 1, job(psi), tol=5e-3)
    assert np.allclose(once.values, res.psi_plus.values)
    with pytest.raises(ValueError):
        s_iterate(psi, 0, job(psi))
    with pytest.raises(ScatteringError):
        s_iterate(psi, 1, job(psi, max_horizon=4.0), tol=1e-12)


def test_embed_crop_round_trip(grid):
    big = make_grid(2, 64, 16.0)
    psi = gaussian(grid, 0.2)
    vals, lost = crop(embed(psi.values, grid, big), big, grid)
    assert np.array_equal(vals, psi.values) and lost == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(big.axis[16:48], grid.axis)


def test_convergence_log(base, tmp_path):
    _, res = base
    p = tmp_path / "conv.csv"
    convergence_log_csv(res, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "T,certificate"
    assert float(lines[-1].split(",")[1]) == res.convergence_certificate
