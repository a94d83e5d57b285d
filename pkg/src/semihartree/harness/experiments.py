"""Experiment orchestration: single runs, eps-ladder sweeps, scattering and Wigner jobs.

Every output table is built in a fixed order (ladder order, then snapshot
order, then comparator order) so identical configs give identical files.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..asymptotics import (FOCUS_WINDOW, build_phase_table, focus_profile, g_phase, maslov_extract,
                           outer_from_scattered, outer_profile, wrap_angle)
from ..grid import Field, Grid, fourier_at, make_grid
from ..kernels import build_kernel
from ..observables import energy, jh_norm, mass, wigner_concentration
from ..propagators import SolverConfig, evolve, mehler_apply
from ..scattering import ScatteringJob, ScatteringResult, convergence_log_csv, scattering_compute
from .fitting import fit_slope, reportable
from .io import read_field, write_csv, write_dat, write_field
from .profiles import ProfileSpec, balanced_grid, focus_width_resolved
from .regime import classify_regime

log = logging.getLogger(__name__)

KINDS = ("single", "sweep", "scatter", "wigner", "classify")
COMPARATORS = ("free", "wkb", "wkb0", "scattered", "identity")


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    epsilons: tuple = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    points_per_axis: Optional[int] = None   # None: balanced grid per eps
    half_extent: Optional[float] = None
    alpha: float = 1.0
    gamma: Optional[float] = 0.5            # None: Hartree term off
    beta: Optional[float] = None
    sigma: Optional[float] = None
    dt: float = 1e-3
    t_end: float = math.pi / 4
    zero_mode: str = "truncated"
    profile: ProfileSpec = ProfileSpec()
    profile_path: Optional[str] = None
    kind: str = "sweep"
    comparators: tuple = ("free",)
    snapshots: tuple = ()
    out_dir: Optional[str] = None
    write_fields: bool = False
    scatter_horizon: float = 2.0
    scatter_dt: float = 0.05
    scatter_tol: float = 1e-3
    small_data_norm: float = 0.3
    scatter_points: int = 32
    scatter_half_extent: float = 8.0
    scatter_max_horizon: float = 32.0
    wigner_coarsen: Optional[int] = None
    wigner_band: float = 3.0
    wigner_time: float = math.pi / 4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"experiment kind must be one of {KINDS}")
        bad = [c for c in self.comparators if c not in COMPARATORS]
        if bad:
            raise ValueError(f"unknown comparators {bad}")
        if not self.epsilons:
            raise ValueError("empty eps ladder")
        if self.kind in ("single", "sweep") and self.t_end <= 0:
            raise ValueError("t_end must be positive")

    def grid_for(self, eps: float) -> Grid:
        if self.points_per_axis is None:
            g = balanced_grid(self.dim, eps)
            if self.half_extent is None:
                return g
            return make_grid(self.dim, g.points_per_axis, self.half_extent)
        L = self.half_extent
        if L is None:
            L = math.sqrt(math.pi * eps * self.points_per_axis / 2.0)
        return make_grid(self.dim, self.points_per_axis, L)

    def solver(self, eps: float) -> SolverConfig:
        return SolverConfig(eps, self.alpha, self.gamma if self.gamma is not None else 1.0,
                            self.dt, self.t_end, self.beta, self.sigma)

    def times(self) -> tuple:
        return tuple(self.snapshots) if self.snapshots else (self.t_end,)


@dataclass
class ErrorRow:
    epsilon: float
    time: float
    comparator: str
    l2_error: float
    j_error: float
    h_error: float
    reference_norm: float = 1.0

    def as_tuple(self):
        return (self.epsilon, self.time, self.comparator, self.l2_error, self.j_error, self.h_error)


@dataclass
class SweepResult:
    epsilons: list
    rows: list = field(default_factory=list)
    sup_rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    conservation: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def errors_for(self, comparator: str, t: float, relative: bool = False) -> list:
        out = []
        for e in self.epsilons:
            for r in self.rows:
                if r.epsilon == e and r.comparator == comparator and abs(r.time - t) < 1e-12:
                    out.append(r.l2_error / r.reference_norm if relative else r.l2_error)
        return out

    def sup_for(self, comparator: str, relative: bool = False) -> list:
        return [r.l2_error / r.reference_norm if relative else r.l2_error
                for e in self.epsilons for r in self.sup_rows
                if r.epsilon == e and r.comparator == comparator]


# -- per-eps work -----------------------------------------------------------

def initial_field(cfg: RunConfig, grid: Grid, eps: float) -> Field:
    if cfg.profile_path:
        src = read_field(cfg.profile_path)
        if not src.grid.same_as(grid):
            raise ValueError("HFLD1 initial data must live on the run grid")
        return src.replace(epsilon=eps, time=0.0)
    return cfg.profile.sample(grid, eps)


def scattering_grid(cfg: RunConfig) -> Grid:
    return make_grid(cfg.dim, cfg.scatter_points, cfg.scatter_half_extent)


def scatter_profile(cfg: RunConfig) -> tuple:
    """S applied to F^-1 f, with f sampled on the scattering lattice (eps = 1)."""
    sg = scattering_grid(cfg)
    f = cfg.profile.sample(sg, 1.0)
    psi_minus = Field(sg, fourier_at(f.values, sg, -sg.axis), 1.0)
    job = ScatteringJob(cfg.gamma, cfg.scatter_horizon, cfg.scatter_dt, psi_minus,
                        cfg.small_data_norm, max_horizon=cfg.scatter_max_horizon)
    return psi_minus, scattering_compute(job, cfg.scatter_tol)


def _comparator(name: str, f: Field, t: float, ctx: dict) -> Field:
    g, eps = f.grid, f.epsilon
    if name == "free":
        return mehler_apply(f, t, check_boundary=False)
    crossings = int(math.floor((t - math.pi / 2) / math.pi)) + 1 if t > math.pi / 2 else 0
    near_focus = abs(math.remainder(t - math.pi / 2, math.pi)) < FOCUS_WINDOW
    if name in ("wkb", "wkb0"):
        pt = ctx["phase"] if name == "wkb" else ctx["phase0"]
        if near_focus:
            if abs(t - math.pi / 2) > 1e-12:
                raise ValueError("focus comparison only at the focal time")
            return focus_profile(f, pt)
        vals = f.values
        if pt is not None:
            vals = vals * np.exp(1j * g_phase(pt, t).values)
        return f.replace(outer_profile(vals, g, eps, t, crossings), time=t)
    # scattered / identity: linear outer profile before the first focus
    if near_focus:
        raise ValueError("scattering comparators are not defined at the focus")
    if t < math.pi / 2 or name == "identity":
        return f.replace(outer_profile(f.values, g, eps, t, crossings), time=t)
    if crossings != 1:
        raise ValueError("scattered comparator implemented between the first and second focus")
    return outer_from_scattered(ctx["psi_plus"], g, eps, 1, t)


def _needs_phase(cfg: RunConfig) -> bool:
    return any(c in ("wkb", "wkb0") for c in cfg.comparators)


def run_single_eps(cfg: RunConfig, eps: float, shared: dict) -> dict:
    """All rows for one eps; raises on failure (the sweep isolates it)."""
    grid = cfg.grid_for(eps)
    if not focus_width_resolved(grid, eps):
        raise ValueError(f"grid does not resolve the focal width at eps = {eps}")
    f = initial_field(cfg, grid, eps)
    sc = cfg.solver(eps)
    k = build_kernel(grid, cfg.gamma, cfg.zero_mode) if cfg.gamma is not None else None
    ctx = dict(shared)
    if _needs_phase(cfg):
        if cfg.gamma is not None and cfg.gamma < 1 and cfg.alpha == 1:
            ctx["phase"] = build_phase_table(f, cfg.gamma, k if cfg.zero_mode == "truncated" else None)
        else:
            ctx["phase"] = None
        ctx["phase0"] = None
    norm_f = mass(f)
    e0 = energy(f, sc, k)
    rows, cons = [], []
    sup, shared_out = {}, {}

    def on_snap(u: Field):
        t = u.time
        m = mass(u)
        e = energy(u, sc, k)
        cons.append((eps, t, m, e, m - norm_f, (e - e0) / abs(e0) if e0 else e - e0))
        for name in cfg.comparators:
            ref = _comparator(name, f, t, ctx)
            d = u - ref.replace(time=u.time)
            row = ErrorRow(eps, t, name, mass(d), jh_norm(d, "J", t), jh_norm(d, "H", t), norm_f)
            rows.append(row)
            if name not in sup or row.l2_error > sup[name].l2_error:
                sup[name] = row
        if cfg.write_fields and cfg.out_dir:
            write_field(u, Path(cfg.out_dir) / f"field_eps{eps:.6g}_t{t:.6g}.hfld")
        if cfg.gamma is None and abs(t - math.pi) < 1e-12:
            shared_out["maslov"] = maslov_report(f, u)

    t0 = time.perf_counter()
    evolve(f, sc, k, cfg.times(), on_snapshot=on_snap)
    log.info("eps = %g finished in %.1f s", eps, time.perf_counter() - t0)
    return {"rows": rows, "sup": [sup[c] for c in cfg.comparators if c in sup],
            "conservation": cons, **shared_out}


def maslov_report(f: Field, u_pi: Field) -> dict:
    """Phase of u(pi) against the reflected data f(-x); linear theory gives -n pi / 2."""
    from ..propagators import _reflect
    ref = f.replace(_reflect(f.values, f.grid))
    ph = maslov_extract(u_pi, ref)
    n = f.grid.dim
    return {"phase": ph, "expected": wrap_angle(-n * math.pi / 2), "error": abs(wrap_angle(ph + n * math.pi / 2))}


def _run_isolated(args):
    cfg, eps, shared = args
    try:
        return eps, run_single_eps(cfg, eps, shared), None
    except Exception as exc:  # isolation: record and move on
        log.error("eps = %g failed: %s", eps, exc)
        return eps, None, f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: RunConfig, threads: int = 1) -> SweepResult:
    shared = {}
    res = SweepResult(list(cfg.epsilons))
    if "scattered" in cfg.comparators:
        psi_minus, sres = scatter_profile(cfg)
        res.extras["scattering"] = sres
        if not sres.converged:
            raise RuntimeError(f"scattering did not converge: {sres.convergence_certificate:.3e}")
        shared["psi_plus"] = sres.psi_plus
    jobs = [(cfg, e, shared) for e in cfg.epsilons]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            outs = list(ex.map(_run_isolated, jobs))
    else:
        outs = [_run_isolated(j) for j in jobs]
    for eps, out, err in outs:   # single writer, ladder order
        if err is not None:
            res.failures[eps] = err
            continue
        res.rows.extend(out["rows"])
        res.sup_rows.extend(out["sup"])
        res.conservation.extend(out["conservation"])
        if "maslov" in out:
            res.extras.setdefault("maslov", {})[eps] = out["maslov"]
    ok = [e for e in cfg.epsilons if e not in res.failures]
    for name in cfg.comparators:
        for t in cfg.times():
            _add_slope(res, name, t, ok, res.errors_for(name, t))
        _add_slope(res, name, "sup", ok, res.sup_for(name))
    return res


def _add_slope(res: SweepResult, name, t, eps, errs) -> None:
    if len(errs) != len(eps) or len(eps) < 4 or min(errs, default=0) <= 0:
        return
    p, r = fit_slope(eps, errs)
    res.slopes[(name, t)] = (p, r, reportable((p, r), len(eps)))


def write_outputs(res: SweepResult, out_dir) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_csv(d / "errors.csv", ["epsilon", "time", "comparator", "l2_error", "j_error", "h_error"],
              [r.as_tuple() for r in res.rows] + [(r.epsilon, "sup", r.comparator, r.l2_error, r.j_error, r.h_error)
                                                  for r in res.sup_rows])
    write_csv(d / "slopes.csv", ["comparator", "time", "slope", "residual", "reported"],
              [(k[0], k[1], v[0], v[1], int(v[2])) for k, v in res.slopes.items()])
    write_csv(d / "conservation.csv", ["epsilon", "time", "mass", "energy", "mass_drift", "energy_rel_drift"],
              res.conservation)
    if res.failures:
        write_csv(d / "failures.csv", ["epsilon", "error"], [(e, m.replace(",", ";")) for e, m in res.failures.items()])
    for name in sorted({r.comparator for r in res.sup_rows}):
        eps = [r.epsilon for r in res.sup_rows if r.comparator == name]
        err = [r.l2_error for r in res.sup_rows if r.comparator == name]
        write_dat(d / f"sup_{name}.dat", [eps, err], "epsilon sup_l2_error")
    if "maslov" in res.extras:
        write_csv(d / "maslov.csv", ["epsilon", "phase", "expected", "error"],
                  [(e, v["phase"], v["expected"], v["error"]) for e, v in res.extras["maslov"].items()])
    sres = res.extras.get("scattering")
    if isinstance(sres, ScatteringResult):
        convergence_log_csv(sres, d / "scattering_convergence.csv")


# -- other kinds ------------------------------------------------------------

def run_scatter(cfg: RunConfig) -> ScatteringResult:
    _, sres = scatter_profile(cfg)
    if cfg.out_dir:
        d = Path(cfg.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        convergence_log_csv(sres, d / "scattering_convergence.csv")
        write_field(sres.psi_plus, d / "psi_plus.hfld")
        write_csv(d / "scattering.csv", ["gamma", "certificate", "horizon", "converged", "small_data_norm"],
                  [(cfg.gamma, sres.convergence_certificate, sres.horizon_used, int(sres.converged),
                    cfg.small_data_norm)])
    return sres


def run_wigner(cfg: RunConfig) -> list:
    """Concentration of |W| near the classical line xi = -x tan t for each eps; rows (eps, t, band, fraction)."""
    rows = []
    t = cfg.wigner_time
    for eps in cfg.epsilons:
        grid = cfg.grid_for(eps)
        f = initial_field(cfg, grid, eps)
        sc = replace(cfg, t_end=t).solver(eps)
        k = build_kernel(grid, cfg.gamma, cfg.zero_mode) if cfg.gamma is not None else None
        u = evolve(f, sc, k, [t])[0]
        coarsen = cfg.wigner_coarsen or max(1, grid.points_per_axis // 32)
        band = cfg.wigner_band * math.sqrt(eps)
        rows.append((eps, t, band, wigner_concentration(u, t, band, coarsen)))
    if cfg.out_dir:
        d = Path(cfg.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        write_csv(d / "wigner.csv", ["epsilon", "time", "band", "fraction"], rows)
        write_dat(d / "wigner.dat", [[r[0] for r in rows], [r[3] for r in rows]], "epsilon fraction")
    return rows


def run_experiment(cfg: RunConfig, threads: int = 1):
    if cfg.kind == "classify":
        return classify_regime(cfg.alpha, cfg.gamma, cfg.beta, cfg.sigma, cfg.dim)
    if cfg.kind == "scatter":
        return run_scatter(cfg)
    if cfg.kind == "wigner":
        return run_wigner(cfg)
    if cfg.kind == "single":
        cfg = replace(cfg, epsilons=cfg.epsilons[:1])
    res = run_sweep(cfg, threads)
    if cfg.out_dir:
        write_outputs(res, cfg.out_dir)
    return res
