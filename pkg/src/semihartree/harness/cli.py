"""Command line entry point: run, sweep, scatter, wigner, classify."""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .experiments import RunConfig, run_experiment
from .io import ConfigError, read_config, write_csv
from .profiles import ProfileSpec
from .regime import classify_regime

_EXPR = re.compile(r"^[0-9eE.+\-*/() pi]+$")


def parse_time(text: str) -> float:
    """Numbers and products/quotients with pi, e.g. ``3*pi/4``."""
    s = text.strip()
    if not _EXPR.match(s):
        raise ValueError(f"bad time expression {text!r}")
    return float(eval(s, {"__builtins__": {}}, {"pi": math.pi}))  # guarded by the regex above


def _floats(text: str) -> tuple:
    return tuple(parse_time(p) for p in text.split(",") if p.strip())


def _number(text: str):
    """Exact Fraction for 'p/q' or integers, float otherwise."""
    s = text.strip()
    if re.fullmatch(r"[+-]?\d+(/\d+)?", s):
        return Fraction(s)
    return float(s)


def run_config_from(d: dict, kind: str | None = None, out: str | None = None) -> RunConfig:
    cfg = RunConfig()
    kw = {}
    if "grid.n" in d:
        kw["dim"] = d["grid.n"]
    if "grid.N" in d:
        kw["points_per_axis"] = d["grid.N"]
    if "grid.L" in d and d["grid.L"].strip().lower() != "auto":
        kw["half_extent"] = float(d["grid.L"])
    if "solver.epsilons" in d:
        kw["epsilons"] = _floats(d["solver.epsilons"])
    elif "solver.epsilon" in d:
        kw["epsilons"] = (d["solver.epsilon"],)
    for key, name in (("solver.alpha", "alpha"), ("solver.dt", "dt"), ("xalpha.beta", "beta"),
                      ("xalpha.sigma", "sigma"), ("hartree.zero_mode", "zero_mode"),
                      ("scattering.horizon", "scatter_horizon"), ("scattering.dt", "scatter_dt"),
                      ("scattering.tol", "scatter_tol"), ("scattering.small_data_norm", "small_data_norm"),
                      ("scattering.N", "scatter_points"), ("scattering.L", "scatter_half_extent"),
                      ("scattering.max_horizon", "scatter_max_horizon"), ("wigner.coarsen", "wigner_coarsen"),
                      ("wigner.band", "wigner_band")):
        if key in d:
            kw[name] = d[key]
    if "hartree.gamma" in d:
        kw["gamma"] = d["hartree.gamma"]
    if d.get("hartree.enabled", "true").strip().lower() in ("false", "0", "no", "off"):
        kw["gamma"] = None
    if "solver.t_end" in d:
        kw["t_end"] = parse_time(d["solver.t_end"])
    if "wigner.time" in d:
        kw["wigner_time"] = parse_time(d["wigner.time"])
    if "experiment.snapshots" in d:
        kw["snapshots"] = _floats(d["experiment.snapshots"])
    if "experiment.comparator" in d:
        kw["comparators"] = tuple(c.strip() for c in d["experiment.comparator"].split(",") if c.strip())
    if "experiment.write_fields" in d:
        kw["write_fields"] = d["experiment.write_fields"].strip().lower() in ("true", "1", "yes", "on")
    prof = {}
    if "profile.name" in d:
        prof["name"] = d["profile.name"]
    if "profile.amplitude" in d:
        prof["amplitude"] = d["profile.amplitude"]
    for key, name in (("profile.widths", "widths"), ("profile.center", "center"), ("profile.poly", "poly")):
        if key in d:
            prof[name] = _floats(d[key])
    if "profile.sigma_norm" in d:
        prof["target_sigma_norm"] = d["profile.sigma_norm"]
    if prof:
        kw["profile"] = ProfileSpec(**prof)
    if "profile.path" in d:
        kw["profile_path"] = d["profile.path"]
    kw["kind"] = kind or d.get("experiment.kind", cfg.kind)
    if kw["kind"] == "run":
        kw["kind"] = "single"
    kw["out_dir"] = out or d.get("output.dir")
    return replace(cfg, **kw)


def _report(res, out) -> None:
    from .experiments import SweepResult
    from ..scattering import ScatteringResult
    if isinstance(res, SweepResult):
        for (name, t), (p, r, ok) in res.slopes.items():
            tag = "" if ok else "  (not reported: residual or point count)"
            print(f"slope {name} @ {t}: {p:.4f} residual {r:.3g}{tag}", file=out)
        for e, m in res.failures.items():
            print(f"eps = {e:g} FAILED: {m}", file=out)
        for e, m in res.extras.get("maslov", {}).items():
            print(f"eps = {e:g} Maslov phase {m['phase']:.6f} (expected {m['expected']:.6f})", file=out)
        if not res.slopes:
            for r in res.rows:
                print(f"eps = {r.epsilon:g} t = {r.time:.6g} {r.comparator}: l2 {r.l2_error:.6e}", file=out)
    elif isinstance(res, ScatteringResult):
        state = "converged" if res.converged else "UNCONVERGED"
        print(f"scattering {state}: certificate {res.convergence_certificate:.3e} at T = {res.horizon_used:g}", file=out)
    elif isinstance(res, list):
        for eps, t, band, frac in res:
            print(f"eps = {eps:g} t = {t:.6g} band {band:.4g}: fraction {frac:.6f}", file=out)
    else:
        print(res, file=out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semihartree", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "scatter", "wigner", "classify"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="reserved; all computations are deterministic")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "classify":
            p.add_argument("--alpha", type=_number)
            p.add_argument("--gamma", type=_number)
            p.add_argument("--beta", type=_number)
            p.add_argument("--sigma", type=_number)
            p.add_argument("--n", type=int, default=2)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        d = read_config(args.config) if args.config else {}
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "classify" and args.alpha is not None:
        try:
            label = classify_regime(args.alpha, args.gamma, args.beta, args.sigma, args.n)
        except (TypeError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(label)
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            write_csv(args.out / "regime.csv", ["alpha", "gamma", "beta", "sigma", "n", "wkb", "focus"],
                      [(args.alpha, args.gamma, args.beta, args.sigma, args.n, label.wkb, label.focus)])
        return 0
    kind = {"run": "single"}.get(args.command, args.command)
    try:
        cfg = run_config_from(d, kind, str(args.out) if args.out else None)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res = run_experiment(cfg, threads=args.threads)
    _report(res, sys.stdout)
    failed = getattr(res, "failures", None)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
