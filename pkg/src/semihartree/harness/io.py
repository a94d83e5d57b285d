"""Config parsing, CSV / .dat writers and the HFLD1 binary field format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..grid import Field, make_grid

MAGIC = b"HFLD1\x00"
_HEADER = struct.Struct("<IIddd")


class ConfigError(ValueError):
    pass


# key -> converter; everything a RunConfig understands
KNOWN_KEYS = {
    "grid.n": int,
    "grid.N": int,
    "grid.L": str,              # number or "auto"
    "solver.epsilon": float,
    "solver.epsilons": str,     # comma-separated ladder
    "solver.alpha": float,
    "solver.dt": float,
    "solver.t_end": str,        # expression in pi, e.g. "3*pi/4"
    "solver.splitting": str,
    "hartree.gamma": float,
    "hartree.zero_mode": str,
    "hartree.enabled": str,
    "xalpha.beta": float,
    "xalpha.sigma": float,
    "profile.name": str,
    "profile.amplitude": float,
    "profile.widths": str,
    "profile.center": str,
    "profile.momentum": str,
    "profile.poly": str,
    "profile.sigma_norm": float,
    "profile.path": str,
    "experiment.kind": str,
    "experiment.comparator": str,
    "experiment.snapshots": str,
    "experiment.write_fields": str,
    "scattering.horizon": float,
    "scattering.dt": float,
    "scattering.tol": float,
    "scattering.small_data_norm": float,
    "scattering.N": int,
    "scattering.L": float,
    "scattering.max_horizon": float,
    "wigner.coarsen": int,
    "wigner.band": float,
    "wigner.time": str,
    "output.dir": str,
}


def parse_config(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        try:
            out[key] = KNOWN_KEYS[key](val)
        except ValueError:
            raise ConfigError(f"{source}:{no}: bad value {val!r} for {key!r}") from None
    return out


def read_config(path) -> dict:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), str(p))


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    """Numbers with 17 significant digits, so float(text) round-trips exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path) -> tuple:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = []
        for s in ln.split(","):
            try:
                vals.append(float(s))
            except ValueError:
                vals.append(s)
        rows.append(vals)
    return header, rows


def write_dat(path, columns, comment: str = "") -> None:
    """Whitespace-separated columns for gnuplot."""
    cols = [np.ravel(np.asarray(c, dtype=float)) for c in columns]
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for row in zip(*cols):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def write_field(u: Field, path) -> None:
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(g.dim, g.points_per_axis, g.half_extent, u.epsilon, u.time))
        fh.write(np.ascontiguousarray(u.values, dtype="<c16").tobytes())


def read_field(path) -> Field:
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not an HFLD1 file")
    off = len(MAGIC)
    dim, N, L, eps, t = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    count = N ** dim
    if len(data) - off != 16 * count:
        raise ValueError(f"{path}: expected {count} samples, found {(len(data) - off) / 16:g}")
    vals = np.frombuffer(data, dtype="<c16", count=count, offset=off).reshape((N,) * dim)
    return Field(make_grid(dim, N, L), vals.astype(complex), eps, t)
