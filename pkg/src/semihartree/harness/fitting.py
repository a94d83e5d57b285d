import math

import numpy as np


def fit_slope(epsilons, errors) -> tuple:
    """Least-squares p in log(err) = p log(eps) + c; returns (p, max |residual|) in natural log units."""
    e = np.asarray(epsilons, dtype=float)
    r = np.asarray(errors, dtype=float)
    if e.shape != r.shape or e.ndim != 1:
        raise ValueError("epsilons and errors must be equal-length sequences")
    if e.size < 4:
        raise ValueError(f"need at least 4 points, got {e.size}")
    if not (np.all(e > 0) and np.all(r > 0)) or not (np.all(np.isfinite(e)) and np.all(np.isfinite(r))):
        raise ValueError("epsilons and errors must be finite and strictly positive")
    x, y = np.log(e), np.log(r)
    A = np.vstack([x, np.ones_like(x)]).T
    (p, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.max(np.abs(y - (p * x + c))))
    return float(p), res


def reportable(slope_fit, n_points: int, max_residual: float = 0.1) -> bool:
    p, res = slope_fit
    return n_points >= 4 and res <= max_residual and math.isfinite(p)
