"""Least-squares power-law fitting shared by the scan modules."""

from __future__ import annotations

import numpy as np

__all__ = ["loglog_fit"]


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Fit log(y) = slope*log(x) + intercept; returns (slope, intercept, r_squared).

    Both inputs must be positive; r_squared is 1 - SS_res/SS_tot, clipped
    to [0, 1], with the degenerate constant-y case reported as 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length 1-D arrays with at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit requires positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0))
