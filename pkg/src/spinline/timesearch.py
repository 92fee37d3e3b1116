"""Coarse-grid scan followed by golden-section refinement of a 1-D maximum."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = ["time_grid", "maximize_on_window", "EdgeOfWindowWarning"]


class EdgeOfWindowWarning(UserWarning):
    """The maximizer sits within one grid step of the search window's edge."""


def time_grid(window: tuple[float, float], dt: float) -> np.ndarray:
    lo, hi = map(float, window)
    if not (hi > lo):
        raise ValueError(f"empty time window {window!r}")
    if dt <= 0:
        raise ValueError("grid step must be positive")
    n = int(np.floor((hi - lo) / dt + 1e-9))
    return lo + dt * np.arange(n + 1)


def _local_maxima(values: np.ndarray) -> np.ndarray:
    v = values
    left = np.r_[-np.inf, v[:-1]]
    right = np.r_[v[1:], -np.inf]
    return np.flatnonzero((v >= left) & (v >= right))


def maximize_on_window(
    f_grid: Callable[[np.ndarray], np.ndarray],
    f: Callable[[float], float],
    window: tuple[float, float],
    dt: float = 0.05,
    n_refine: int = 5,
    tol: float = 1e-4,
    tie: float = 1e-12,
) -> tuple[float, float]:
    """Global maximum of ``f`` on ``window``.

    ``f_grid`` evaluates ``f`` on an array of times. The best ``n_refine``
    local maxima of the grid are refined until their bracket is narrower than
    ``tol``; the highest refined value wins, the smaller time among values within
    ``tie`` of each other.
    """
    ts = time_grid(window, dt)
    vals = np.asarray(f_grid(ts), dtype=float)
    peaks = _local_maxima(vals)
    # stable sort keeps the smaller time first among equal values
    peaks = peaks[np.argsort(-vals[peaks], kind="stable")][:n_refine]

    best_t, best_v = None, -np.inf
    for i in peaks:
        strict = 0 < i < ts.size - 1 and vals[i] > vals[i - 1] and vals[i] > vals[i + 1]
        if strict:
            t_mid = ts[i]
            res = minimize_scalar(
                lambda t: -f(t),
                bracket=(ts[i - 1], t_mid, ts[i + 1]),
                method="golden",
                tol=tol / (2.0 * abs(t_mid) + 1e-300),
            )
        else:
            # window edge or plateau: golden needs a strict bracket
            lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
            res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded", options={"xatol": tol / 2})
        t, v = float(res.x), -float(res.fun)
        if v < vals[i]:
            t, v = float(ts[i]), float(vals[i])
        # refined values equal to rounding are ties
        if v > best_v + tie or (abs(v - best_v) <= tie and t < best_t):
            best_t, best_v = t, v

    if best_t - ts[0] < dt or ts[-1] - best_t < dt:
        warnings.warn(
            f"maximum at t={best_t:.6g} lies on the edge of the window [{ts[0]:.6g}, {ts[-1]:.6g}]",
            EdgeOfWindowWarning,
            stacklevel=3,
        )
    return best_t, best_v
