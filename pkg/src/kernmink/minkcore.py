"""Minkowski distances and per-cluster Minkowski centers.

Distances are returned in p-th power form, ``sum_l |x_l - y_l|**p``, which is
what the clustering objectives sum.  Centers minimize
``sum_i |x_i - m|**p`` independently in every coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "check_exponent",
    "is_fractional",
    "minkowski_pow_dist",
    "weighted_pow_dist",
    "center_objective",
    "coordinate_objective",
    "solve_center",
    "minkowski_center",
    "CenterResult",
    "check_weights",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
_CHUNK = 1 << 22


def check_exponent(p) -> float:
    p = float(p)
    if not p > 0 or not np.isfinite(p):
        raise ValueError(f"Minkowski exponent must be a finite p > 0, got {p}")
    return p


def is_fractional(p) -> bool:
    """True for 0 < p < 1, where the Minkowski 'norm' is only a prenorm."""
    return check_exponent(p) < 1


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def minkowski_pow_dist(x, y, p) -> float:
    x, y = _pair(x, y)
    p = check_exponent(p)
    return float(np.sum(np.abs(x - y) ** p))


def weighted_pow_dist(x, y, w_row, p) -> float:
    """``sum_l w_l**p * |x_l - y_l|**p``."""
    x, y = _pair(x, y)
    w = np.asarray(w_row, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"weight length {w.shape} does not match vectors {x.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    p = check_exponent(p)
    return float(np.sum(w**p * np.abs(x - y) ** p))


def check_weights(w, atol=1e-9) -> np.ndarray:
    """Validate a K x D' weight matrix: nonnegative rows summing to one."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise ValueError("weight matrix must be 2-D")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.allclose(w.sum(axis=1), 1.0, rtol=0, atol=atol):
        raise ValueError("each weight row must sum to 1")
    return w


def _points(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("center needs a nonempty list of points")
    return pts


def coordinate_objective(points, m, p) -> np.ndarray:
    """Per-coordinate objective ``sum_i |points[i, l] - m[l]|**p`` (length D)."""
    pts = _points(points)
    m = np.asarray(m, dtype=float)
    if m.shape != pts.shape[1:]:
        raise ValueError(f"center has shape {m.shape}, points have {pts.shape[1]} dims")
    return np.sum(np.abs(pts - m) ** p, axis=0)


def center_objective(points, m, p) -> float:
    """Summed p-power deviations of ``points`` from ``m``."""
    return float(np.sum(coordinate_objective(points, m, check_exponent(p))))


@dataclass
class CenterResult:
    center: np.ndarray
    iterations: int


def _descent(pts, p, start, tol, max_iter):
    """Per-coordinate steepest descent with step doubling / halving.

    Every coordinate carries its own step size.  A step is accepted only under
    the Armijo condition ``f(m - s g) <= f(m) - s g**2 / 2``, so the result is
    never worse than ``start``.
    """
    m = start.copy()
    f = coordinate_objective(pts, m, p)
    spread = np.ptp(pts, axis=0)
    step = np.where(spread > 0, spread, 1.0) / (p * pts.shape[0])
    active = np.ones(m.shape, dtype=bool)
    it = 0
    while it < max_iter and active.any():
        it += 1
        diff = m - pts
        g = p * np.sum(np.sign(diff) * np.abs(diff) ** (p - 1), axis=0)
        done = active & (step * np.abs(g) < tol)
        active &= ~done
        if not active.any():
            break
        # backtrack: halve rejected steps until accepted or negligible
        trial_step = step.copy()
        pending = active.copy()
        for _ in range(60):
            trial = np.where(pending, m - trial_step * g, m)
            ft = coordinate_objective(pts, trial, p)
            ok = pending & (ft <= f - 0.5 * trial_step * g * g) & (ft < f)
            m = np.where(ok, trial, m)
            f = np.where(ok, ft, f)
            step = np.where(ok, trial_step * 2.0, step)
            pending &= ~ok
            if not pending.any():
                break
            trial_step = np.where(pending, trial_step * 0.5, trial_step)
            stuck = pending & (trial_step * np.abs(g) < tol)
            active &= ~stuck
            step = np.where(stuck, trial_step, step)
            pending &= ~stuck
    return m, it


def _best_candidate(pts, p):
    """Exact minimizer for 0 < p < 1.

    Each term ``|x_i - m|**p`` is concave in ``m`` away from ``x_i``, so on each
    interval between consecutive data values the objective is concave and
    attains its minimum at an endpoint; the data values are a complete
    candidate set.
    """
    n, d = pts.shape
    out = np.empty(d)
    for l in range(d):
        col = pts[:, l]
        cand = np.unique(col)
        best_f, best_m = np.inf, cand[0]
        rows = max(1, _CHUNK // max(n, 1))
        for s in range(0, cand.size, rows):
            c = cand[s:s + rows]
            vals = np.sum(np.abs(col[None, :] - c[:, None]) ** p, axis=1)
            j = int(np.argmin(vals))
            if vals[j] < best_f:
                best_f, best_m = vals[j], c[j]
        out[l] = best_m
    return out


def solve_center(points, p, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> CenterResult:
    """Coordinate-wise Minkowski center with the number of solver iterations.

    ``p == 2`` gives the mean and ``p == 1`` the component-wise median
    (zero iterations).  For ``p > 1`` steepest descent starts from ``init``
    (default: the median).  For ``0 < p < 1`` the best data value per
    coordinate is returned.
    """
    pts = _points(points)
    p = check_exponent(p)
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if p == 2:
        return CenterResult(pts.mean(axis=0), 0)
    if p == 1:
        return CenterResult(np.median(pts, axis=0), 0)
    if p < 1:
        return CenterResult(_best_candidate(pts, p), 0)
    if init is None:
        start = np.median(pts, axis=0)
    else:
        start = np.array(init, dtype=float)
        if start.shape != pts.shape[1:]:
            raise ValueError("init has the wrong dimension")
    m, it = _descent(pts, p, start, tol, max_iter)
    return CenterResult(m, it)


def minkowski_center(points, p, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> np.ndarray:
    """Vector ``m`` minimizing ``sum_i |points_i - m|**p`` coordinate by coordinate."""
    return solve_center(points, p, init=init, tol=tol, max_iter=max_iter).center
