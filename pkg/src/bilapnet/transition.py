"""Locate the time after which a trajectory stays nonnegative."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

GRID_POINTS = 400
CERTIFY_POINTS = 400
HORIZON_FACTOR = 10.0


@dataclass
class TransitionResult:
    t_star: float | None
    horizon: float
    certified: bool
    status: str  # "ok" | "never_positive_within_horizon"
    samples: list[tuple[float, float]] = field(default_factory=list, repr=False)


def find_transition_time(min_value: Callable[[float], float], lambda2: float,
                         tol: float = 1e-10, t_min: float | None = None,
                         search_end: float | None = None,
                         rel_tol: float = 1e-6) -> TransitionResult:
    """Smallest sampled t* with ``min_value(t) >= -tol`` for all t in [t*, t* + 10/lambda2].

    The search scans a geometric grid, bisects the last negative-to-nonnegative
    crossing and certifies forward on a fine grid. A later dip restarts the
    bisection past the dip.
    """
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    window = HORIZON_FACTOR / lambda2
    t_min = t_min if t_min is not None else 1e-6 / lambda2
    search_end = search_end if search_end is not None else 2 * window
    grid = np.concatenate([[0.0], np.geomspace(t_min, search_end, GRID_POINTS)])
    values = np.array([min_value(t) for t in grid])
    samples = list(zip(grid.tolist(), values.tolist()))

    neg = np.flatnonzero(values < -tol)
    if neg.size == 0:
        t_star = 0.0
    elif neg[-1] == grid.size - 1:
        return TransitionResult(None, float(search_end), False,
                                "never_positive_within_horizon", samples)
    else:
        t_star = _bisect(min_value, grid[neg[-1]], grid[neg[-1] + 1], tol, rel_tol)

    for _ in range(8):
        check = np.linspace(t_star, t_star + window, CERTIFY_POINTS)
        vals = np.array([min_value(t) for t in check])
        samples.extend(zip(check.tolist(), vals.tolist()))
        bad = np.flatnonzero(vals < -tol)
        if bad.size == 0:
            samples.sort()
            return TransitionResult(float(t_star), float(t_star + window), True, "ok", samples)
        k = bad[-1]
        if k == check.size - 1:
            break
        t_star = _bisect(min_value, check[k], check[k + 1], tol, rel_tol)
    samples.sort()
    return TransitionResult(None, float(t_star + window), False,
                            "never_positive_within_horizon", samples)


def _bisect(g, lo, hi, tol, rel_tol):
    # invariant: g(lo) < -tol <= g(hi)
    while hi - lo > rel_tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if g(mid) < -tol:
            lo = mid
        else:
            hi = mid
    return hi
