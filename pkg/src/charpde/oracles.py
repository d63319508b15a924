"""Closed-form reference solutions used to check the solvers."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from charpde.core import SolverError


class NoShock(SolverError):
    pass


def _growth(gamma: float, t):
    a = np.exp(gamma * np.asarray(t, dtype=float))
    s = np.asarray(t, dtype=float) if gamma == 0 else (a - 1.0) / gamma
    return a, s


def exact_output(gamma: float, t):
    """Outflow value of the recirculating state-feedback plant started from
    the unit step at ``x = 1/2``: ``exp(gamma t)`` while the fractional part
    of the transported mass coordinate is below one half, zero otherwise."""
    a, s = _growth(gamma, t)
    frac = s - np.floor(s)
    y = np.where(frac < 0.5, a, 0.0)
    return float(y) if y.ndim == 0 else y


def jump_times(gamma: float, t_end: float) -> list[float]:
    """Discontinuities of :func:`exact_output` in ``(0, t_end]``."""
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    times = []
    m = 1
    while True:
        if gamma == 0:
            tj = m / 2
        else:
            arg = 1.0 + gamma * m / 2
            if arg <= 0:
                break
            tj = math.log(arg) / gamma
        if tj > t_end:
            break
        times.append(tj)
        m += 1
    return times


def transport_delay(u: Callable[[float], float], w0: Callable[[float], float], x: float, t: float) -> float:
    """Solution of ``w_t + w_x = 0`` with inflow ``u`` and initial data ``w0``."""
    return w0(x - t) if t <= x else u(t - x)


def shock_time(w0_slope_min: float) -> float:
    """Gradient catastrophe time of ``w_t + w w_x = 0``."""
    if not w0_slope_min < 0:
        raise NoShock("characteristics do not converge for a nondecreasing profile")
    return -1.0 / w0_slope_min
