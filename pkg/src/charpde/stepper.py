"""Adaptive explicit Runge-Kutta stepping with Hermite dense output and
bisection-based event localization."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from charpde.core import NonFiniteError, SolverError

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th order and the embedded 4th order weights,
# the last entry multiplies the FSAL stage f(t + h, y_new)
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepUnderflow(SolverError):
    pass


class NoCrossing(SolverError):
    pass


@dataclass(frozen=True)
class OdeSystem:
    dimension: int
    rhs: Rhs


@dataclass
class StepResult:
    """Outcome of one attempted step from ``t`` to ``t_new``.

    ``error`` is the scaled error norm; the step is accepted when it is at
    most one. Rejected steps carry only ``h_next``.
    """

    t: float
    y: np.ndarray
    t_new: float
    y_new: np.ndarray
    f: np.ndarray
    f_new: np.ndarray
    error: float
    h_next: float
    accepted: bool
    _coeffs: tuple | None = field(default=None, repr=False)

    @property
    def h(self) -> float:
        return self.t_new - self.t

    def dense(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolant matching values and slopes at both ends."""
        if t == self.t_new:
            return self.y_new.copy()
        if self._coeffs is None:
            h = self.h
            delta = self.y_new - self.y
            self._coeffs = (
                h * self.f,
                3.0 * delta - h * (2.0 * self.f + self.f_new),
                h * (self.f + self.f_new) - 2.0 * delta,
            )
        c1, c2, c3 = self._coeffs
        s = (t - self.t) / self.h
        return self.y + s * (c1 + s * (c2 + s * c3))


def _evaluate(rhs: Rhs, t: float, y: np.ndarray) -> np.ndarray:
    f = np.asarray(rhs(t, y), dtype=float)
    if not math.isfinite(f.sum()) and not np.all(np.isfinite(f)):
        raise NonFiniteError(f"right-hand side is not finite at t={t:.6g}")
    return f


def try_step(
    rhs: Rhs,
    t: float,
    y: np.ndarray,
    h: float,
    abs_tol: float,
    rel_tol: float,
    *,
    max_step: float = math.inf,
    f0: np.ndarray | None = None,
) -> StepResult:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    if h < 1.0e3 * np.finfo(float).eps * abs(t):
        raise StepUnderflow(f"step size {h:.3e} too small at t={t:.6g}")

    y = np.asarray(y, dtype=float)
    if f0 is None:
        f0 = _evaluate(rhs, t, y)

    k = [f0]
    for i in range(1, 6):
        dy = sum(a * kj for a, kj in zip(_A[i], k))
        k.append(_evaluate(rhs, t + _C[i] * h, y + h * dy))

    y_new = y + h * sum(b * kj for b, kj in zip(_B, k))
    if not math.isfinite(y_new.sum()) and not np.all(np.isfinite(y_new)):
        raise NonFiniteError(f"solution is not finite at t={t + h:.6g}")
    f_new = _evaluate(rhs, t + h, y_new)
    k.append(f_new)

    err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    error = float(np.max(np.abs(err) / scale)) if y.size else 0.0

    if error == 0.0:
        factor = MAX_FACTOR
    else:
        factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * error**-0.2))
    h_next = min(h * factor, max_step)

    return StepResult(
        t=t, y=y, t_new=t + h, y_new=y_new, f=f0, f_new=f_new,
        error=error, h_next=h_next, accepted=error <= 1.0,
    )


def initial_step(rhs: Rhs, t: float, y: np.ndarray, f0: np.ndarray,
                 abs_tol: float, rel_tol: float, max_step: float) -> float:
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = np.max(np.abs(y) / scale) if y.size else 0.0
    d1 = np.max(np.abs(f0) / scale) if y.size else 0.0
    h = 1.0e-6 if d0 < 1.0e-5 or d1 < 1.0e-5 else 0.01 * d0 / d1
    return min(max(h, 1.0e-6), max_step)


# {{{ events


class Direction(str, Enum):
    RISING = "rising"
    FALLING = "falling"
    ANY = "any"


@dataclass(frozen=True)
class EventFn:
    """Zero crossing of ``g(t, y)``.

    A rising event holds when ``g >= 0`` and fires when ``g`` goes from
    negative to nonnegative; falling is the mirror image.
    """

    g: Callable[[float, np.ndarray], float]
    direction: Direction = Direction.RISING
    label: Any = None

    def holds(self, value: float, reference: float | None = None) -> bool:
        if self.direction is Direction.RISING:
            return value >= 0.0
        if self.direction is Direction.FALLING:
            return value <= 0.0
        if reference is None:
            return value == 0.0
        return value == 0.0 or (value > 0.0) != (reference > 0.0)

    def crossed(self, before: float, after: float) -> bool:
        if self.direction is Direction.ANY:
            return before != 0.0 and self.holds(after, before)
        return not self.holds(before) and self.holds(after)


def bracket_event(
    ev: EventFn,
    t_lo: float,
    t_hi: float,
    dense: Callable[[float], np.ndarray],
    event_tol: float,
) -> tuple[float, float]:
    """Shrink ``[t_lo, t_hi]`` by bisection around the first crossing.

    Returns ``(lo, hi)`` with ``hi - lo <= event_tol``, the event not yet
    holding at ``lo`` and holding at ``hi``.
    """
    g_lo = ev.g(t_lo, dense(t_lo))
    g_hi = ev.g(t_hi, dense(t_hi))
    if not ev.crossed(g_lo, g_hi):
        raise NoCrossing(f"no {ev.direction.value} crossing of {ev.label!r} in [{t_lo}, {t_hi}]")

    lo, hi = t_lo, t_hi
    while hi - lo > event_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if ev.holds(ev.g(mid, dense(mid)), g_lo):
            hi = mid
        else:
            lo = mid
    return lo, hi


def locate_event(
    ev: EventFn,
    t_lo: float,
    t_hi: float,
    dense: Callable[[float], np.ndarray],
    event_tol: float,
) -> float:
    return bracket_event(ev, t_lo, t_hi, dense, event_tol)[1]


# }}}


def integrate(
    rhs: Rhs,
    t0: float,
    y0: np.ndarray,
    t_end: float,
    *,
    abs_tol: float = 1.0e-9,
    rel_tol: float = 1.0e-6,
    max_step: float = math.inf,
    sample_times: Sequence[float] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate without events from ``t0`` to ``t_end``.

    Returns the state at ``t_end`` and the dense-output samples at
    ``sample_times`` (one row each).
    """
    y = np.asarray(y0, dtype=float).copy()
    samples = np.empty((len(sample_times), y.size))
    ts = np.asarray(sample_times, dtype=float)
    if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < t0 or ts[-1] > t_end):
        raise ValueError("sample times must be sorted and lie in [t0, t_end]")

    t = t0
    j = 0
    while j < ts.size and ts[j] <= t0:
        samples[j] = y
        j += 1

    f = _evaluate(rhs, t, y)
    h = initial_step(rhs, t, y, f, abs_tol, rel_tol, max_step)
    while t < t_end:
        last = h >= t_end - t
        step = try_step(rhs, t, y, t_end - t if last else h, abs_tol, rel_tol,
                        max_step=max_step, f0=f)
        if not step.accepted:
            h = step.h_next
            continue
        t_new = t_end if last else step.t_new
        while j < ts.size and ts[j] <= t_new:
            samples[j] = step.dense(min(ts[j], step.t_new))
            j += 1
        t, y, f, h = t_new, step.y_new, step.f_new, step.h_next
    return y, samples
