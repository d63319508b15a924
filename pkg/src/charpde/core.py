"""Shared domain types: problem definitions, solver parameters, the
characteristic pool and the state interpolant."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np

Array = Any

# (t, x, w, state) -> array broadcastable to x
FieldFn = Callable[[float, Array, Array, "StateView"], Array]
# (t, state) -> scalar, state is the view without the boundary point
BoundaryFn = Callable[[float, "StateView"], float]


# {{{ errors


class SolverError(Exception):
    """Base class for all failures raised by the solvers."""


class CapacityExceeded(SolverError):
    pass


class PoolOverflow(CapacityExceeded):
    """A characteristic had to be created while the pool was full."""

    def __init__(self, t: float, capacity: int) -> None:
        super().__init__(f"characteristic pool overflow at t={t:.6g} (n_max={capacity})")
        self.t = float(t)
        self.capacity = capacity
        self.trajectory = None


class PoolUnderflow(SolverError):
    pass


class ProfileInvalid(SolverError):
    pass


class VelocityNotPositive(SolverError):
    pass


class NonFiniteError(SolverError):
    pass


class ShockError(SolverError):
    """Characteristics crossed beyond the allowed tolerance."""

    def __init__(self, t: float, index: int) -> None:
        super().__init__(
            f"crossing characteristics at t={t:.6g} (index {index}): "
            "shock wave, method of characteristics not applicable"
        )
        self.t = float(t)
        self.index = index
        self.trajectory = None


# }}}


# {{{ problem and parameters


class Interp(str, Enum):
    NEAREST = "nearest"
    LINEAR = "linear"


def _pointwise(fn: Callable[..., Array]) -> FieldFn:
    return lambda t, x, w, state: fn(t, x, w)


@dataclass(frozen=True)
class ProblemDef:
    """First-order quasilinear problem ``w_t + v w_x = f`` on ``[0, ell]``.

    ``velocity`` and ``source`` are called as ``fn(t, x, w, state)`` with
    arrays ``x`` (positions) and ``w`` (the local solution values at ``x``)
    and must broadcast against ``x``. ``state`` is the current
    :class:`StateView`, so full-state terms such as integrals are available.
    Both must be defined for ``x > ell``.

    ``boundary_input`` is called as ``u(t, state)`` where ``state`` excludes
    the boundary point, which allows output feedback such as ``u = w(t, ell)``.
    """

    ell: float
    velocity: FieldFn
    source: FieldFn
    boundary_input: BoundaryFn
    initial_profile: tuple[tuple[float, float], ...]
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.ell > 0:
            raise ValueError(f"domain length must be positive: {self.ell}")
        object.__setattr__(
            self,
            "initial_profile",
            tuple((float(x), float(w)) for x, w in self.initial_profile),
        )
        validate_profile(self.initial_profile, self.ell)

    @classmethod
    def pointwise(
        cls,
        ell: float,
        velocity: Callable[[float, Array, Array], Array],
        source: Callable[[float, Array, Array], Array],
        boundary_input: Callable[[float], float],
        initial_profile: Sequence[tuple[float, float]],
        name: str = "custom",
    ) -> ProblemDef:
        """Build a problem whose terms depend only on ``(t, x, w(t, x))``."""
        return cls(
            ell=ell,
            velocity=_pointwise(velocity),
            source=_pointwise(source),
            boundary_input=lambda t, state: boundary_input(t),
            initial_profile=tuple(initial_profile),
            name=name,
        )

    def initial_value(self, x: Array, *, right: bool = True) -> Array:
        """Piecewise-linear initial profile; at jumps takes the right limit
        (or the left one with ``right=False``). Constant beyond ``ell``."""
        xs = np.array([k[0] for k in self.initial_profile])
        ws = np.array([k[1] for k in self.initial_profile])
        return interpolate_linear(xs, ws, x, right=right)


def validate_profile(knots: Sequence[tuple[float, float]], ell: float) -> None:
    if len(knots) < 2:
        raise ProfileInvalid("initial profile needs at least two knots")

    xs = [k[0] for k in knots]
    if not all(math.isfinite(x) and math.isfinite(w) for x, w in knots):
        raise ProfileInvalid("initial profile contains non-finite values")
    if xs[0] != 0.0:
        raise ProfileInvalid(f"first knot must be at x=0, got {xs[0]}")
    if not math.isclose(xs[-1], ell, rel_tol=1e-12, abs_tol=1e-14):
        raise ProfileInvalid(f"last knot must be at x={ell}, got {xs[-1]}")
    for a, b in zip(xs, xs[1:]):
        if b < a:
            raise ProfileInvalid("knot abscissae must be nondecreasing")
    for a, b, c in zip(xs, xs[1:], xs[2:]):
        if a == b == c:
            raise ProfileInvalid(f"more than two knots share x={a}")


@dataclass(frozen=True)
class SolverParams:
    dx: float
    dw: float
    dt: float
    n_max: int = 1000
    crossing_tol: float = 1.0e-6
    terminate_on_overflow: bool = True
    interp_scheme: Interp = Interp.LINEAR
    abs_tol: float = 1.0e-9
    rel_tol: float = 1.0e-6
    max_step: float = 0.1
    event_tol: float = 1.0e-10
    v_min: float = 1.0e-12

    def __post_init__(self) -> None:
        object.__setattr__(self, "interp_scheme", Interp(self.interp_scheme))
        for name in ("dx", "dw", "dt", "abs_tol", "rel_tol", "max_step", "event_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive number, got {value!r}")
        if not self.crossing_tol >= 0:
            raise ValueError(f"crossing_tol must be >= 0, got {self.crossing_tol!r}")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max!r}")

    def check_domain(self, ell: float) -> None:
        if not 0 < self.dx < ell:
            raise ValueError(f"dx must lie in (0, ell={ell}), got {self.dx}")


# }}}


# {{{ cyclic buffer


class CharacteristicPool:
    """Fixed-capacity cyclic buffer holding characteristic positions and
    values, newest first.

    Logical element ``i`` (0-based here) lives at storage index
    ``(head + i) % capacity``. Creation prepends and removal drops the
    oldest element; neither moves stored data.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 2:
            raise ValueError("capacity must be at least 2")

        self.capacity = int(capacity)
        self.xi_store = np.zeros(self.capacity)
        self.omega_store = np.zeros(self.capacity)
        self.head = 0
        self.count = 0
        self.t_lc = 0.0

    @classmethod
    def from_nodes(cls, capacity: int, xi: Array, omega: Array, t_lc: float = 0.0) -> CharacteristicPool:
        xi = np.asarray(xi, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if xi.shape != omega.shape or xi.ndim != 1:
            raise ValueError("xi and omega must be 1d arrays of equal length")
        if xi.size > capacity:
            raise CapacityExceeded(f"{xi.size} characteristics exceed n_max={capacity}")

        pool = cls(capacity)
        pool.count = xi.size
        pool.xi_store[: xi.size] = xi
        pool.omega_store[: xi.size] = omega
        pool.t_lc = t_lc
        return pool

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(capacity={self.capacity}, head={self.head}, "
            f"count={self.count}, nodes={list(zip(self.xi(), self.omega()))})"
        )

    @property
    def tail(self) -> int:
        return (self.head + self.count - 1) % self.capacity

    def indices(self) -> np.ndarray:
        return (self.head + np.arange(self.count)) % self.capacity

    def xi(self) -> np.ndarray:
        return self.xi_store[self.indices()]

    def omega(self) -> np.ndarray:
        return self.omega_store[self.indices()]

    def set_nodes(self, xi: Array, omega: Array) -> None:
        idx = self.indices()
        self.xi_store[idx] = xi
        self.omega_store[idx] = omega

    def push_front(self, xi: float, omega: float) -> None:
        if self.count >= self.capacity:
            raise CapacityExceeded(f"pool is full (capacity {self.capacity})")

        self.head = (self.head - 1) % self.capacity
        self.xi_store[self.head] = xi
        self.omega_store[self.head] = omega
        self.count += 1

    def pop_back(self) -> tuple[float, float]:
        if self.count <= 2:
            raise PoolUnderflow("the pool must keep at least two characteristics")

        i = self.tail
        self.count -= 1
        return float(self.xi_store[i]), float(self.omega_store[i])

    def copy(self) -> CharacteristicPool:
        other = CharacteristicPool(self.capacity)
        other.xi_store = self.xi_store.copy()
        other.omega_store = self.omega_store.copy()
        other.head, other.count, other.t_lc = self.head, self.count, self.t_lc
        return other


# }}}


# {{{ interpolation


def interpolate_linear(xs: np.ndarray, ws: np.ndarray, x: Array, *, right: bool = True) -> Array:
    """Piecewise-linear interpolation over nondecreasing ``xs`` that may
    contain coincident pairs (jumps).

    Below a jump the left value is approached, above it the right one;
    exactly at the jump the right (``right=True``) or left value is returned.
    Outside ``[xs[0], xs[-1]]`` the end values are held.
    """
    n = xs.size
    if np.ndim(x) == 0:
        x = float(x)
        j = int(np.searchsorted(xs, x, side="right" if right else "left"))
        if j <= 0:
            return float(ws[0])
        if j >= n:
            return float(ws[-1])
        x0, x1 = xs[j - 1], xs[j]
        if x1 <= x0:
            return float(ws[j - 1])
        theta = min(max((x - x0) / (x1 - x0), 0.0), 1.0)
        return float(ws[j - 1] + theta * (ws[j] - ws[j - 1]))

    x = np.asarray(x, dtype=float)
    j = np.searchsorted(xs, x, side="right" if right else "left")
    lo = np.clip(j - 1, 0, n - 1)
    hi = np.clip(j, 0, n - 1)

    x0, x1 = xs[lo], xs[hi]
    w0, w1 = ws[lo], ws[hi]
    span = x1 - x0
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(span > 0, (x - x0) / np.where(span > 0, span, 1.0), 0.0)
    theta = np.clip(theta, 0.0, 1.0)
    result = w0 + theta * (w1 - w0)
    return result if result.ndim else float(result)


def interpolate_nearest(xs: np.ndarray, ws: np.ndarray, x: Array) -> Array:
    x = np.asarray(x, dtype=float)
    n = xs.size
    j = np.searchsorted(xs, x, side="right")
    lo = np.clip(j - 1, 0, n - 1)
    hi = np.clip(j, 0, n - 1)
    pick = np.where(np.abs(xs[hi] - x) < np.abs(x - xs[lo]), hi, lo)
    result = ws[pick]
    return result if result.ndim else float(result)


@dataclass(frozen=True)
class StateView:
    """Interpolant of the state over the grid ``(0, u)`` and the nodes
    ``(xi_i, omega_i)``.

    Node abscissae may be out of order by up to the crossing tolerance;
    they are made monotone by a running maximum, which turns such near
    crossings into coincident pairs. Queries beyond the last node return
    its value. With ``boundary_value=None`` the grid consists of the nodes
    only and the first node value is held towards ``x = 0``.
    """

    boundary_value: float | None
    xi: np.ndarray
    omega: np.ndarray
    ell: float
    scheme: Interp = Interp.LINEAR

    @cached_property
    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        xs = np.maximum.accumulate(np.asarray(self.xi, dtype=float))
        ws = np.asarray(self.omega, dtype=float)
        if self.boundary_value is None:
            return xs, ws
        return np.concatenate(([0.0], xs)), np.concatenate(([self.boundary_value], ws))

    def __call__(self, x: Array) -> Array:
        xs, ws = self.grid
        if self.scheme is Interp.NEAREST:
            return interpolate_nearest(xs, ws, x)
        return interpolate_linear(xs, ws, x)

    @cached_property
    def output(self) -> float:
        """Value at the outflow boundary ``x = ell``."""
        return float(self(self.ell))

    @cached_property
    def integral(self) -> float:
        """Trapezoidal rule over the grid clipped to ``[0, ell]``; exact for
        the linear interpolant."""
        xs, ws = self.grid
        inside = xs < self.ell
        px = np.concatenate((xs[inside], [self.ell]))
        pw = np.concatenate((ws[inside], [self.output]))
        if px[0] > 0.0:
            px = np.concatenate(([0.0], px))
            pw = np.concatenate(([float(self(0.0))], pw))
        return trapezoid_nonuniform(px, pw)


def trapezoid_nonuniform(x: np.ndarray, w: np.ndarray) -> float:
    return float(np.sum(0.5 * (w[1:] + w[:-1]) * np.diff(x)))


# }}}


# {{{ output records


class EventKind(str, Enum):
    REMOVAL = "removal"
    CREATION = "creation"
    SHOCK = "shock"
    OVERFLOW = "overflow"


class CreationCause(str, Enum):
    XGAP = "xgap"
    WGAP = "wgap"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SolveEvent:
    t: float
    kind: EventKind
    n_after: int
    cause: CreationCause | None = None
    index: int | None = None


@dataclass(frozen=True)
class Snapshot:
    t: float
    x: np.ndarray
    w: np.ndarray

    def __call__(self, x: Array, scheme: Interp = Interp.LINEAR) -> Array:
        xs = np.maximum.accumulate(self.x)
        if Interp(scheme) is Interp.NEAREST:
            return interpolate_nearest(xs, self.w, x)
        return interpolate_linear(xs, self.w, x)


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    n_history: list[int] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    events: list[SolveEvent] = field(default_factory=list)
    t_final: float = 0.0

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times, dtype=float), np.asarray(self.y, dtype=float)

    def count(self, kind: EventKind) -> int:
        return sum(1 for ev in self.events if ev.kind is kind)


# }}}
