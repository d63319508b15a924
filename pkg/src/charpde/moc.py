"""Event-driven method of characteristics.

A pool of characteristics is integrated in parallel while the full state
is replaced by an interpolant over the characteristic nodes. New
characteristics enter at ``x = 0`` when the newest one has drifted too far
(in space, value or time) and the oldest is dropped once its successor has
left the domain.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from charpde.core import (
    CapacityExceeded,
    CharacteristicPool,
    CreationCause,
    EventKind,
    NonFiniteError,
    PoolOverflow,
    ProblemDef,
    ShockError,
    Snapshot,
    SolveEvent,
    SolverError,
    SolverParams,
    StateView,
    Trajectory,
    VelocityNotPositive,
)
from charpde.stepper import (
    Direction,
    EventFn,
    StepUnderflow,
    bracket_event,
    initial_step,
    try_step,
)

SHOCK, REMOVAL = "shock", "removal"
# lower value wins when several events fire within event_tol
_PRIORITY = {SHOCK: 0, REMOVAL: 1, CreationCause.XGAP: 2, CreationCause.WGAP: 3, CreationCause.TIMEOUT: 4}


@dataclass(frozen=True)
class ErrorBoundInputs:
    t_hat: float
    f_hat: float
    dx: float
    dw: float
    dt: float

    def __post_init__(self) -> None:
        for name in ("t_hat", "f_hat", "dx", "dw", "dt"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def error_bound(inputs: ErrorBoundInputs) -> tuple[float, float]:
    """Return ``(node_bound, state_bound)`` for Lipschitz pointwise problems.

    ``node_bound`` limits the distance between any point of the exact
    solution graph and the next characteristic node; ``state_bound`` limits
    the error of the linear or nearest interpolant.
    """
    growth = math.exp((inputs.t_hat + inputs.dt) * inputs.f_hat)
    node = growth * math.hypot(inputs.dx, inputs.dw)
    return node, 2.0 * node


# {{{ pool initialization and margins


def init_pool(problem: ProblemDef, params: SolverParams) -> CharacteristicPool:
    """Place characteristics on the initial profile.

    Every knot becomes a node; each interval between distinct knots is split
    uniformly until consecutive nodes are at most ``dx`` apart and differ by
    at most ``dw``. Coincident knots become coincident nodes (a jump).
    """
    params.check_domain(problem.ell)
    knots = problem.initial_profile

    xs = [knots[0][0]]
    ws = [knots[0][1]]
    for (a, wa), (b, wb) in zip(knots, knots[1:]):
        if b == a:
            xs.append(b)
            ws.append(wb)
            continue
        pieces = max(
            1,
            math.ceil((b - a) / params.dx - 1e-9),
            math.ceil(abs(wb - wa) / params.dw - 1e-9),
        )
        if len(xs) + pieces > params.n_max:
            raise CapacityExceeded(
                f"initial profile needs more than n_max={params.n_max} characteristics"
            )
        for k in range(1, pieces):
            xs.append(a + (b - a) * k / pieces)
            ws.append(wa + (wb - wa) * k / pieces)
        xs.append(b)
        ws.append(wb)

    xs[-1] = problem.ell
    return CharacteristicPool.from_nodes(params.n_max, xs, ws, t_lc=0.0)


def removal_margin(xi: np.ndarray, ell: float) -> float:
    return float(xi[-2] - ell)


def creation_margins(
    t: float, xi: np.ndarray, omega: np.ndarray, t_lc: float, u: float, params: SolverParams
) -> tuple[float, float, float]:
    return (
        float(xi[0] - params.dx),
        float(abs(omega[0] - u) - params.dw),
        float((t - t_lc) - params.dt),
    )


def shock_margin(xi: np.ndarray, crossing_tol: float) -> tuple[float, int]:
    """Smallest gap between neighbours plus the tolerance, and the 1-based
    index of the left member of the tightest pair."""
    gaps = np.diff(xi)
    i = int(np.argmin(gaps))
    return float(gaps[i] + crossing_tol), i + 1


def apply_creation(
    t: float, pool: CharacteristicPool, u: float, params: SolverParams,
    events: list[SolveEvent], cause: CreationCause,
) -> None:
    if pool.count >= pool.capacity:
        events.append(SolveEvent(t, EventKind.OVERFLOW, pool.count, cause=cause))
        if params.terminate_on_overflow:
            raise PoolOverflow(t, pool.capacity)
        return
    pool.push_front(0.0, u)
    pool.t_lc = t
    events.append(SolveEvent(t, EventKind.CREATION, pool.count, cause=cause))


def apply_removal(t: float, pool: CharacteristicPool, events: list[SolveEvent]) -> None:
    pool.pop_back()
    events.append(SolveEvent(t, EventKind.REMOVAL, pool.count))


# }}}


class MocSolver:
    def __init__(self, problem: ProblemDef, params: SolverParams) -> None:
        self.problem = problem
        self.params = params
        self.pool = init_pool(problem, params)
        self.t = 0.0
        self.events: list[SolveEvent] = []

    # {{{ continuous part

    def view(self, t: float, xi: np.ndarray, omega: np.ndarray) -> StateView:
        p = self.problem
        nodes = StateView(None, xi, omega, p.ell, self.params.interp_scheme)
        u = float(p.boundary_input(t, nodes))
        if not math.isfinite(u):
            raise NonFiniteError(f"boundary input is not finite at t={t:.6g}")
        return StateView(u, xi, omega, p.ell, self.params.interp_scheme)

    def derivatives(self, t: float, xi: np.ndarray, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        view = self.view(t, xi, omega)
        v = _as_field(self.problem.velocity(t, xi, omega, view), xi.shape)
        f = _as_field(self.problem.source(t, xi, omega, view), xi.shape)
        if not math.isfinite(v.sum() + f.sum()):
            raise NonFiniteError(f"velocity or source is not finite at t={t:.6g}")
        if v.min() < self.params.v_min:
            i = int(np.argmin(v))
            raise VelocityNotPositive(
                f"velocity {v[i]:.3g} at x={xi[i]:.6g}, t={t:.6g} violates v > 0"
            )
        return v, f

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        n = y.size // 2
        return np.concatenate(self.derivatives(t, y[:n], y[n:]))

    def state(self) -> np.ndarray:
        return np.concatenate((self.pool.xi(), self.pool.omega()))

    def _store(self, y: np.ndarray) -> None:
        n = y.size // 2
        self.pool.set_nodes(y[:n], y[n:])

    def _event_fns(self, t_lc: float) -> list[EventFn]:
        params, ell = self.params, self.problem.ell

        def split(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            n = y.size // 2
            return y[:n], y[n:]

        def g_wgap(t: float, y: np.ndarray) -> float:
            xi, om = split(y)
            u = self.view(t, xi, om).boundary_value
            return float(abs(om[0] - u) - params.dw)

        return [
            EventFn(lambda t, y: shock_margin(split(y)[0], params.crossing_tol)[0], Direction.FALLING, SHOCK),
            EventFn(lambda t, y: removal_margin(split(y)[0], ell), Direction.RISING, REMOVAL),
            EventFn(lambda t, y: float(y[0] - params.dx), Direction.RISING, CreationCause.XGAP),
            EventFn(g_wgap, Direction.RISING, CreationCause.WGAP),
            EventFn(lambda t, y: (t - t_lc) - params.dt, Direction.RISING, CreationCause.TIMEOUT),
        ]

    # }}}

    # {{{ resets

    def resolve(self, t: float, forced: frozenset = frozenset(), u_left: float | None = None) -> None:
        """Apply every reset whose condition holds at ``t`` (or that was
        located as firing), in the order shock, removals, creation."""
        params, pool, ell = self.params, self.pool, self.problem.ell

        margin, index = shock_margin(pool.xi(), params.crossing_tol)
        if margin <= 0.0 or SHOCK in forced:
            self.events.append(SolveEvent(t, EventKind.SHOCK, pool.count, index=index))
            raise ShockError(t, index)

        if REMOVAL in forced:
            apply_removal(t, pool, self.events)
        while pool.count > 2 and removal_margin(pool.xi(), ell) >= 0.0:
            apply_removal(t, pool, self.events)

        xi, om = pool.xi(), pool.omega()
        u = self.view(t, xi, om).boundary_value
        margins = creation_margins(t, xi, om, pool.t_lc, u, params)
        causes = (CreationCause.XGAP, CreationCause.WGAP, CreationCause.TIMEOUT)
        fired = [c for c, m in zip(causes, margins) if m >= 0.0 or c in forced]
        if not fired:
            return

        cause = fired[0]
        if (
            u_left is not None
            and abs(om[0] - u_left) < params.dw <= abs(u - u_left)
        ):
            # the input jumped: keep its left limit as the older member of a
            # coincident pair so the discontinuity is carried sharply
            apply_creation(t, pool, u_left, params, self.events, CreationCause.WGAP)
        apply_creation(t, pool, u, params, self.events, cause)

    # }}}

    def run(
        self,
        t_end: float,
        sample_times: Sequence[float],
        snapshot_times: Sequence[float] = (),
    ) -> Trajectory:
        if not t_end > 0:
            raise ValueError("t_end must be positive")
        samples = np.asarray(sample_times, dtype=float)
        if samples.size and (np.any(np.diff(samples) < 0) or samples[0] < 0 or samples[-1] > t_end):
            raise ValueError("sample times must be sorted and lie in [0, t_end]")

        outputs = sorted({(float(s), True, False) for s in samples}
                         | {(float(s), False, True) for s in snapshot_times})
        traj = Trajectory()
        queue = iter(outputs)
        pending = next(queue, None)

        def emit(upto: float, state_at) -> None:
            nonlocal pending
            while pending is not None and pending[0] <= upto:
                ts, is_sample, is_snapshot = pending
                y = state_at(ts)
                n = y.size // 2
                view = self.view(ts, y[:n], y[n:])
                if is_sample:
                    traj.times.append(ts)
                    traj.y.append(view.output)
                    traj.n_history.append(n)
                if is_snapshot:
                    traj.snapshots.append(_snapshot(ts, view))
                pending = next(queue, None)

        params = self.params
        try:
            self.resolve(self.t)
            y = self.state()
            emit(self.t, lambda ts: y)

            f = self.rhs(self.t, y)
            h = initial_step(self.rhs, self.t, y, f, params.abs_tol, params.rel_tol, params.max_step)
            while self.t < t_end:
                t = self.t
                last = h >= t_end - t
                step = try_step(
                    self.rhs, t, y, t_end - t if last else h,
                    params.abs_tol, params.rel_tol, max_step=params.max_step, f0=f,
                )
                if not step.accepted:
                    h = step.h_next
                    continue

                hit = self._first_event(step)
                if hit is None:
                    t_new = t_end if last else step.t_new
                    emit(t_new, step.dense)
                    self._store(step.y_new)
                    self.t, y, f, h = t_new, step.y_new, step.f_new, step.h_next
                    continue

                lo, t_ev, forced = hit
                emit(t_ev, step.dense)
                y_ev = self._advance_to(step, t_ev)
                y_lo = step.dense(lo)
                n = y_lo.size // 2
                u_left = self.view(lo, y_lo[:n], y_lo[n:]).boundary_value

                self._store(y_ev)
                self.t = t_ev
                self.resolve(t_ev, forced, u_left)
                y = self.state()
                f = self.rhs(self.t, y)
                h = min(step.h_next, params.max_step)
        except (ShockError, PoolOverflow) as exc:
            traj.events = list(self.events)
            traj.t_final = self.t
            exc.trajectory = traj
            raise

        traj.events = list(self.events)
        traj.t_final = self.t
        return traj

    def _first_event(self, step) -> tuple[float, float, frozenset] | None:
        """Locate the earliest trigger inside an accepted step."""
        tol = self.params.event_tol
        hits = []
        horizon = step.t_new
        for ev in self._event_fns(self.pool.t_lc):
            before = ev.g(step.t, step.y)
            if not ev.crossed(before, ev.g(step.t_new, step.y_new)):
                continue
            if hits:
                # only crossings that can compete with the earliest one matter
                t_check = min(horizon + tol, step.t_new)
                if not ev.crossed(before, ev.g(t_check, step.dense(t_check))):
                    continue
                end = t_check
            else:
                end = step.t_new
            lo, hi = bracket_event(ev, step.t, end, step.dense, tol)
            hits.append((hi, lo, ev.label))
            horizon = min(horizon, hi)
        if not hits:
            return None

        t_ev, lo, _ = min(hits, key=lambda h: (h[0], _PRIORITY[h[2]]))
        forced = frozenset(label for hi, _, label in hits if hi <= t_ev + self.params.event_tol)
        return lo, t_ev, forced

    def _advance_to(self, step, t_ev: float) -> np.ndarray:
        if t_ev >= step.t_new:
            return step.y_new
        params = self.params
        try:
            redo = try_step(self.rhs, step.t, step.y, t_ev - step.t,
                            params.abs_tol, params.rel_tol, f0=step.f)
        except StepUnderflow:
            return step.dense(t_ev)
        return redo.y_new if redo.accepted else step.dense(t_ev)


def _as_field(value, shape: tuple[int, ...]) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    return value if value.shape == shape else np.broadcast_to(value, shape)


def _snapshot(t: float, view: StateView) -> Snapshot:
    xs, ws = view.grid
    # the boundary point coincides with a freshly created characteristic
    if xs.size > 1 and xs[1] <= 0.0:
        xs, ws = xs[1:], ws[1:]
    return Snapshot(t, np.array(xs), np.array(ws))


def simulate(
    problem: ProblemDef,
    params: SolverParams,
    t_end: float,
    sample_times: Sequence[float],
    snapshot_times: Sequence[float] = (),
) -> Trajectory:
    """Run the characteristic solver and sample ``y(t) = w(t, ell)``.

    :class:`ShockError` and :class:`PoolOverflow` carry the partial
    trajectory up to the failure in their ``trajectory`` attribute.
    """
    return MocSolver(problem, params).run(t_end, sample_times, snapshot_times)


__all__ = [
    "ErrorBoundInputs",
    "MocSolver",
    "SolverError",
    "apply_creation",
    "apply_removal",
    "creation_margins",
    "error_bound",
    "init_pool",
    "removal_margin",
    "shock_margin",
    "simulate",
]
