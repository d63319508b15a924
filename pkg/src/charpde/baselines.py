"""Method-of-lines reference schemes on a uniform grid."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from charpde.core import (
    NonFiniteError,
    ProblemDef,
    SolverParams,
    StateView,
    Trajectory,
    VelocityNotPositive,
)
from charpde.stepper import integrate


class Scheme(str, Enum):
    CENTRAL = "central"
    UPWIND = "upwind"


@dataclass(frozen=True)
class MolConfig:
    k: int
    scheme: Scheme = Scheme.UPWIND

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"number of segments must be an integer >= 2, got {self.k!r}")


def central_dwdx(w: np.ndarray, boundary_value: float, dx: float) -> np.ndarray:
    """Second order differences inside, a one-sided difference at the outflow
    end, and at ``x = 0`` the three-point formula through the boundary value."""
    w = np.asarray(w, dtype=float)
    if w.size < 3:
        raise ValueError("central differences need at least 3 grid values")
    d = np.empty_like(w)
    d[0] = (w[0] - 2.0 * boundary_value + w[1]) / (2.0 * dx)
    d[1:-1] = (w[2:] - w[:-2]) / (2.0 * dx)
    d[-1] = (w[-1] - w[-2]) / dx
    return d


def upwind_dwdx(w: np.ndarray, boundary_value: float, dx: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.size < 2:
        raise ValueError("upwind differences need at least 2 grid values")
    return np.diff(w, prepend=boundary_value) / dx


def trapezoid(values: np.ndarray, dx: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("trapezoidal rule needs at least 2 samples")
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def mol_simulate(
    problem: ProblemDef,
    config: MolConfig,
    t_end: float,
    sample_times: Sequence[float],
    params: SolverParams | None = None,
) -> Trajectory:
    """Semi-discretize on ``x_i = i ell / K`` and integrate the K+1 ODEs.

    The grid values are the state; the boundary value at ``x = 0`` comes
    from the problem's input, which may feed back the state. Tolerances and
    the maximum step are taken from ``params`` so runs compare fairly with
    the characteristic solver.
    """
    params = params or SolverParams(dx=0.1 * problem.ell, dw=0.01, dt=1.0)
    ell = problem.ell
    x = np.linspace(0.0, ell, config.k + 1)
    dx = ell / config.k
    dwdx = central_dwdx if config.scheme is Scheme.CENTRAL else upwind_dwdx
    w0 = problem.initial_value(x)

    def rhs(t: float, w: np.ndarray) -> np.ndarray:
        grid = StateView(None, x, w, ell, params.interp_scheme)
        u = float(problem.boundary_input(t, grid))
        view = StateView(u, x, w, ell, params.interp_scheme)
        v = np.broadcast_to(np.asarray(problem.velocity(t, x, w, view), dtype=float), x.shape)
        f = np.broadcast_to(np.asarray(problem.source(t, x, w, view), dtype=float), x.shape)
        if not (np.isfinite(u) and np.all(np.isfinite(v)) and np.all(np.isfinite(f))):
            raise NonFiniteError(f"non-finite method-of-lines terms at t={t:.6g}")
        if np.any(v < params.v_min):
            raise VelocityNotPositive(f"velocity {v.min():.3g} at t={t:.6g} violates v > 0")
        return -v * dwdx(w, u, dx) + f

    ts = np.asarray(sample_times, dtype=float)
    _, samples = integrate(
        rhs, 0.0, w0, t_end,
        abs_tol=params.abs_tol, rel_tol=params.rel_tol, max_step=params.max_step,
        sample_times=ts,
    )
    return Trajectory(
        times=list(ts),
        y=list(samples[:, -1]),
        n_history=[x.size] * ts.size,
        t_final=t_end,
    )
