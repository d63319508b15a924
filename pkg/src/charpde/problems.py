"""Built-in problem instances."""

from __future__ import annotations

import numpy as np

from charpde.core import ProblemDef


def simple_example(knot_step: float = 0.05) -> ProblemDef:
    """Accelerating transport with decay, ``v = x + 1.1 + sin t``, ``f = -w``,
    a raised-cosine input that switches off at ``t = 16`` and ``w0 = 1 - x^2``."""

    def u(t: float) -> float:
        return 0.5 * (1.0 + np.cos(np.pi * t / 2.0)) if t <= 16.0 else 0.0

    xs = np.linspace(0.0, 1.0, round(1.0 / knot_step) + 1)
    return ProblemDef.pointwise(
        ell=1.0,
        velocity=lambda t, x, w: x + 1.1 + np.sin(t),
        source=lambda t, x, w: -w,
        boundary_input=u,
        initial_profile=[(x, 1.0 - x * x) for x in xs],
        name="simple_example",
    )


def state_feedback(gamma: float) -> ProblemDef:
    """Recirculating plant ``w_t + v w_x = gamma w`` with ``v = 2 int w dx``,
    ``u(t) = w(t, 1)`` and a unit step at ``x = 1/2`` as initial state."""
    return ProblemDef(
        ell=1.0,
        velocity=lambda t, x, w, state: 2.0 * state.integral,
        source=lambda t, x, w, state: gamma * w,
        boundary_input=lambda t, state: state.output,
        initial_profile=((0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (1.0, 1.0)),
        name=f"state_feedback(gamma={gamma:g})",
    )


def pure_transport() -> ProblemDef:
    return ProblemDef.pointwise(
        ell=1.0,
        velocity=lambda t, x, w: 1.0,
        source=lambda t, x, w: 0.0,
        boundary_input=np.sin,
        initial_profile=[(0.0, 0.0), (1.0, 0.0)],
        name="pure_transport",
    )


def burgers_shock() -> ProblemDef:
    """Inviscid Burgers ``w_t + w w_x = 0`` with ``w0`` falling from 2 to 1
    on ``[0, 1]``; the characteristics focus at ``x = 2`` when ``t = 1``."""
    return ProblemDef.pointwise(
        ell=3.0,
        velocity=lambda t, x, w: w,
        source=lambda t, x, w: 0.0,
        boundary_input=lambda t: 2.0,
        initial_profile=[(0.0, 2.0), (1.0, 1.0), (3.0, 1.0)],
        name="burgers_shock",
    )


def lipschitz_transport(knot_step: float = 0.01) -> ProblemDef:
    """Pointwise problem ``v = 1 + 0.1 sin(x w)``, ``f = 0`` with smooth data
    in ``[0.1, 0.9]``."""
    xs = np.linspace(0.0, 1.0, round(1.0 / knot_step) + 1)
    return ProblemDef.pointwise(
        ell=1.0,
        velocity=lambda t, x, w: 1.0 + 0.1 * np.sin(x * w),
        source=lambda t, x, w: 0.0,
        boundary_input=lambda t: 0.5 + 0.4 * np.sin(2.0 * t),
        initial_profile=[(x, 0.5 - 0.4 * np.sin(3.0 * x)) for x in xs],
        name="lipschitz_transport",
    )


REGISTRY = {
    "simple_example": simple_example,
    "state_feedback": state_feedback,
    "pure_transport": pure_transport,
    "burgers_shock": burgers_shock,
    "lipschitz_transport": lipschitz_transport,
}
