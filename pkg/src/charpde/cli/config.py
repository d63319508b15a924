"""Line-oriented ``key = value`` run configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

import numpy as np

from charpde.cli.expr import Expression, ExpressionError
from charpde.core import Interp, ProblemDef, ProfileInvalid, SolverParams, validate_profile
from charpde.problems import REGISTRY

METHODS = ("moc", "mol_central", "mol_upwind")
PROBLEMS = (*REGISTRY, "custom")

FIELD_VARS = ("t", "x", "w", "I")
BOUNDARY_VARS = ("t", "I", "y")


class ConfigError(ValueError):
    def __init__(self, line: int | None, message: str) -> None:
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class RunConfig:
    problem: str = "state_feedback"
    method: str = "moc"
    gamma: float = 0.1
    k: int = 100
    # custom problems only
    ell: float = 1.0
    velocity: str = ""
    source: str = ""
    boundary: str = ""
    x_values: tuple[float, ...] = ()
    w_values: tuple[float, ...] = ()
    # solver
    dx: float = 0.1
    dw: float = 0.01
    dt: float = 0.5
    n_max: int = 1000
    crossing_tol: float = 1.0e-6
    terminate_on_overflow: bool = True
    interp_scheme: str = "linear"
    abs_tol: float = 1.0e-9
    rel_tol: float = 1.0e-6
    max_step: float = 0.1
    event_tol: float = 1.0e-10
    # run
    t_end: float = 10.0
    sample_step: float = 0.01
    snapshot_times: tuple[float, ...] = ()
    jump_half_width: float = 0.05
    output_dir: str = "out"

    def params(self) -> SolverParams:
        return SolverParams(
            dx=self.dx, dw=self.dw, dt=self.dt, n_max=self.n_max,
            crossing_tol=self.crossing_tol, terminate_on_overflow=self.terminate_on_overflow,
            interp_scheme=Interp(self.interp_scheme), abs_tol=self.abs_tol, rel_tol=self.rel_tol,
            max_step=self.max_step, event_tol=self.event_tol,
        )

    def problem_def(self) -> ProblemDef:
        if self.problem == "state_feedback":
            return REGISTRY["state_feedback"](self.gamma)
        if self.problem == "custom":
            return custom_problem(self)
        return REGISTRY[self.problem]()

    def sample_times(self) -> np.ndarray:
        n = int(math.floor(self.t_end / self.sample_step + 1e-9))
        times = np.arange(n + 1) * self.sample_step
        return np.round(times, 12)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_CUSTOM_ONLY = ("ell", "velocity", "source", "boundary", "x_values", "w_values")


def custom_problem(cfg: RunConfig) -> ProblemDef:
    velocity = Expression(cfg.velocity, FIELD_VARS)
    source = Expression(cfg.source, FIELD_VARS)
    boundary = Expression(cfg.boundary, BOUNDARY_VARS)

    def field_fn(expr: Expression):
        def fn(t, x, w, state):
            env = {"t": t, "x": x, "w": w}
            if "I" in expr.names:
                env["I"] = state.integral
            return expr(**env)
        return fn

    def input_fn(t, state):
        env = {"t": t}
        if "I" in boundary.names:
            env["I"] = state.integral
        if "y" in boundary.names:
            env["y"] = state.output
        return boundary(**env)

    return ProblemDef(
        ell=cfg.ell,
        velocity=field_fn(velocity),
        source=field_fn(source),
        boundary_input=input_fn,
        initial_profile=tuple(zip(cfg.x_values, cfg.w_values)),
        name="custom",
    )


def _convert(name: str, raw: str):
    kind = _FIELDS[name].type
    if kind == "float":
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value
    if kind == "int":
        value = float(raw)
        if value != int(value):
            raise ValueError("must be an integer")
        return int(value)
    if kind == "bool":
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError("must be true or false")
    if kind == "tuple[float, ...]":
        if not raw:
            return ()
        return tuple(float(item) for item in raw.split(","))
    return raw


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(lineno, f"expected 'key = value', got {line!r}")
        if key not in _FIELDS:
            raise ConfigError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ConfigError(lineno, f"duplicate key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(lineno, f"bad value for {key}: {raw!r} ({exc})") from None
        lines[key] = lineno

    cfg = RunConfig(**values)
    validate_config(cfg, lines)
    return cfg


def validate_config(cfg: RunConfig, lines: dict[str, int] | None = None) -> None:
    lines = lines or {}

    def fail(key: str, message: str):
        raise ConfigError(lines.get(key), message)

    if cfg.problem not in PROBLEMS:
        fail("problem", f"unknown problem {cfg.problem!r}, expected one of {', '.join(PROBLEMS)}")
    if cfg.method not in METHODS:
        fail("method", f"unknown method {cfg.method!r}, expected one of {', '.join(METHODS)}")
    if cfg.interp_scheme not in [s.value for s in Interp]:
        fail("interp_scheme", f"interp_scheme must be 'linear' or 'nearest', got {cfg.interp_scheme!r}")
    if cfg.k < 2:
        fail("k", "k must be at least 2")

    if cfg.problem == "custom":
        for key in ("velocity", "source", "boundary"):
            if not getattr(cfg, key):
                fail(key, f"custom problem needs '{key}'")
        if len(cfg.x_values) != len(cfg.w_values):
            fail("w_values", "x_values and w_values must have the same length")
        for key, names in (("velocity", FIELD_VARS), ("source", FIELD_VARS), ("boundary", BOUNDARY_VARS)):
            try:
                Expression(getattr(cfg, key), names)
            except ExpressionError as exc:
                fail(key, str(exc))
        if not cfg.ell > 0:
            fail("ell", "ell must be positive")
        try:
            validate_profile(tuple(zip(cfg.x_values, cfg.w_values)), cfg.ell)
        except ProfileInvalid as exc:
            fail("x_values", f"initial profile: {exc}")
    else:
        for key in _CUSTOM_ONLY:
            if key in lines:
                fail(key, f"'{key}' only applies to problem = custom")

    try:
        params = cfg.params()
    except ValueError as exc:
        key = str(exc).split(" ", 1)[0]
        fail(key, str(exc))
    ell = cfg.ell if cfg.problem == "custom" else cfg.problem_def().ell
    try:
        params.check_domain(ell)
    except ValueError as exc:
        fail("dx", str(exc))

    for key in ("t_end", "sample_step", "jump_half_width"):
        if not getattr(cfg, key) > 0:
            fail(key, f"{key} must be positive")
    if any(not 0 <= s <= cfg.t_end for s in cfg.snapshot_times):
        fail("snapshot_times", "snapshot times must lie in [0, t_end]")
    if list(cfg.snapshot_times) != sorted(cfg.snapshot_times):
        fail("snapshot_times", "snapshot times must be sorted")


def render_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`; custom-only keys are written only
    for custom problems."""
    out = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if cfg.problem != "custom" and f.name in _CUSTOM_ONLY:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        out.append(f"{f.name} = {text}")
    return "\n".join(out) + "\n"


def replace(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
