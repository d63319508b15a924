"""Run configured experiments, compare against oracles and write CSV files."""

from __future__ import annotations

import csv
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from charpde.baselines import MolConfig, Scheme, mol_simulate
from charpde.cli.config import RunConfig
from charpde.core import (
    CapacityExceeded,
    EventKind,
    ShockError,
    SolverError,
    Trajectory,
)
from charpde.moc import simulate
from charpde.oracles import exact_output, jump_times, shock_time, transport_delay

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_SHOCK, EXIT_OVERFLOW, EXIT_CONFIG = 0, 1, 2, 3, 4


class EmptyMask(ValueError):
    pass


# {{{ metrics


def _jump_mask(times: np.ndarray, jumps: Sequence[float], half_width: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if not len(jumps):
        return np.ones(times.shape, dtype=bool)
    distance = np.min(np.abs(times[:, None] - np.asarray(jumps)[None, :]), axis=1)
    return distance >= half_width


def linf_excluding_jumps(
    times: Sequence[float], y: Sequence[float], y_ref: Sequence[float],
    jumps: Sequence[float], half_width: float,
) -> float:
    """Maximum deviation over samples at least ``half_width`` away from
    every jump of the reference."""
    mask = _jump_mask(times, jumps, half_width)
    if not mask.any():
        raise EmptyMask("every sample lies inside a jump window")
    return float(np.max(np.abs(np.asarray(y) - np.asarray(y_ref))[mask]))


def l2_excluding_jumps(times, y, y_ref, jumps, half_width) -> float:
    mask = _jump_mask(times, jumps, half_width)
    if not mask.any():
        raise EmptyMask("every sample lies inside a jump window")
    diff = (np.asarray(y) - np.asarray(y_ref))[mask]
    return float(np.sqrt(np.mean(diff**2)))


def level_crossings(times: np.ndarray, y: np.ndarray, level: float) -> np.ndarray:
    """Linearly interpolated times where the sampled signal crosses ``level``."""
    times, y = np.asarray(times, dtype=float), np.asarray(y, dtype=float)
    d = y - level
    idx = np.nonzero((d[:-1] < 0) != (d[1:] < 0))[0]
    theta = d[idx] / (d[idx] - d[idx + 1])
    return times[idx] + theta * (times[idx + 1] - times[idx])


def jump_time_errors(times, y, jumps: Sequence[float], levels: Sequence[float]) -> list[float]:
    """For each jump, distance to the nearest crossing of its half-amplitude level."""
    errors = []
    for tj, level in zip(jumps, levels):
        crossings = level_crossings(times, y, level)
        errors.append(float(np.min(np.abs(crossings - tj))) if crossings.size else math.inf)
    return errors


def transition_width(times, y, t_jump: float, low: float, high: float, window: float) -> float:
    """Time between the ``low`` and ``high`` level crossings closest to a jump.

    ``low`` and ``high`` are absolute levels, e.g. 10% and 90% of the step.
    When the signal has not reached one of the levels inside the window the
    result is a lower bound measured to the window edge.
    """
    times, y = np.asarray(times, dtype=float), np.asarray(y, dtype=float)
    sel = np.abs(times - t_jump) <= window
    ts, ys = times[sel], y[sel]
    if ts.size < 2:
        raise ValueError("no samples around the jump")
    t_low, t_high = level_crossings(ts, ys, low), level_crossings(ts, ys, high)
    falling = ys[0] > ys[-1]

    def nearest(crossings: np.ndarray) -> float | None:
        return float(crossings[np.argmin(np.abs(crossings - t_jump))]) if crossings.size else None

    a, b = nearest(t_low), nearest(t_high)
    if a is None and b is None:
        return math.inf
    if a is None:
        a = ts[-1] if falling else ts[0]
    if b is None:
        b = ts[0] if falling else ts[-1]
    return float(abs(b - a))


# }}}


@dataclass
class MethodResult:
    method: str
    trajectory: Trajectory | None
    status: str = "ok"
    exit_code: int = EXIT_OK
    wall_time: float = 0.0
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass
class ComparisonReport:
    results: list[MethodResult]
    reference: np.ndarray | None = None

    @property
    def exit_code(self) -> int:
        return next((r.exit_code for r in self.results if r.exit_code), EXIT_OK)

    def rows(self) -> list[tuple[str, object]]:
        prefix = len(self.results) > 1
        rows = []
        for r in self.results:
            head = f"{r.method}." if prefix else ""
            rows.append((f"{head}status", r.status))
            rows.extend((f"{head}{k}", v) for k, v in r.metrics.items())
        return rows


def run_method(cfg: RunConfig, method: str) -> MethodResult:
    problem, params = cfg.problem_def(), cfg.params()
    times = cfg.sample_times()
    start = time.perf_counter()
    result = MethodResult(method, None)
    try:
        if method == "moc":
            result.trajectory = simulate(problem, params, cfg.t_end, times, cfg.snapshot_times)
        else:
            scheme = Scheme.CENTRAL if method == "mol_central" else Scheme.UPWIND
            result.trajectory = mol_simulate(problem, MolConfig(cfg.k, scheme), cfg.t_end, times, params)
    except ShockError as exc:
        result.trajectory = exc.trajectory
        result.status = f"shock at t={exc.t!r} index {exc.index}"
        result.exit_code = EXIT_SHOCK
        result.metrics["shock_time"] = exc.t
    except CapacityExceeded as exc:
        result.trajectory = getattr(exc, "trajectory", None)
        result.status = f"overflow: {exc}"
        result.exit_code = EXIT_OVERFLOW
    except (SolverError, ValueError, FloatingPointError) as exc:
        result.status = f"error: {exc}"
        result.exit_code = EXIT_FAILURE
    result.wall_time = time.perf_counter() - start
    if result.exit_code:
        logger.error("%s on %s: %s", method, problem.name, result.status)

    if result.trajectory is not None:
        result.metrics.update(_metrics(cfg, method, result.trajectory))
    return result


def reference_output(cfg: RunConfig, times: np.ndarray) -> tuple[np.ndarray, list[float]] | None:
    """Exact ``y(t)`` and its jump times, for problems that have one."""
    if cfg.problem == "state_feedback":
        return exact_output(cfg.gamma, times), jump_times(cfg.gamma, cfg.t_end)
    if cfg.problem == "pure_transport":
        ref = np.array([transport_delay(np.sin, lambda x: 0.0, 1.0, t) for t in times])
        return ref, [1.0] if cfg.t_end >= 1.0 else []
    return None


def _metrics(cfg: RunConfig, method: str, traj: Trajectory) -> dict[str, float]:
    metrics: dict[str, float] = {}
    times, y = traj.arrays()
    metrics["samples"] = len(times)
    if len(times):
        metrics["y_min"] = float(np.min(y))
        metrics["y_max"] = float(np.max(y))
    if method == "moc":
        for kind in (EventKind.CREATION, EventKind.REMOVAL, EventKind.OVERFLOW):
            metrics[f"{kind.value}_events"] = traj.count(kind)
        if traj.n_history:
            metrics["n_max_used"] = max(traj.n_history)
    if cfg.problem == "burgers_shock":
        metrics["shock_time_exact"] = shock_time(-1.0)

    ref = reference_output(cfg, times)
    if ref is None or not len(times):
        return metrics
    y_ref, jumps = ref
    try:
        metrics["linf_excluding_jumps"] = linf_excluding_jumps(times, y, y_ref, jumps, cfg.jump_half_width)
        metrics["l2_excluding_jumps"] = l2_excluding_jumps(times, y, y_ref, jumps, cfg.jump_half_width)
    except EmptyMask:
        pass
    if cfg.problem == "state_feedback" and jumps:
        levels = [0.5 * math.exp(cfg.gamma * tj) for tj in jumps]
        metrics["jump_time_error_max"] = max(jump_time_errors(times, y, jumps, levels))
    return metrics


# {{{ output files


def _fmt(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_outputs(out_dir: Path, report: ComparisonReport, cfg: RunConfig) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    single = len(report.results) == 1
    for r in report.results:
        traj = r.trajectory
        if traj is None:
            continue
        suffix = "" if single else f"_{r.method}"
        path = out_dir / f"y{suffix}.csv"
        _write_csv(path, ("t", "y"), zip(traj.times, traj.y))
        written.append(path)
        if r.method == "moc":
            path = out_dir / "events.csv"
            _write_csv(path, ("t", "kind", "cause", "n_after"), (
                (ev.t, ev.kind.value, ev.cause.value if ev.cause else "", ev.n_after)
                for ev in traj.events
            ))
            written.append(path)
            if cfg.snapshot_times:
                path = out_dir / "snapshots.csv"
                _write_csv(path, ("t", "x", "w"), (
                    (snap.t, x, w) for snap in traj.snapshots for x, w in zip(snap.x, snap.w)
                ))
                written.append(path)
    if report.reference is not None and not single:
        path = out_dir / "y_exact.csv"
        _write_csv(path, ("t", "y"), zip(cfg.sample_times(), report.reference))
        written.append(path)
    path = out_dir / "report.csv"
    _write_csv(path, ("metric", "value"), report.rows())
    written.append(path)
    return written


# }}}


def run(cfg: RunConfig, out_dir: Path | None = None, methods: Sequence[str] | None = None) -> ComparisonReport:
    methods = list(methods or [cfg.method])
    results = [run_method(cfg, m) for m in methods]
    ref = reference_output(cfg, cfg.sample_times())
    report = ComparisonReport(results, None if ref is None else ref[0])
    write_outputs(Path(out_dir or cfg.output_dir), report, cfg)
    return report


def compare(cfg: RunConfig, out_dir: Path | None = None) -> ComparisonReport:
    return run(cfg, out_dir, ("moc", "mol_central", "mol_upwind"))
