"""End-to-end acceptance checks, one test per criterion.

Each test records a pass/fail line that is printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from charpde.baselines import MolConfig, Scheme, mol_simulate, trapezoid
from charpde.cli.main import main
from charpde.cli.run import EXIT_OK, EXIT_OVERFLOW, EXIT_SHOCK, jump_time_errors, linf_excluding_jumps, transition_width
from charpde.core import CapacityExceeded, CharacteristicPool, PoolUnderflow, SolverParams, interpolate_linear
from charpde.moc import ErrorBoundInputs, error_bound, simulate
from charpde.oracles import exact_output, jump_times
from charpde.problems import lipschitz_transport, pure_transport, simple_example, state_feedback
from charpde.stepper import try_step

FEEDBACK_PARAMS = SolverParams(dx=0.1, dw=0.01, dt=0.5, max_step=0.1)


def sample_grid(t_end, step=0.01):
    return np.round(np.arange(0.0, t_end + 1e-9, step), 12)


def read_report(path):
    return dict(line.split(",", 1) for line in path.read_text().splitlines()[1:])


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# 1
@pytest.mark.parametrize("gamma", [-0.1, 0.1])
def test_state_feedback_tracks_exact_output(gamma, record):
    times = sample_grid(8.0)
    start = time.perf_counter()
    traj = simulate(state_feedback(gamma), FEEDBACK_PARAMS, 8.0, times)
    elapsed = time.perf_counter() - start

    t, y = traj.arrays()
    jumps = jump_times(gamma, 8.0)
    linf = linf_excluding_jumps(t, y, exact_output(gamma, t), jumps, 0.05)
    levels = [0.5 * math.exp(gamma * tj) for tj in jumps]
    worst_jump = max(jump_time_errors(t, y, jumps, levels))

    ok = linf <= 0.02 and worst_jump <= 0.05 and elapsed < 5.0
    record(1, ok, f"gamma={gamma:+g} linf={linf:.2e} jump_err={worst_jump:.3g} time={elapsed:.2f}s")
    assert linf <= 0.02
    assert worst_jump <= 0.05
    assert elapsed < 5.0


# 2
def test_central_scheme_undershoots(record):
    times = sample_grid(8.0)
    traj = mol_simulate(state_feedback(0.1), MolConfig(100, Scheme.CENTRAL), 8.0, times, FEEDBACK_PARAMS)
    y_min = min(traj.y)
    exact_min = float(np.min(exact_output(0.1, times)))

    record(2, y_min <= -0.02 and exact_min >= 0.0, f"min y_central={y_min:.3f} min exact={exact_min:.3f}")
    assert y_min <= -0.02
    assert exact_min >= 0.0


# 3
def test_upwind_scheme_smears_jumps(record):
    gamma, t_end, window = -0.1, 8.0, 0.25
    times = sample_grid(t_end)
    tj = jump_times(gamma, t_end)[-1]
    a = math.exp(gamma * tj)

    widths = {}
    for name, traj in (
        ("moc", simulate(state_feedback(gamma), FEEDBACK_PARAMS, t_end, times)),
        ("mol", mol_simulate(state_feedback(gamma), MolConfig(1000, Scheme.UPWIND), t_end, times, FEEDBACK_PARAMS)),
    ):
        t, y = traj.arrays()
        widths[name] = transition_width(t, y, tj, 0.1 * a, 0.9 * a, window)

    ok = widths["mol"] >= 5 * widths["moc"]
    record(3, ok, f"jump at t={tj:.3f}: width moc={widths['moc']:.4f} upwind>={widths['mol']:.4f}")
    assert widths["moc"] > 0
    assert ok


# 4
def test_pure_transport_is_exact(record):
    params = SolverParams(dx=0.05, dw=0.01, dt=0.05)
    times = sample_grid(10.0)
    start = time.perf_counter()
    traj = simulate(pure_transport(), params, 10.0, times)
    elapsed = time.perf_counter() - start

    t, y = traj.arrays()
    late = t >= 1.0
    err = float(np.max(np.abs(y[late] - np.sin(t[late] - 1.0))))
    record(4, err <= 1e-3 and elapsed < 2.0, f"max error={err:.2e} time={elapsed:.2f}s")
    assert err <= 1e-3
    assert elapsed < 2.0


# 5
def test_error_bound_holds(record):
    t_end = 3.0
    rng = np.random.default_rng(12345)
    pts_t = np.sort(rng.uniform(0.0, t_end, 100))
    pts_x = rng.uniform(0.0, 1.0, 100)

    def sampled(dx, dw, dt, refine=1):
        params = SolverParams(dx=dx / refine, dw=dw / refine, dt=dt / refine, abs_tol=1e-9 / refine,
                              rel_tol=1e-6 / refine, max_step=0.1 / refine)
        traj = simulate(lipschitz_transport(), params, t_end, [t_end], pts_t)
        return np.array([snap(x) for snap, x in zip(traj.snapshots, pts_x)])

    errors = []
    ok = True
    for dx, dw, dt in ((0.2, 0.2, 0.5), (0.1, 0.1, 0.25)):
        err = float(np.max(np.abs(sampled(dx, dw, dt) - sampled(dx, dw, dt, refine=20))))
        # |grad (v, f)| <= 0.1 |(x, w)|; nodes stay below ell + dx + v max_step and |w| <= 0.9
        f_hat = 0.1 * math.hypot(1.0 + dx + 0.2, 0.9)
        _, bound = error_bound(ErrorBoundInputs(1.0 / 0.9, f_hat, dx, dw, dt))
        errors.append(err)
        ok &= err <= bound
        record(5, err <= bound, f"dx={dx} error={err:.2e} bound={bound:.3f}")
    record(5, errors[1] < errors[0], f"error shrinks {errors[0]:.2e} -> {errors[1]:.2e}")
    assert ok
    assert errors[1] < errors[0]


# 6
def test_shock_detected_by_cli(tmp_path, record):
    cfg = write_config(tmp_path, "shock.cfg", "problem = burgers_shock\nmethod = moc\ndx = 0.1\ndw = 0.05\nt_end = 3\n")
    code = main(["run", str(cfg), "-o", str(tmp_path / "out")])
    t_shock = float(read_report(tmp_path / "out" / "report.csv")["shock_time"])

    ok = code == EXIT_SHOCK and 0.95 <= t_shock <= 1.05
    record(6, ok, f"exit={code} shock_time={t_shock:.5f}")
    assert code == EXIT_SHOCK
    assert 0.95 <= t_shock <= 1.05


# 7
def test_overflow_semantics(tmp_path, record):
    base = "problem = pure_transport\ndx = 0.5\ndw = 0.01\ndt = 0.05\nn_max = 5\nt_end = 3\n"
    stop = write_config(tmp_path, "stop.cfg", base + "terminate_on_overflow = true\n")
    keep = write_config(tmp_path, "keep.cfg", base + "terminate_on_overflow = false\n")
    code_stop = main(["run", str(stop), "-o", str(tmp_path / "stop")])
    code_keep = main(["run", str(keep), "-o", str(tmp_path / "keep")])
    rows = (tmp_path / "keep" / "events.csv").read_text().splitlines()[1:]
    overflows = sum(1 for row in rows if row.split(",")[1] == "overflow")

    ok = code_stop == EXIT_OVERFLOW and code_keep == EXIT_OK and overflows >= 1
    record(7, ok, f"terminate exit={code_stop}, continue exit={code_keep} with {overflows} overflow events")
    assert code_stop == EXIT_OVERFLOW
    assert code_keep == EXIT_OK
    assert overflows >= 1


# 8
def test_simple_example(record):
    times = sample_grid(20.0)
    traj = simulate(simple_example(), SolverParams(dx=0.1, dw=0.01, dt=0.5), 20.0, times)
    t, y = traj.arrays()

    ok = t[-1] == 20.0 and y.min() >= -1e-9 and y[-1] <= 0.01
    record(8, ok, f"min y={y.min():.2e} y(20)={y[-1]:.2e}")
    assert t[-1] == 20.0
    assert y.min() >= -1e-9
    assert y[-1] <= 0.01


# 9
def test_unit_properties(record):
    rng = np.random.default_rng(2024)
    checks = {}

    # cyclic buffer against a list model
    mismatches = 0
    for _ in range(10_000):
        capacity = int(rng.integers(2, 8))
        pool = CharacteristicPool.from_nodes(capacity, [0.0, 1.0], [0.0, 1.0])
        model = [(0.0, 0.0), (1.0, 1.0)]
        for op, x, w in zip(rng.integers(0, 2, 12), rng.normal(size=12), rng.normal(size=12)):
            try:
                if op == 0:
                    pool.push_front(x, w)
                    model.insert(0, (x, w))
                else:
                    got = pool.pop_back()
                    if len(model) <= 2 or got != model.pop():
                        mismatches += 1
            except CapacityExceeded:
                mismatches += len(model) < capacity
            except PoolUnderflow:
                mismatches += len(model) > 2
            mismatches += list(zip(pool.xi(), pool.omega())) != model
    checks["buffer"] = mismatches == 0

    # interpolant reproduces nodes and affine data
    ok = True
    for _ in range(200):
        xs = np.concatenate(([0.0], np.cumsum(rng.uniform(0.01, 0.3, 10))))
        ws = rng.normal(size=xs.size)
        q = rng.uniform(0, xs[-1], 20)
        ok &= np.allclose(interpolate_linear(xs, ws, xs), ws)
        ok &= np.allclose(interpolate_linear(xs, 2.0 * xs - 1.0, q), 2.0 * q - 1.0)
    checks["interpolant"] = bool(ok)

    # fourth order convergence of the stepper
    rhs = lambda t, y: np.array([-y[0] + math.sin(t)])
    exact = 0.5 * (math.sin(2.0) - math.cos(2.0)) + 1.5 * math.exp(-2.0)
    errs = []
    for n in (10, 20):
        y, h = np.array([1.0]), 2.0 / n
        for i in range(n):
            y = try_step(rhs, i * h, y, h, 1.0, 1.0).y_new
        errs.append(abs(y[0] - exact))
    checks["stepper"] = math.log2(errs[0] / errs[1]) >= 4.0

    # trapezoid exact on affine data
    x = np.linspace(0.0, 1.0, 9)
    checks["trapezoid"] = math.isclose(trapezoid(3.0 * x + 2.0, 1 / 8), 3.5)

    checks["exact_output"] = (
        exact_output(0.1, 0.0) == 1.0
        and exact_output(0.0, 0.6) == 0.0
        and math.isclose(exact_output(0.1, 1.0), 1.10517, abs_tol=1e-5)
    )

    ok = all(checks.values())
    record(9, ok, " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
    assert ok, checks
