import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charpde.core import (
    CapacityExceeded,
    CharacteristicPool,
    Interp,
    PoolUnderflow,
    ProblemDef,
    ProfileInvalid,
    SolverParams,
    StateView,
    interpolate_linear,
    interpolate_nearest,
    trapezoid_nonuniform,
    validate_profile,
)


def logical(pool):
    return list(zip(pool.xi().tolist(), pool.omega().tolist()))


# {{{ cyclic buffer


def test_push_front_prepends():
    pool = CharacteristicPool.from_nodes(4, [1.0, 2.0], [5.0, 6.0])
    pool.push_front(0.0, 2.0)
    assert logical(pool) == [(0.0, 2.0), (1.0, 5.0), (2.0, 6.0)]


def test_push_front_wraps_head():
    pool = CharacteristicPool.from_nodes(4, [1.0, 2.0], [5.0, 6.0])
    assert pool.head == 0
    pool.push_front(0.0, 1.0)
    assert pool.head == 3


def test_push_front_full_raises():
    pool = CharacteristicPool.from_nodes(3, [0.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    with pytest.raises(CapacityExceeded):
        pool.push_front(0.0, 1.0)


def test_pop_back_drops_oldest():
    pool = CharacteristicPool.from_nodes(5, [0, 1, 2], [2, 5, 7])
    assert pool.pop_back() == (2.0, 7.0)
    assert logical(pool) == [(0.0, 2.0), (1.0, 5.0)]


def test_pop_back_keeps_two():
    pool = CharacteristicPool.from_nodes(5, [0, 1], [2, 5])
    with pytest.raises(PoolUnderflow):
        pool.pop_back()


def test_from_nodes_over_capacity():
    with pytest.raises(CapacityExceeded):
        CharacteristicPool.from_nodes(2, [0, 1, 2], [0, 0, 0])


def test_copy_is_independent():
    pool = CharacteristicPool.from_nodes(4, [0, 1], [2, 5])
    other = pool.copy()
    other.push_front(-1.0, 0.0)
    assert len(pool) == 2 and len(other) == 3


ops = st.lists(
    st.one_of(
        st.tuples(st.just("push"), st.floats(-10, 10), st.floats(-10, 10)),
        st.tuples(st.just("pop")),
        st.tuples(st.just("set"), st.floats(-1, 1)),
    ),
    max_size=60,
)


@settings(max_examples=300, deadline=None)
@given(capacity=st.integers(2, 9), sequence=ops)
def test_pool_matches_list_model(capacity, sequence):
    pool = CharacteristicPool.from_nodes(capacity, [0.0, 1.0], [3.0, 4.0])
    model = [(0.0, 3.0), (1.0, 4.0)]
    for op in sequence:
        if op[0] == "push":
            if len(model) >= capacity:
                with pytest.raises(CapacityExceeded):
                    pool.push_front(op[1], op[2])
            else:
                pool.push_front(op[1], op[2])
                model.insert(0, (op[1], op[2]))
        elif op[0] == "pop":
            if len(model) <= 2:
                with pytest.raises(PoolUnderflow):
                    pool.pop_back()
            else:
                assert pool.pop_back() == model.pop()
        else:
            model = [(x + op[1], w) for x, w in model]
            pool.set_nodes(pool.xi() + op[1], pool.omega())
        assert logical(pool) == model
        assert 2 <= len(pool) <= capacity


# }}}


# {{{ interpolation


def test_linear_midpoint():
    view = StateView(1.0, np.array([0.5, 1.0]), np.array([0.0, 2.0]), 1.0)
    assert view(0.25) == pytest.approx(0.5)


def test_nearest_picks_closest_abscissa():
    view = StateView(1.0, np.array([0.4, 1.0]), np.array([0.0, 2.0]), 1.0, Interp.NEAREST)
    assert view(0.25) == 0.0


def test_beyond_last_node_holds_value():
    view = StateView(1.0, np.array([0.5, 0.9]), np.array([0.0, 2.0]), 1.0)
    assert view(0.95) == 2.0
    assert view.output == 2.0


def test_jump_takes_right_value():
    xs = np.array([0.0, 0.5, 0.5, 1.0])
    ws = np.array([0.0, 0.0, 1.0, 1.0])
    assert interpolate_linear(xs, ws, 0.5) == 1.0
    assert interpolate_linear(xs, ws, 0.5, right=False) == 0.0
    assert interpolate_linear(xs, ws, 0.499) == 0.0
    np.testing.assert_array_equal(interpolate_linear(xs, ws, np.array([0.5, 0.25])), [1.0, 0.0])


def test_view_integral_of_step():
    view = StateView(0.0, np.array([0.5, 0.5, 1.0]), np.array([0.0, 1.0, 1.0]), 1.0)
    assert view.integral == pytest.approx(0.5)


def test_view_integral_clips_to_domain():
    # a node past ell must not add area beyond the domain
    view = StateView(1.0, np.array([0.5, 2.0]), np.array([1.0, 1.0]), 1.0)
    assert view.integral == pytest.approx(1.0)


def test_view_without_boundary_holds_first_node():
    view = StateView(None, np.array([0.3, 1.0]), np.array([2.0, 4.0]), 1.0)
    assert view(0.0) == 2.0


def test_slightly_inverted_nodes_are_monotone():
    view = StateView(0.0, np.array([0.5, 0.5 - 1e-9, 1.0]), np.array([0.0, 1.0, 1.0]), 1.0)
    xs, _ = view.grid
    assert np.all(np.diff(xs) >= 0)


grids = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12).flatmap(
    lambda gaps: st.tuples(
        st.just(np.concatenate(([0.0], np.cumsum(gaps)))),
        st.lists(st.floats(-5, 5), min_size=len(gaps) + 1, max_size=len(gaps) + 1).map(np.array),
    )
)


@given(grid=grids)
def test_linear_reproduces_nodes(grid):
    xs, ws = grid
    np.testing.assert_allclose(interpolate_linear(xs, ws, xs), ws)
    np.testing.assert_allclose(interpolate_nearest(xs, ws, xs), ws)


@given(grid=grids, a=st.floats(-3, 3), b=st.floats(-3, 3), q=st.floats(0, 1))
def test_linear_is_exact_on_affine(grid, a, b, q):
    xs, _ = grid
    x = q * xs[-1]
    assert interpolate_linear(xs, a * xs + b, x) == pytest.approx(a * x + b, abs=1e-9)


@given(grid=grids, q=st.lists(st.floats(-0.5, 1.5), min_size=1, max_size=20))
def test_linear_stays_in_range(grid, q):
    xs, ws = grid
    values = interpolate_linear(xs, ws, np.array(q) * xs[-1])
    assert np.all(values >= ws.min() - 1e-12) and np.all(values <= ws.max() + 1e-12)


@given(grid=grids)
def test_linear_monotone_data_gives_monotone_interpolant(grid):
    xs, ws = grid
    ws = np.sort(ws)
    q = np.linspace(-0.1, xs[-1] + 0.1, 50)
    assert np.all(np.diff(interpolate_linear(xs, ws, q)) >= -1e-12)


@given(grid=grids, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_trapezoid_exact_on_affine(grid, a, b):
    xs, _ = grid
    exact = a * xs[-1] ** 2 / 2 + b * xs[-1]
    assert trapezoid_nonuniform(xs, a * xs + b) == pytest.approx(exact, abs=1e-9)


# }}}


# {{{ validation


@pytest.mark.parametrize(
    "knots",
    [
        [(0.0, 1.0)],
        [(0.1, 1.0), (1.0, 1.0)],
        [(0.0, 1.0), (0.9, 1.0)],
        [(0.0, 1.0), (0.6, 1.0), (0.4, 1.0), (1.0, 0.0)],
        [(0.0, 1.0), (0.5, 1.0), (0.5, 2.0), (0.5, 3.0), (1.0, 0.0)],
        [(0.0, math.nan), (1.0, 0.0)],
    ],
)
def test_invalid_profiles(knots):
    with pytest.raises(ProfileInvalid):
        validate_profile(knots, 1.0)


def test_problem_initial_value_right_limit():
    p = ProblemDef.pointwise(1.0, lambda t, x, w: 1.0, lambda t, x, w: 0.0, lambda t: 0.0,
                             [(0, 0), (0.5, 0), (0.5, 1), (1, 1)])
    assert p.initial_value(0.5) == 1.0
    assert p.initial_value(0.5, right=False) == 0.0


@pytest.mark.parametrize(
    "changes",
    [{"dx": 0.0}, {"dw": -1.0}, {"dt": math.inf}, {"n_max": 1}, {"crossing_tol": -1.0}, {"max_step": 0.0}],
)
def test_invalid_params(changes):
    base = {"dx": 0.1, "dw": 0.1, "dt": 0.1}
    with pytest.raises(ValueError):
        SolverParams(**{**base, **changes})


def test_dx_must_be_below_ell():
    with pytest.raises(ValueError):
        SolverParams(dx=1.5, dw=0.1, dt=0.1).check_domain(1.0)


# }}}
