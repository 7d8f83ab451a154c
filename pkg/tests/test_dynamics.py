import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reglab import (DimensionError, SteadyStatePair, SystemModel, solve_steady_input,
                    steady_pair, step, validate_steady_state)


def test_step_integrator():
    assert step(SystemModel.integrator(1), [1.0], [-0.5]).tolist() == [0.5]


def test_step_scalar_linear():
    assert step(SystemModel.linear([[0.5]], [[1.0]]), [2.0], [0.0]).tolist() == [1.0]


def test_step_shift_register():
    sys = SystemModel.linear([[0, 1], [0, 0]], [[0], [1]])
    assert step(sys, [1.0, 2.0], [3.0]).tolist() == [2.0, 3.0]


def test_step_custom():
    sys = SystemModel.custom(lambda x, u: np.sin(x) + u, 2, 2, "sine")
    np.testing.assert_array_equal(step(sys, [0.0, 0.0], [1.0, 2.0]), [1.0, 2.0])


@pytest.mark.parametrize("x,u", [([1.0, 2.0], [0.0]), ([1.0], [0.0, 0.0])])
def test_step_dimension_errors(x, u):
    with pytest.raises(DimensionError):
        step(SystemModel.integrator(1), x, u)


def test_linear_rejects_nonsquare():
    with pytest.raises(DimensionError):
        SystemModel.linear([[1.0, 2.0]], [[1.0]])


def test_validate_steady_state_examples():
    integ = SystemModel.integrator(1)
    assert validate_steady_state(integ, SteadyStatePair([0.0], [5.0]), tol=0)
    assert not validate_steady_state(integ, SteadyStatePair([0.1], [5.0]), tol=1e-9)
    plant = SystemModel.linear([[0.5]], [[1.0]])
    assert validate_steady_state(plant, SteadyStatePair([2.5], [5.0]), tol=1e-12)


def test_solve_steady_input_linear():
    plant = SystemModel.linear([[0.5]], [[1.0]])
    np.testing.assert_allclose(solve_steady_input(plant, [5.0]), [2.5])


def test_solve_steady_input_unreachable():
    # the input cannot move the first coordinate, so only theta[0] = 0 is steady
    plant = SystemModel.linear([[0.5, 0.0], [0.0, 0.5]], [[0.0], [1.0]])
    assert solve_steady_input(plant, [1.0, 1.0]) is None
    with pytest.raises(ValueError):
        steady_pair(plant, [1.0, 1.0])
    np.testing.assert_allclose(steady_pair(plant, [0.0, 2.0]).eta, [1.0])


def test_solve_steady_input_custom():
    sys = SystemModel.custom(lambda x, u: 0.5 * x + u ** 3, 1, 1)
    eta = solve_steady_input(sys, [4.0])
    np.testing.assert_allclose(eta ** 3, [2.0], rtol=1e-9)


def test_steady_pair_is_immutable_and_hashable():
    pair = SteadyStatePair([1.0], [2.0])
    with pytest.raises(ValueError):
        pair.theta[0] = 3.0
    assert pair == SteadyStatePair([1.0], [2.0])
    assert len({pair, SteadyStatePair([1.0], [2.0])}) == 1
    np.testing.assert_array_equal(pair.zeta, [2.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(0.1, 3.0), st.floats(-10, 10))
def test_solved_pairs_are_fixed_points(a, b, theta):
    plant = SystemModel.linear([[a]], [[b]])
    pair = steady_pair(plant, [theta])
    assert validate_steady_state(plant, pair, tol=1e-9)
