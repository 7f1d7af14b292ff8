import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab import signals as sg
from spmelab.errors import InvalidArgument, OutOfRange
from spmelab.grid import Grid, Trajectory
from spmelab.noise_field import Box, NoiseField
from spmelab.solver import SolverParams, solve_general
from spmelab.transforms import (
    attractor_rescaling,
    homogeneous_solution_map,
    identity_time_change,
    invert_time_change,
    spatial_transform,
    time_change_from_rate,
    time_change_homogeneous,
)


def test_zero_noise_clock_is_identity():
    f = NoiseField.zero(1, 100, 0.01)
    tc = time_change_homogeneous(f, 0.0, 2.0)
    assert np.allclose(tc.values, tc.times)


def test_linear_drift_clock_closed_form():
    # mu = -z = -a t at any point for coefficient 1; F(t) = (exp((m-1) a t) - 1)/((m-1) a)
    a, m = 0.7, 3.0
    sig = sg.linear_drift(a, 4000, 1e-4)
    f = NoiseField.from_strings(["1"], sig)
    tc = time_change_homogeneous(f, 0.0, m)
    t = tc.times
    exact = (np.exp((m - 1) * a * t) - 1) / ((m - 1) * a)
    assert np.max(np.abs(tc.values - exact)) < 1e-8


@given(st.floats(min_value=0.0, max_value=1.0))
def test_inverse_round_trip(frac):
    f = NoiseField.from_strings(["0.8"], sg.gen_brownian(500, 0.002, 3))
    tc = time_change_homogeneous(f, 0.0, 2.0)
    s = frac * tc.max_value
    assert tc.forward(invert_time_change(tc, s)) == pytest.approx(s, abs=1e-12)


def test_inverse_out_of_range():
    tc = identity_time_change(1.0)
    with pytest.raises(OutOfRange):
        invert_time_change(tc, 2.0)
    with pytest.raises(OutOfRange):
        tc.forward(-0.5)


def test_rate_must_be_positive():
    with pytest.raises(InvalidArgument):
        time_change_from_rate(np.array([0.0, 1.0]), np.array([1.0, 0.0]))


def test_backward_signal_rejected_for_forward_clock():
    f = NoiseField.zero(1, 10, 0.1, sign=-1)
    with pytest.raises(InvalidArgument):
        time_change_homogeneous(f, 0.0, 2.0)


@given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=1.0))
def test_spatial_transform_round_trip(lam, amp):
    grid = Grid.box(-1.0, 1.0, 1.0 / 16)
    sig = sg.gen_brownian(64, 1.0 / 64, 11)
    f = NoiseField.from_strings([f"{amp!r}*sin(pi*x)"], sig, Box((-1.0,), (1.0,)))
    vals = np.random.default_rng(0).uniform(0, 1, (4,) + grid.shape)
    X = Trajectory(grid, np.linspace(0, 1, 4), vals)
    back = spatial_transform(spatial_transform(X, f, "forward", lam), f, "inverse", lam)
    assert np.max(np.abs(back.values - X.values)) <= 1e-12


def test_spatial_transform_rejects_times_outside_window(grid1d, sine_field):
    X = Trajectory(grid1d, [0.0, 5.0], np.zeros((2,) + grid1d.shape))
    with pytest.raises(InvalidArgument):
        spatial_transform(X, sine_field)


def test_homogeneous_map_requires_constant_coefficients(grid1d, sine_field):
    X = Trajectory(grid1d, [0.0, 1.0], np.zeros((2,) + grid1d.shape))
    with pytest.raises(InvalidArgument):
        homogeneous_solution_map(X, sine_field, 2.0)


def test_homogeneous_map_zero_noise_is_identity():
    grid = Grid.box(-1.0, 1.0, 1.0 / 32)
    x = grid.points[..., 0]
    u0 = np.maximum(0.25 - x * x, 0.0)
    u = solve_general(None, None, u0, 0.0, grid, SolverParams(2.0, 1e-3), 0.1)
    f = NoiseField.zero(1, 100, 1e-3)
    X = homogeneous_solution_map(u, f, 2.0)
    assert np.allclose(X.values[-1], u.values[-1])


def test_attractor_rescaling_clock():
    r = attractor_rescaling(0.5, 1.0, 2.0)
    assert r.T == 2.0
    assert r.eta == pytest.approx((1.0 - 0.5) / 3.0)
    assert r.F(0.0) == pytest.approx(2.0)
    assert r.G(r.F(-1.3)) == pytest.approx(-1.3)
    with pytest.raises(OutOfRange):
        r.F(0.5)
    with pytest.raises(OutOfRange):
        r.G(0.0)


def test_attractor_rescaling_needs_dissipation():
    with pytest.raises(InvalidArgument):
        attractor_rescaling(2.0, 1.0, 2.0)
