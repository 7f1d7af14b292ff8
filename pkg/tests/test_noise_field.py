import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab import signals as sg
from spmelab.errors import InvalidArgument
from spmelab.grid import Grid
from spmelab.noise_field import Ball, Box, NoiseField


def test_mu_is_minus_weighted_sum():
    sig = sg.custom([[0.0, 2.0]], 1.0)
    f = NoiseField.from_strings(["x"], sig, Box((-1.0,), (1.0,)))
    assert f.mu_eval(1.0, 0.5) == pytest.approx(-1.0)
    assert f.mu_eval(0.5, 0.5) == pytest.approx(-0.5)
    assert np.allclose(f.mu_grad(1.0, np.array([[0.3]])), -2.0)


def test_on_grid_matches_pointwise(sine_field, grid1d):
    mu = sine_field.on_grid(grid1d)
    x = grid1d.points[..., 0]
    assert np.allclose(mu(0.3), sine_field.mu_eval(0.3, x))


def test_points_outside_domain_rejected(sine_field):
    with pytest.raises(InvalidArgument):
        sine_field.mu_eval(0.1, 2.0)


def test_channel_count_must_match():
    with pytest.raises(InvalidArgument):
        NoiseField.from_strings(["x", "1"], sg.gen_brownian(4, 0.1, 0))


def test_zero_field_flags():
    f = NoiseField.zero(2, 8, 0.1)
    assert f.is_zero and f.is_spatially_constant
    assert f.mu_eval(0.5, np.array([[0.1, 0.2]]))[0] == 0.0


def test_spatial_constant_flag(sine_field):
    assert not sine_field.is_spatially_constant
    const = NoiseField.from_strings(["0.5"], sine_field.signal)
    assert const.is_spatially_constant


def test_norms_for_sine_coefficient():
    sig = sg.custom([[0.0, 1.0, -2.0]], 0.5)
    f = NoiseField.from_strings(["sin(pi*x)"], sig, Box((-1.0,), (1.0,)))
    n = f.mu_norms((0.0, 1.0), Ball((0.0,), 1.0), 1.0 / 64)
    assert n.c0 == pytest.approx(2.0, rel=1e-3)
    assert n.grad == pytest.approx(2.0 * np.pi, rel=1e-6)
    assert n.lap == pytest.approx(2.0 * np.pi**2, rel=1e-3)
    assert n.c02 == pytest.approx(n.c0 + n.grad + n.hess)


def test_norm_series_upto_is_monotone(sine_field):
    series = sine_field.norm_series((0.0, 0.5), Ball((0.0,), 0.5), 1.0 / 32)
    vals = [series.upto(t).dt_c0 for t in np.linspace(0.0, 0.5, 11)]
    assert vals[0] == 0.0
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
    assert series.upto(0.5).dt_c0 == pytest.approx(series.total().dt_c0)


@given(st.floats(min_value=0.01, max_value=0.9))
def test_time_sup_is_attained_on_window_nodes(t_end):
    sig = sg.gen_brownian(100, 0.01, 2)
    f = NoiseField.from_strings(["1"], sig)
    ts = f.window_times((0.0, t_end))
    dense = np.linspace(0.0, t_end, 997)
    on_nodes = np.max(np.abs(f.frozen_at(0.0)(ts)))
    assert np.max(np.abs(f.frozen_at(0.0)(dense))) <= on_nodes + 1e-12


def test_ball_must_fit_domain(sine_field):
    with pytest.raises(InvalidArgument):
        sine_field.mu_norms((0.0, 0.1), Ball((0.9,), 0.5), 0.01)


def test_two_dimensional_sampling_shapes():
    sig = sg.stack([sg.gen_brownian(8, 0.1, 0), sg.gen_brownian(8, 0.1, 1)])
    f = NoiseField.from_strings(["sin(x)*cos(y)", "x*y"], sig, Box((-1.0, -1.0), (1.0, 1.0)))
    g = Grid.box([-1.0, -1.0], [1.0, 1.0], 0.125)
    pts = g.points.reshape(-1, 2)
    mu, grad, hess = f.sample(np.array([0.1, 0.2, 0.3]), pts)
    assert mu.shape == (3, pts.shape[0])
    assert grad.shape == (3, pts.shape[0], 2)
    assert hess.shape == (3, pts.shape[0], 2, 2)
    assert np.allclose(mu[1], f.on_grid(g)(0.2).reshape(-1))
