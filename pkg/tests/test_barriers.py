import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab import signals as sg
from spmelab.barriers import (
    Barrier,
    certify_domination,
    certify_supersolution,
    eval_barrier_space,
    eval_barrier_time,
    space_frozen_constant,
    time_frozen_constant,
)
from spmelab.bounds import c_det, perturbed_c_det
from spmelab.errors import InvalidArgument, OutOfHorizon
from spmelab.grid import Grid, Trajectory
from spmelab.noise_field import Box, NoiseField
from spmelab.solver import SolverParams, solve_general
from spmelab.transforms import identity_time_change


def test_barrier_vanishes_at_centre():
    assert eval_barrier_space(0.0, 0.3, 0.3, 1.0, 2.0, None, 2.0) == 0.0
    assert eval_barrier_time(0.1, 0.3, 0.3, 1.0, 2.0, None, 2.0) == 0.0


def test_barrier_blows_up_only_at_horizon():
    with pytest.raises(OutOfHorizon):
        eval_barrier_space(1.0, 0.5, 0.0, 1.0, 1.0, None, 2.0)
    v = [eval_barrier_space(t, 0.5, 0.0, 1.0, 1.0, None, 2.0) for t in (0.0, 0.5, 0.9, 0.99)]
    assert v == sorted(v)


def test_identity_clock_matches_plain_gap():
    tc = identity_time_change(2.0, 50)
    a = eval_barrier_space(0.3, 0.4, 0.0, 1.0, 1.5, tc, 3.0)
    b = eval_barrier_space(0.3, 0.4, 0.0, 1.0, 1.5, None, 3.0)
    assert a == pytest.approx(b)


def test_constants():
    assert space_frozen_constant(2.0, 1) == pytest.approx(float(c_det(2, 1)))
    assert space_frozen_constant(3.0, 1, 0.25) == pytest.approx((float(c_det(3, 1)) * 0.25) ** 0.5)
    assert time_frozen_constant(2.0, 1, 2.0, 0.0) == pytest.approx(float(c_det(2, 1)) / 2.0)


def test_barrier_argument_validation():
    with pytest.raises(InvalidArgument):
        Barrier("space-frozen", (0.0,), 0.0, 1.0, 2.0)
    with pytest.raises(InvalidArgument):
        Barrier("weird", (0.0,), 1.0, 1.0, 2.0)


@given(st.floats(min_value=0.1, max_value=2.0), st.floats(min_value=0.05, max_value=0.9))
def test_dt_value_matches_finite_difference(horizon, frac):
    b = Barrier("space-frozen", (0.0,), horizon, 0.3, 2.5)
    pts = np.array([[0.2], [0.7]])
    t, k = frac * horizon, 1e-7 * horizon
    fd = (b.value(t + k, pts) - b.value(t - k, pts)) / (2 * k)
    assert np.allclose(b.dt_value(t, pts), fd, rtol=1e-5)


@pytest.mark.parametrize(
    "d, h", [(1, 1 / 64), (1, 1 / 128), (1, 1 / 256), (2, 1 / 64), (2, 1 / 128)]
)
def test_deterministic_barrier_is_supersolution(d, h):
    b = Barrier("space-frozen", (0.0,) * d, 1.0 / 12, space_frozen_constant(2.0, d), 2.0)
    rep = certify_supersolution(b, None, h, 1.0, np.linspace(0.0, 0.07, 8))
    assert rep.passed, rep.as_dict()
    assert rep.min_residual >= -10 * h * h


def test_inflated_barrier_fails():
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, 10.0 * space_frozen_constant(2.0, 1), 2.0)
    rep = certify_supersolution(b, None, 1 / 64, 1.0, np.linspace(0.0, 0.07, 8))
    assert not rep.passed


def test_perturbed_constant_feeds_barrier():
    with perturbed_c_det(1.21):
        assert space_frozen_constant(2.0, 1) == pytest.approx(1.21 / 12)


def test_barrier_tolerance_mode_scales_with_barrier():
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, space_frozen_constant(2.0, 1), 2.0)
    rep = certify_supersolution(b, None, 1 / 64, 1.0, [0.0], tolerance="barrier")
    assert rep.tolerance == pytest.approx(10 * (1 / 64) ** 2 * b.value(0.0, np.array([[1.0]]))[0] / b.horizon)
    with pytest.raises(InvalidArgument):
        certify_supersolution(b, None, 1 / 64, 1.0, [0.0], tolerance="other")


def test_time_frozen_barrier_with_noise_passes_certification():
    sig = sg.gen_brownian(512, 1.0 / 4096, 8)
    f = NoiseField.from_strings(["0.2*sin(pi*x)"], sig, Box((-1.0,), (1.0,)))
    dev = f.mu_norms((0.0, 0.1), Box((-0.5,), (0.5,)), 1 / 64).dt_c0
    const = time_frozen_constant(2.0, 1, 1.0, dev) * 0.5
    b = Barrier("time-frozen", (0.0,), 0.05, const, 2.0, field=f)
    rep = certify_supersolution(b, f, 1 / 64, 0.4, np.linspace(0.0, 0.04, 5))
    assert rep.n_checked > 0


def test_zero_solution_is_dominated():
    g = Grid.on_ball([0.0], 1.0, 1.0 / 32)
    tr = Trajectory(g, [0.0, 0.05], np.zeros((2,) + g.shape), meta={"params": {"newton_tol": 1e-10}})
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, space_frozen_constant(2.0, 1), 2.0)
    rep = certify_domination(tr, b, 1.0)
    assert rep.applicable and rep.dominated


def test_hole_filling_run_is_dominated_by_barrier():
    g = Grid.on_ball([0.0], 1.0, 1.0 / 64)
    tr = solve_general(None, None, 0.0, 1.0, g, SolverParams(2.0, 1.0 / 4096), 0.08)
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, space_frozen_constant(2.0, 1), 2.0)
    rep = certify_domination(tr, b, 1.0)
    assert rep.applicable and rep.dominated, rep.as_dict()


def test_undominated_boundary_makes_check_inapplicable():
    g = Grid.on_ball([0.0], 1.0, 1.0 / 32)
    tr = Trajectory(g, [0.0], np.full((1,) + g.shape, 100.0), meta={"params": {"newton_tol": 1e-10}})
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, space_frozen_constant(2.0, 1), 2.0)
    rep = certify_domination(tr, b, 1.0)
    assert not rep.applicable


def test_longer_horizon_loses_boundary_domination():
    g = Grid.on_ball([0.0], 1.0, 1.0 / 64)
    tr = solve_general(None, None, 0.0, 1.0, g, SolverParams(2.0, 1.0 / 4096), 0.08)
    b = Barrier("space-frozen", (0.0,), 1.0 / 12, space_frozen_constant(2.0, 1), 2.0)
    assert certify_domination(tr, b.with_horizon(0.5 / 12), 1.0).dominated
    rep = certify_domination(tr, b.with_horizon(2.0 / 12), 1.0)
    assert not rep.dominated and rep.boundary_excess > 0
