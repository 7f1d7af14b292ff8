import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab import signals as sg
from spmelab.errors import InvalidArgument
from spmelab.grid import Grid
from spmelab.noise_field import Box, NoiseField
from spmelab.oracle import BarenblattProfile, barenblatt_eval
from spmelab.solver import (
    SolverParams,
    default_delta_reg,
    monitor_linf,
    phi,
    solve_general,
    solve_spme,
)


def test_phi_is_odd_power():
    r = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    assert np.allclose(phi(r, 3.0), r**3)
    assert np.allclose(phi(r, 2.0), np.abs(r) * r)


def test_params_validation():
    with pytest.raises(InvalidArgument):
        SolverParams(1.0, 0.1)
    with pytest.raises(InvalidArgument):
        SolverParams(2.0, 0.0)
    with pytest.raises(InvalidArgument):
        SolverParams(2.0, 0.1, scheme="explicit")
    p = SolverParams(2.0, 0.1).resolved(2.0)
    assert p.delta_reg == default_delta_reg(2.0, 2.0)
    assert p.support_threshold > 0


def test_zero_data_stays_zero(grid1d):
    tr = solve_general(None, None, 0.0, 0.0, grid1d, SolverParams(2.0, 1e-3), 0.05)
    assert np.all(tr.values == 0.0)


def test_mass_conservation_deterministic_1d():
    grid = Grid.box(-2.0, 2.0, 1.0 / 64)
    prof = BarenblattProfile(2.0, 1, 1.0 / 12, 1.0)
    y0 = barenblatt_eval(1.0, grid.points[..., 0], prof)
    tr = solve_general(None, None, y0, 0.0, grid, SolverParams(2.0, 1.0 / 4096), 1.5, t0=1.0)
    mass = tr.l1_norms()
    assert np.max(np.abs(mass / mass[0] - 1.0)) < 5e-3


def test_mass_conservation_deterministic_2d():
    grid = Grid.box([-1.0, -1.0], [1.0, 1.0], 1.0 / 32)
    prof = BarenblattProfile(2.0, 2, 0.05, 0.1)
    y0 = barenblatt_eval(0.1, grid.points, prof)
    tr = solve_general(None, None, y0, 0.0, grid, SolverParams(2.0, 1.0 / 1024, save_every=8), 0.2, t0=0.1)
    mass = tr.l1_norms()
    assert np.max(np.abs(mass / mass[0] - 1.0)) < 5e-3


def test_maximum_principle_without_noise(grid1d):
    x = grid1d.points[..., 0]
    tr = solve_general(None, None, np.maximum(0.5 - np.abs(x), 0.0), 0.0, grid1d, SolverParams(3.0, 1e-3), 0.2)
    rep = monitor_linf(tr)
    assert not rep.violated


def test_dirichlet_nodes_keep_boundary_data():
    g = Grid.on_ball([0.0], 1.0, 1.0 / 32)
    tr = solve_general(None, None, 0.0, 1.0, g, SolverParams(2.0, 1e-3), 0.02)
    assert np.all(tr.values[-1][g.dirichlet] == 1.0)
    assert np.all(tr.values[-1][g.interior] >= 0.0)


def test_snapshot_cadence(grid1d):
    tr = solve_general(None, None, 0.0, 0.0, grid1d, SolverParams(2.0, 0.01, save_every=3), 0.1)
    assert len(tr) == 1 + 3 + 1
    assert tr.t_end == pytest.approx(0.1)


def test_regularisation_limit_is_cauchy(grid1d):
    x = grid1d.points[..., 0]
    y0 = np.maximum(0.25 - x * x, 0.0)
    finals = [
        solve_general(None, None, y0, 0.0, grid1d, SolverParams(2.0, 1e-3, delta_reg=dl), 0.1).values[-1]
        for dl in (1e-2, 1e-3, 1e-4)
    ]
    d1 = np.max(np.abs(finals[0] - finals[1]))
    d2 = np.max(np.abs(finals[1] - finals[2]))
    assert d2 < d1


@given(
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=0.0, max_value=0.5),
    st.sampled_from([1.5, 2.0, 3.0]),
    st.integers(min_value=0, max_value=1000),
)
def test_comparison_for_ordered_data(height, extra, m, seed):
    grid = Grid.box(-1.0, 1.0, 1.0 / 32)
    x = grid.points[..., 0]
    sig = sg.gen_brownian(64, 1.0 / 1024, seed)
    f = NoiseField.from_strings(["0.5*sin(pi*x)"], sig, Box((-1.0,), (1.0,)))
    lower = height * np.maximum(1.0 - 16 * x * x, 0.0)
    upper = lower + extra * np.maximum(1.0 - 4 * (x - 0.2) ** 2, 0.0)
    scale = float(np.abs(upper).max())
    params = SolverParams(m, 1.0 / 1024, delta_reg=default_delta_reg(scale, m))
    a = solve_spme(lower, f, 0.0, 0.0, grid, params, 1.0 / 16)
    b = solve_spme(upper, f, 0.0, 0.0, grid, params, 1.0 / 16)
    assert np.max(a.values - b.values) <= params.eps_scheme * scale


def test_spme_with_zero_noise_matches_pme(grid1d):
    x = grid1d.points[..., 0]
    y0 = np.maximum(0.25 - x * x, 0.0)
    p = SolverParams(2.0, 1e-3)
    det = solve_general(None, None, y0, 0.0, grid1d, p, 0.05)
    spme = solve_spme(y0, NoiseField.zero(1, 100, 1e-3), 0.0, 0.0, grid1d, p, 0.05)
    assert np.allclose(det.values, spme.values)


def test_drift_enters_as_linear_growth(grid1d):
    # X = exp(lam t) Y with Y solving a conservative equation, so mass grows like exp(lam t)
    x = grid1d.points[..., 0]
    y0 = np.maximum(0.25 - x * x, 0.0)
    p = SolverParams(2.0, 1e-3)
    f = NoiseField.zero(1, 100, 1e-3)
    lam = 2.0
    tr = solve_spme(y0, f, lam, 0.0, grid1d, p, 0.05)
    assert np.allclose(tr.l1_norms() / tr.l1_norms()[0], np.exp(lam * tr.times), rtol=1e-8)
    with pytest.raises(InvalidArgument):
        solve_spme(y0, f, -1.0, 0.0, grid1d, p, 0.05)


def test_end_time_must_exceed_start(grid1d):
    with pytest.raises(InvalidArgument):
        solve_general(None, None, 0.0, 0.0, grid1d, SolverParams(2.0, 0.1), 0.0)
