import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab.errors import InvalidArgument
from spmelab.oracle import (
    BarenblattProfile,
    TestFunction as Phi,
    barenblatt_convergence,
    barenblatt_eval,
    barenblatt_is_weak_solution_check,
    weak_residual,
)


def test_exponents_for_m2_d1():
    p = BarenblattProfile(2.0, 1, 1.0)
    assert p.alpha == pytest.approx(1 / 3)
    assert p.beta == pytest.approx(1 / 3)
    assert p.k == pytest.approx(1 / 12)


def test_profile_is_compactly_supported():
    p = BarenblattProfile(2.0, 1, 1 / 12)
    r = p.radius(1.0)
    assert r == pytest.approx(1.0)
    assert float(barenblatt_eval(1.0, 1.01, p)) == 0.0
    assert float(barenblatt_eval(1.0, 0.0, p)) == pytest.approx(p.sup(1.0))


def test_time_before_start_rejected():
    with pytest.raises(InvalidArgument):
        barenblatt_eval(0.5, 0.0, BarenblattProfile(2.0, 1, 1.0, t0=1.0))


@given(
    st.sampled_from([1.5, 2.0, 3.0]),
    st.sampled_from([1, 2]),
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=1.0, max_value=4.0),
)
def test_mass_is_constant_in_time(m, d, c_b, t):
    p = BarenblattProfile(m, d, c_b)
    r = p.radius(t)
    n = 801 if d == 1 else 401
    x = np.linspace(-r, r, n)
    if d == 1:
        mass = np.trapezoid(barenblatt_eval(t, x, p), x)
    else:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        vals = barenblatt_eval(t, np.stack([xx, yy], -1), p)
        mass = np.trapezoid(np.trapezoid(vals, x, axis=1), x)
    assert mass == pytest.approx(p.mass(), rel=2e-2 if d == 2 else 1e-3)


@given(st.floats(min_value=-0.5, max_value=0.5), st.floats(min_value=1.2, max_value=3.0))
def test_profile_solves_pme_inside_support(x0, t):
    p = BarenblattProfile(2.0, 1, 1 / 12)
    x = x0 * p.radius(t)
    k, e = 1e-4, 1e-3
    dt = (barenblatt_eval(t + k, x, p) - barenblatt_eval(t - k, x, p)) / (2 * k)
    w = lambda z: barenblatt_eval(t, z, p) ** 2  # noqa: E731
    lap = (w(x + e) - 2 * w(x) + w(x - e)) / e**2
    assert float(dt) == pytest.approx(float(lap), rel=1e-4, abs=1e-8)


def test_weak_residual_of_zero_test_function_region():
    p = BarenblattProfile(2.0, 1, 1 / 12)
    far = Phi(1.5, 0.4, (3.0,), 0.5)
    assert weak_residual(p, far, 1 / 64, (-4.0, 4.0)) == pytest.approx(0.0, abs=1e-14)


def test_weak_residual_is_second_order():
    p = BarenblattProfile(2.0, 1, 1 / 12)
    rep = barenblatt_is_weak_solution_check(p, Phi(1.5, 0.4, (0.0,), 1.5), (-2.0, 2.0), [1 / 64, 1 / 128, 1 / 256])
    assert all(3.2 <= r <= 4.8 for r in rep.ratios), rep.ratios


def test_weak_residual_off_centre_test_function():
    p = BarenblattProfile(2.0, 1, 1 / 12)
    rep = barenblatt_is_weak_solution_check(p, Phi(1.5, 0.4, (0.3,), 0.6), (-2.0, 2.0), [1 / 64, 1 / 128, 1 / 256])
    assert all(3.2 <= r <= 4.8 for r in rep.ratios), rep.ratios


def test_solver_core_error_decreases_at_second_order():
    p = BarenblattProfile(2.0, 1, 1 / 12)
    rep = barenblatt_convergence(p, (-2.0, 2.0), [1 / 32, 1 / 64], 1.5)
    assert rep.core_errors[1] < rep.core_errors[0]
    assert 3.0 <= rep.core_ratios[0] <= 5.0
    assert rep.errors[-1] <= 0.05
