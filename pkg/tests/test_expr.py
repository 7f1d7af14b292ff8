import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab.errors import ExpressionError
from spmelab.expr import Coefficient, CoefficientSet, parse_expression


def test_sine_derivatives_match_closed_form():
    c = Coefficient("sin(pi*x)", 1)
    x = np.linspace(-1, 1, 11)[:, None]
    assert np.allclose(c.value(x), np.sin(np.pi * x[:, 0]))
    assert np.allclose(c.gradient(x)[:, 0], np.pi * np.cos(np.pi * x[:, 0]))
    assert np.allclose(c.laplacian(x), -np.pi**2 * np.sin(np.pi * x[:, 0]))


def test_two_dimensional_hessian_is_symmetric():
    c = Coefficient("exp(x)*cos(y) + x^2*y", 2)
    pts = np.random.default_rng(0).uniform(-1, 1, (20, 2))
    hs = c.hessian(pts)
    assert np.allclose(hs, np.swapaxes(hs, -1, -2))
    lap = c.laplacian(pts)
    assert np.allclose(lap, np.trace(hs, axis1=-2, axis2=-1))


def test_constant_expression_broadcasts():
    c = Coefficient("0.5", 2)
    pts = np.zeros((4, 3, 2))
    assert c.is_constant
    assert c.value(pts).shape == (4, 3)
    assert np.all(c.gradient(pts) == 0.0)


@pytest.mark.parametrize(
    "source, column",
    [
        ("sin(x", None),
        ("x/y", 2),
        ("x^0.5", 2),
        ("log(x)", 0),
        ("z + 1", 0),
        ("x/0", 2),
        ("'a'", 0),
    ],
)
def test_rejected_expressions_report_position(source, column):
    with pytest.raises(ExpressionError) as info:
        parse_expression(source, 1)
    if column is not None:
        assert info.value.position == column


def test_y_is_unknown_in_one_dimension():
    with pytest.raises(ExpressionError):
        parse_expression("y", 1)


def test_caret_means_power():
    assert parse_expression("x^3", 1) == parse_expression("x**3", 1)


@given(st.floats(min_value=-5, max_value=5, allow_nan=False), st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_affine_expression_gradient(a, b):
    c = Coefficient(f"{a!r}*x + {b!r}", 1)
    pts = np.linspace(-1, 1, 5)[:, None]
    assert np.allclose(c.gradient(pts)[:, 0], a)
    assert np.allclose(c.laplacian(pts), 0.0)


def test_coefficient_set_requires_entries():
    with pytest.raises(Exception):
        CoefficientSet((), 1)
    assert CoefficientSet(("1", "2"), 1).is_constant
