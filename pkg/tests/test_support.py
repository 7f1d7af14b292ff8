import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spmelab.errors import InvalidArgument
from spmelab.grid import Grid, Trajectory
from spmelab.support import (
    SupportRecord,
    containment_margin_fields,
    dilate,
    run_length_decode,
    run_length_encode,
    support_of,
    vanish_radius_field,
)


def _interval(grid, a, b):
    x = grid.points[..., 0]
    return ((x >= a - 1e-12) & (x <= b + 1e-12)).astype(float)


def test_support_threshold_is_strict(grid1d):
    v = np.zeros(grid1d.shape)
    v[3] = 1e-3
    assert not support_of(v, 1e-3).any()
    assert support_of(v, 0.0).sum() == 1
    with pytest.raises(InvalidArgument):
        support_of(v, -1.0)


def test_vanish_radius_of_interval(grid1d):
    v = _interval(grid1d, 0.5, 0.75)
    assert vanish_radius_field(v, grid1d, 0.0, 0.0) == pytest.approx(0.5)


def test_vanish_radius_capped_by_domain(grid1d):
    v = np.zeros(grid1d.shape)
    assert vanish_radius_field(v, grid1d, 0.25, 0.0) == pytest.approx(0.75)


def test_vanish_radius_point_outside(grid1d):
    with pytest.raises(InvalidArgument):
        vanish_radius_field(np.zeros(grid1d.shape), grid1d, 3.0, 0.0)


def test_containment_margin_of_growing_interval(grid1d):
    a = _interval(grid1d, -0.25, 0.25)
    b = _interval(grid1d, -0.375, 0.375)
    assert containment_margin_fields(a, b, grid1d, 0.25, 0.0) == pytest.approx(0.125)
    assert containment_margin_fields(a, b, grid1d, 0.0625, 0.0) == pytest.approx(-0.0625)
    assert containment_margin_fields(np.zeros(grid1d.shape), b, grid1d, 0.1, 0.0) == -np.inf
    assert containment_margin_fields(a, np.zeros(grid1d.shape), grid1d, 0.1, 0.0) == 0.1


@given(st.integers(min_value=0, max_value=6))
def test_dilation_by_k_cells(k):
    g = Grid.box(-1.0, 1.0, 1.0 / 16)
    mask = np.zeros(g.shape, dtype=bool)
    mask[16] = True
    assert dilate(mask, g, k / 16).sum() == 2 * k + 1


@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_rle_round_trip(bits):
    mask = np.array(bits)
    assert np.array_equal(run_length_decode(run_length_encode(mask), mask.shape), mask)


def test_support_record_queries(grid2d):
    vals = np.zeros((2,) + grid2d.shape)
    vals[1, 16, 16] = 1.0
    vals[1, 16, 17] = 1.0
    rec = SupportRecord(Trajectory(grid2d, [0.0, 1.0], vals), 0.5)
    assert rec.is_empty(0.0) and not rec.is_empty(1.0)
    assert rec.conclusive
    fronts = rec.fronts()
    assert fronts[0]["x_min"] is None
    assert fronts[1]["y_min"] == pytest.approx(0.0) and fronts[1]["y_max"] == pytest.approx(1.0 / 16)
    assert not rec.touches_boundary(1)
    edge = vals.copy()
    edge[1, 1, 5] = 1.0
    assert SupportRecord(Trajectory(grid2d, [0.0, 1.0], edge), 0.5).touches_boundary(1)


def test_zero_threshold_is_inconclusive(grid1d):
    rec = SupportRecord(Trajectory(grid1d, [0.0], np.zeros((1,) + grid1d.shape)), 0.0)
    assert not rec.conclusive


def test_fronts_csv(tmp_path, grid1d):
    vals = _interval(grid1d, -0.25, 0.25)[None]
    rec = SupportRecord(Trajectory(grid1d, [0.0], vals), 0.0)
    text = rec.export_fronts_csv(tmp_path / "f.csv").read_text().splitlines()
    assert text[0] == "t,x_min,x_max"
    assert text[1].split(",")[1:] == ["-0.25", "0.25"]
