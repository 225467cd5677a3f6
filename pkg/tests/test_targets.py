import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaporstore import (
    ConfigurationError,
    GridSpec,
    ShapeError,
    TargetSpec,
    apply_region_phases,
    make_glyph_target,
    make_lines_target,
)


def test_three_lines_geometry(desk_grid):
    field, labels = make_lines_target(3, 340e-6, 340e-6, 2e-3, desk_grid)
    assert labels.max() == 3
    middle_row = labels[256]
    for k in (1, 2, 3):
        cols = np.flatnonzero(middle_row == k)
        assert len(cols) == 34
        assert (np.diff(cols) == 1).all()
    starts = [np.flatnonzero(middle_row == k)[0] for k in (1, 2, 3)]
    assert starts[0] < starts[1] < starts[2]
    assert np.diff(starts).tolist() == [68, 68]
    rows = np.flatnonzero(labels[:, starts[0]] == 1)
    assert len(rows) == 200
    assert set(np.unique(field.values)) == {0.0, 1.0}


def test_lines_symmetric_about_center(desk_grid):
    _, labels = make_lines_target(3, 340e-6, 340e-6, 2e-3, desk_grid)
    on = labels > 0
    np.testing.assert_array_equal(on, on[:, ::-1])
    np.testing.assert_array_equal(on, on[::-1, :])
    np.testing.assert_array_equal(labels, (4 - labels[:, ::-1]) * on)


def test_single_line_centered(desk_grid):
    _, labels = make_lines_target(1, 340e-6, 340e-6, 2e-3, desk_grid)
    cols = np.flatnonzero(labels[256] == 1)
    assert labels.max() == 1
    assert cols[0] + cols[-1] == desk_grid.nx - 1


def test_lines_too_wide_for_grid():
    g = GridSpec(64, 64, 10e-6)
    with pytest.raises(ConfigurationError):
        make_lines_target(3, 340e-6, 340e-6, 2e-3, g)


@pytest.mark.parametrize("bad", [dict(n_lines=0), dict(thickness=0.0), dict(spacing=-1e-6), dict(n_lines=2.5)])
def test_bad_line_parameters(bad):
    with pytest.raises(ConfigurationError):
        TargetSpec("lines", **bad)


@pytest.mark.parametrize("glyph,count", [("2", 5), ("6", 6), ("9", 6)])
def test_glyph_stroke_counts(desk_grid, glyph, count):
    field, labels = make_glyph_target(glyph, 340e-6, 1.7e-3, desk_grid)
    assert labels.max() == count
    for k in range(1, count + 1):
        assert (labels == k).sum() > 0
    assert np.array_equal(field.values.real > 0, labels > 0)


def _quadrant_lit(labels, grid, x, y):
    j = int(np.argmin(abs(grid.x - x)))
    i = int(np.argmin(abs(grid.y - y)))
    return labels[i, j] > 0


def test_glyph_shapes(desk_grid):
    """Vertical strokes: upper-left f, upper-right b, lower-left e, lower-right c."""
    spec = TargetSpec("glyph", glyph="2")
    w = spec.extent()[0]
    xl, xr = -w / 2 + 170e-6, w / 2 - 170e-6
    yt, yb = -0.45e-3, 0.45e-3  # row index grows with y; "top" is negative y
    expected = {"2": (False, True, True, False), "6": (True, False, True, True), "9": (True, True, False, True)}
    for glyph, (f, b, e, c) in expected.items():
        _, labels = make_glyph_target(glyph, 340e-6, 1.7e-3, desk_grid)
        got = tuple(_quadrant_lit(labels, desk_grid, x, y) for x, y in ((xl, yt), (xr, yt), (xl, yb), (xr, yb)))
        assert got == (f, b, e, c), glyph


def test_unknown_glyph():
    with pytest.raises(ConfigurationError):
        TargetSpec("glyph", glyph="x")
    with pytest.raises(ConfigurationError):
        TargetSpec("spiral")


def test_region_phase_signs(desk_grid):
    field, labels = make_lines_target(3, 340e-6, 340e-6, 2e-3, desk_grid)
    out = apply_region_phases(field, labels, (np.pi, 0.0, np.pi))
    np.testing.assert_allclose(out.values[labels == 1], -1, atol=1e-15)
    np.testing.assert_array_equal(out.values[labels == 2], 1)
    np.testing.assert_array_equal(out.values[labels == 0], 0)


def test_zero_phases_identity(desk_grid):
    field, labels = make_lines_target(3, 340e-6, 340e-6, 2e-3, desk_grid)
    out = apply_region_phases(field, labels, (0.0, 0.0, 0.0))
    np.testing.assert_array_equal(out.values, field.values)


def test_phase_length_mismatch(desk_grid):
    field, labels = make_lines_target(3, 340e-6, 340e-6, 2e-3, desk_grid)
    with pytest.raises(ShapeError):
        apply_region_phases(field, labels, (0.0, 1.0))
    with pytest.raises(ShapeError):
        TargetSpec("lines", region_phases=(0.0,))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=3, max_size=3))
def test_phase_preserves_magnitude(phases):
    g = GridSpec(96, 64, 10e-6)
    field, labels = make_lines_target(3, 60e-6, 40e-6, 300e-6, g)
    field = field.with_values(field.values * np.linspace(0.5, 2.0, g.nx)[None, :])
    out = apply_region_phases(field, labels, phases)
    # exact up to rounding in exp(i phi) and |.|: at most 2 ulp over 1e6 random samples
    np.testing.assert_array_max_ulp(np.abs(out.values), np.abs(field.values), maxulp=2)


def test_spec_build_applies_phases(desk_grid):
    spec = TargetSpec("lines", region_phases=(0.0, np.pi, 0.0))
    field, labels = spec.build(desk_grid)
    assert np.allclose(field.values[labels == 2], -1)
    assert spec.with_phases((1.0, 2.0, 3.0)).region_phases == (1.0, 2.0, 3.0)


def test_envelope_waist(desk_grid):
    field, labels = TargetSpec("lines", envelope_waist=1e-3).build(desk_grid)
    vals = np.abs(field.values[labels > 0])
    assert vals.max() < 1.0 and vals.min() > np.exp(-((0.85e-3) ** 2 + 1e-6) / 1e-6)
