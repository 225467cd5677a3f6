import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaporstore import (
    DegenerateInputError,
    DomainError,
    GridSpec,
    MediumParams,
    ShapeError,
    TargetSpec,
    VisibilityCurve,
    fit_parameters,
    line_profile,
    propagate_storage,
    sweep_visibility,
    visibility,
)
from vaporstore.analysis import LineProfile, gap_midline_intensity
from vaporstore.field import intensity

from conftest import D_REF, GAMMA_REF, TAUS_REF

PI = math.pi


def test_uniform_image_flat_profile():
    g = GridSpec(32, 24, 1e-5)
    prof = line_profile(np.full(g.shape, 3.0), g)
    np.testing.assert_allclose(prof.values, 3.0)
    np.testing.assert_array_equal(prof.x, g.x)


def test_profile_band_errors():
    g = GridSpec(32, 24, 1e-5)
    for band in (0.0, 1.5, -0.1):
        with pytest.raises(DomainError):
            line_profile(np.ones(g.shape), g, band)
    with pytest.raises(ShapeError):
        line_profile(np.ones((3, 3)), g)


def test_band_uses_line_length(desk_grid):
    img = np.zeros(desk_grid.shape)
    img[:, 100] = np.where(np.abs(desk_grid.y) <= 0.5e-3, 1.0, 0.0)
    # band of half a 2 mm line covers only the lit rows
    assert line_profile(img, desk_grid, 0.5, 2e-3).values[100] == pytest.approx(1.0)
    assert line_profile(img, desk_grid, 1.0, 2e-3).values[100] == pytest.approx(0.5)


def test_single_bar_profile_hump(desk_grid):
    field, labels = TargetSpec("lines", n_lines=1).build(desk_grid)
    prof = line_profile(intensity(field), desk_grid, 0.5, 2e-3)
    lit = np.flatnonzero(prof.values > 0.5)
    assert len(lit) == 34
    assert lit[0] + lit[-1] == desk_grid.nx - 1


def test_binary_lines_full_visibility(desk_grid, three_lines):
    field, labels = three_lines.build(desk_grid)
    prof = line_profile(intensity(field), desk_grid, 0.5, 2e-3)
    assert visibility(prof, (1, 2), labels) == 1.0
    assert visibility(prof, (2, 3), labels) == 1.0


def test_flat_profile_zero_visibility(desk_grid, three_lines):
    _, labels = three_lines.build(desk_grid)
    prof = LineProfile(desk_grid.x, np.full(desk_grid.nx, 0.7))
    assert visibility(prof, (1, 2), labels) == 0.0
    with pytest.raises(DegenerateInputError):
        visibility(LineProfile(desk_grid.x, np.zeros(desk_grid.nx)), (1, 2), labels)


def test_visibility_pair_errors(desk_grid, three_lines):
    _, labels = three_lines.build(desk_grid)
    prof = LineProfile(desk_grid.x, np.ones(desk_grid.nx))
    with pytest.raises(DomainError):
        visibility(prof, (1, 3), labels)
    with pytest.raises(DomainError):
        visibility(prof, (2, 2), labels)
    with pytest.raises(DomainError):
        visibility(prof, (1, 4), labels)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 1e6), st.integers(0, 2**32 - 1))
def test_visibility_scale_invariant(scale, seed):
    g = GridSpec(96, 32, 10e-6)
    _, labels = TargetSpec("lines", n_lines=3, thickness=120e-6, spacing=100e-6, length=200e-6).build(g)
    vals = np.random.default_rng(seed).random(g.nx) + 0.01
    v1 = visibility(LineProfile(g.x, vals), (1, 2), labels)
    v2 = visibility(LineProfile(g.x, scale * vals), (1, 2), labels)
    assert v1 == pytest.approx(v2, abs=1e-12)


@pytest.fixture(scope="module")
def ref_curves():
    g = GridSpec(512, 512, 10e-6)
    m = MediumParams(D_REF, GAMMA_REF)
    taus = TAUS_REF
    out = {}
    for name, phases in {
        "constant": (0, 0, 0),
        "shifted": (PI, 0, PI),
        "eps001": (PI + 0.01 * PI, 0, PI),
        "eps01": (PI + 0.1 * PI, 0, PI),
    }.items():
        out[name] = sweep_visibility(TargetSpec("lines", region_phases=phases), g, m, taus)
    return out


def test_constant_visibility_decreases(ref_curves):
    v = ref_curves["constant"].visibility
    assert (np.diff(v) < 0).all()
    assert v[0] > 0.99


def test_shift_beats_constant(ref_curves):
    c, s = ref_curves["constant"].visibility, ref_curves["shifted"].visibility
    assert (s >= c).all()
    assert s.min() > 0.95


def test_larger_phase_error_loses_visibility_faster(ref_curves):
    small, big = ref_curves["eps001"].visibility, ref_curves["eps01"].visibility
    assert (big < small).all()
    assert (ref_curves["eps001"].visibility <= ref_curves["shifted"].visibility + 1e-12).all()


def test_no_diffusion_constant_visibility(desk_grid, three_lines):
    curve = sweep_visibility(three_lines, desk_grid, MediumParams(0.0, GAMMA_REF), TAUS_REF)
    np.testing.assert_allclose(curve.visibility, 1.0)


def test_shifted_gap_midline_dark(desk_grid):
    field, labels = TargetSpec("lines", region_phases=(PI, 0, PI)).build(desk_grid)
    m = MediumParams(D_REF, GAMMA_REF)
    for tau in TAUS_REF:
        out = propagate_storage(field, m, tau)
        mid = gap_midline_intensity(out, labels, (1, 2), 0.5, 2e-3)
        assert mid < 1e-6 * intensity(out).max()


def test_antisymmetric_pair_midline_exact(desk_grid):
    field, labels = TargetSpec("lines", n_lines=2, region_phases=(PI, 0)).build(desk_grid)
    m = MediumParams(D_REF, GAMMA_REF)
    for tau in TAUS_REF:
        out = propagate_storage(field, m, tau)
        assert gap_midline_intensity(out, labels, (1, 2), 0.5, 2e-3) < 1e-12 * intensity(out).max()


def test_curve_validation():
    with pytest.raises(DomainError):
        VisibilityCurve([2e-6, 1e-6], [0.5, 0.5])
    with pytest.raises(DomainError):
        VisibilityCurve([1e-6, 2e-6], [0.5, 1.5])
    with pytest.raises(ShapeError):
        VisibilityCurve([1e-6, 2e-6], [0.5])


def test_sweep_rejects_bad_taus(desk_grid, three_lines, medium):
    with pytest.raises(DomainError):
        sweep_visibility(three_lines, desk_grid, medium, [])
    with pytest.raises(DomainError):
        sweep_visibility(three_lines, desk_grid, medium, [-1e-6, 2e-6])


def test_fit_argument_errors(desk_grid, three_lines, medium):
    curve = VisibilityCurve(TAUS_REF, [0.9, 0.8, 0.5, 0.2])
    bounds = {"D": (1e-4, 2e-3), "epsilon": (0, 1)}
    with pytest.raises(DomainError):
        fit_parameters(curve, three_lines, desk_grid, medium, free=(), bounds=bounds)
    with pytest.raises(DomainError):
        fit_parameters(curve, three_lines, desk_grid, medium, free=("Gamma",), bounds=bounds)
    with pytest.raises(DomainError):
        fit_parameters(VisibilityCurve(TAUS_REF[:2], [0.9, 0.8]), three_lines, desk_grid, medium, bounds=bounds)
    with pytest.raises(DomainError):
        fit_parameters(curve, three_lines, desk_grid, medium, bounds={"D": (2e-3, 1e-3)})
    with pytest.raises(DomainError):
        fit_parameters(curve, three_lines, desk_grid, medium, bounds={})


def test_fit_upper_bound_must_fit_grid(three_lines, medium):
    g = GridSpec(320, 320, 10e-6)
    curve = VisibilityCurve(TAUS_REF, [0.9, 0.8, 0.5, 0.2])
    from vaporstore import ConfigurationError

    with pytest.raises(ConfigurationError):
        fit_parameters(curve, three_lines, g, medium, bounds={"D": (1e-4, 2e-3)})


def test_fit_recovers_diffusion_noiseless(ref_curves, desk_grid, three_lines, medium):
    res = fit_parameters(ref_curves["constant"], three_lines, desk_grid, medium, free=("D",), bounds={"D": (1e-4, 2e-3)})
    assert res.converged
    assert res.D == pytest.approx(D_REF, rel=1e-4)
    assert res.epsilon is None
    assert res.evaluations >= res.iterations > 0
