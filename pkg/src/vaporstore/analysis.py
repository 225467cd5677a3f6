"""Line profiles, visibility, storage-duration sweeps and parameter fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, DomainError, ShapeError
from .field import ComplexField, GridSpec, intensity
from .propagation import MediumParams, blur_sigma, check_padding, propagate_storage
from .targets import TargetSpec

log = logging.getLogger(__name__)

FIT_MAX_ITER = 500
FIT_RTOL = 1e-6
FIT_PARAMETERS = ("D", "epsilon")
SEED_POINTS = (11, 6)


@dataclass(frozen=True, eq=False)
class LineProfile:
    """Band-averaged intensity versus x (one value per grid column)."""

    x: np.ndarray
    values: np.ndarray


def _band_rows(grid: GridSpec, band_fraction: float, length: float | None) -> np.ndarray:
    if not 0 < band_fraction <= 1:
        raise DomainError(f"band_fraction must be in (0, 1], got {band_fraction!r}")
    span = band_fraction * (grid.extent[1] if length is None else length)
    rows = np.abs(grid.y) <= span / 2
    if not rows.any():
        raise DomainError(f"band of {span:.3g} m contains no rows at pitch {grid.pitch:g} m")
    return rows


def line_profile(image, grid: GridSpec, band_fraction: float = 0.5, length: float | None = None) -> LineProfile:
    """Mean of ``image`` over the central band of rows.

    The band spans ``band_fraction`` of ``length`` (the line length) when
    given, otherwise of the grid height.
    """
    image = np.asarray(image, dtype=float)
    if image.shape != grid.shape:
        raise ShapeError(f"image shape {image.shape} does not match grid {grid.shape}")
    rows = _band_rows(grid, band_fraction, length)
    return LineProfile(grid.x, image[rows].mean(axis=0))


def _column_span(labels: np.ndarray, region: int) -> tuple[int, int]:
    cols = np.nonzero((labels == region).any(axis=0))[0]
    if cols.size == 0:
        raise DomainError(f"region {region} does not exist")
    return int(cols[0]), int(cols[-1])


def _gap_columns(labels: np.ndarray, region_pair) -> tuple[tuple[int, int], tuple[int, int], np.ndarray]:
    a, b = (int(r) for r in region_pair)
    if a == b:
        raise DomainError("visibility needs two distinct regions")
    left, right = _column_span(labels, a), _column_span(labels, b)
    if left[0] > right[0]:
        left, right = right, left
    if left[1] >= right[0] - 1:
        raise DomainError(f"regions {a} and {b} are not separated by a gap along x")
    gap = np.arange(left[1] + 1, right[0])
    others = set(np.unique(labels[:, gap])) - {0}
    if others:
        raise DomainError(f"regions {a} and {b} are not adjacent; regions {sorted(others)} lie between them")
    return left, right, gap


def visibility(profile: LineProfile, region_pair, labels: np.ndarray) -> float:
    """Contrast between two adjacent line regions and the gap between them.

    ``V = (peak - trough) / (peak + trough)`` where ``peak`` is the mean of
    the profile maxima over the two regions and ``trough`` is the profile
    minimum over the gap columns. Clamped to [0, 1].
    """
    labels = np.asarray(labels)
    left, right, gap = _gap_columns(labels, region_pair)
    v = profile.values
    peak = 0.5 * (v[left[0]:left[1] + 1].max() + v[right[0]:right[1] + 1].max())
    trough = v[gap].min()
    if peak + trough <= 0:
        raise DegenerateInputError("profile is dark over both regions and the gap")
    return float(min(1.0, max(0.0, (peak - trough) / (peak + trough))))


def gap_midline_intensity(
    field: ComplexField,
    labels: np.ndarray,
    region_pair,
    band_fraction: float = 0.5,
    length: float | None = None,
) -> float:
    """Band-averaged intensity of the field on the center line of a gap.

    For an even number of gap columns the midline falls between two pixel
    centers and the complex field is interpolated there (mean of the two
    columns) before squaring.
    """
    _, _, gap = _gap_columns(np.asarray(labels), region_pair)
    rows = _band_rows(field.grid, band_fraction, length)
    mid = gap.size // 2
    cols = gap[[mid]] if gap.size % 2 else gap[[mid - 1, mid]]
    e = field.values[rows][:, cols].mean(axis=1)
    return float(np.mean(e.real ** 2 + e.imag ** 2))


@dataclass(frozen=True, eq=False)
class VisibilityCurve:
    """Visibility at increasing storage durations (seconds)."""

    taus: np.ndarray
    visibility: np.ndarray
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float).ravel()
        vis = np.asarray(self.visibility, dtype=float).ravel()
        if taus.shape != vis.shape:
            raise ShapeError(f"{taus.size} taus but {vis.size} visibility values")
        if taus.size and np.any(np.diff(taus) <= 0):
            raise DomainError("taus must be strictly increasing")
        if np.any((vis < 0) | (vis > 1)):
            raise DomainError("visibility values must lie in [0, 1]")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "visibility", vis)

    def __len__(self):
        return self.taus.size


def _check_taus(taus) -> np.ndarray:
    taus = np.asarray(taus, dtype=float).ravel()
    if taus.size == 0:
        raise DomainError("taus must be non-empty")
    if np.any(taus < 0) or np.any(np.diff(taus) <= 0):
        raise DomainError("taus must be non-negative and strictly increasing")
    return taus


def curve_from_field(
    field: ComplexField,
    labels: np.ndarray,
    medium: MediumParams,
    taus,
    pair=(1, 2),
    band_fraction: float = 0.5,
    length: float | None = None,
) -> np.ndarray:
    """Visibility after each storage duration, starting from ``field``."""
    out = []
    for tau in _check_taus(taus):
        img = intensity(propagate_storage(field, medium, tau))
        out.append(visibility(line_profile(img, field.grid, band_fraction, length), pair, labels))
    return np.array(out)


def sweep_visibility(
    target: TargetSpec,
    grid: GridSpec,
    medium: MediumParams,
    taus,
    pair=(1, 2),
    band_fraction: float = 0.5,
) -> VisibilityCurve:
    """Build, phase, propagate and measure the target at every ``tau``."""
    taus = _check_taus(taus)
    field, labels = target.build(grid)
    length = target.length if target.kind == "lines" else None
    vis = curve_from_field(field, labels, medium, taus, pair, band_fraction, length)
    meta = {
        "phases_rad": list(target.region_phases) or [0.0] * target.region_count,
        "D": medium.D,
        "Gamma": medium.Gamma,
        "pair": tuple(pair),
    }
    return VisibilityCurve(taus, vis, meta)


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_parameters`. Unfitted parameters are ``None``."""

    D: float | None
    epsilon: float | None
    residual: float
    iterations: int
    evaluations: int
    converged: bool
    message: str = ""


def fit_parameters(
    measured: VisibilityCurve,
    target: TargetSpec,
    grid: GridSpec,
    medium: MediumParams,
    free=("D",),
    bounds=None,
    *,
    pair=(1, 2),
    epsilon_region: int = 1,
    band_fraction: float = 0.5,
    max_iter: int = FIT_MAX_ITER,
    rtol: float = FIT_RTOL,
) -> FitResult:
    """Fit ``D`` and/or a phase error ``epsilon`` to a measured visibility curve.

    The forward model is :func:`sweep_visibility` with ``D`` replaced and
    ``epsilon`` added to the phase of region ``epsilon_region``. Bounded
    Nelder-Mead starts from the best node of a fixed coarse grid over the
    bounds, so results are deterministic. ``Gamma`` cancels
    in the visibility ratio and cannot be fitted.

    Parameters
    ----------
    bounds : dict
        ``{"D": (lo, hi), "epsilon": (lo, hi)}`` in m^2/s and radians.
    """
    free = tuple(free)
    if not free:
        raise DomainError("no free parameters")
    unknown = set(free) - set(FIT_PARAMETERS)
    if unknown:
        raise DomainError(f"cannot fit {sorted(unknown)}; choose from {FIT_PARAMETERS}")
    if len(measured) < 3:
        raise DomainError("fitting needs at least 3 curve points")
    bounds = dict(bounds or {})
    lo, hi = [], []
    for name in free:
        if name not in bounds:
            raise DomainError(f"missing bounds for {name}")
        b0, b1 = (float(v) for v in bounds[name])
        if not (math.isfinite(b0) and math.isfinite(b1) and b1 > b0):
            raise DomainError(f"bounds for {name} must be finite with positive width, got {bounds[name]!r}")
        lo.append(b0)
        hi.append(b1)
    lo, hi = np.array(lo), np.array(hi)

    base_phases = np.array(target.region_phases or [0.0] * target.region_count)
    amp, labels = replace(target, region_phases=()).build(grid)
    length = target.length if target.kind == "lines" else None
    taus, v_meas = measured.taus, measured.visibility
    d_max = hi[free.index("D")] if "D" in free else medium.D
    check_padding(amp, blur_sigma(MediumParams(d_max), taus[-1]))

    # Box constraints via x = lo + (hi - lo) * (1 + sin(s)) / 2, so the simplex
    # moves freely and never collapses onto a bound.
    def to_unit(s):
        return 0.5 * (1.0 + np.sin(s))

    def unpack(s):
        values = dict(zip(free, lo + to_unit(np.asarray(s)) * (hi - lo)))
        return values.get("D", medium.D), values.get("epsilon")

    def model(s):
        D, eps = unpack(s)
        phases = base_phases.copy()
        if eps is not None:
            phases[epsilon_region - 1] += eps
        field = amp.with_values(amp.values * np.concatenate(([1.0], np.exp(1j * phases)))[labels])
        return curve_from_field(field, labels, replace(medium, D=D), taus, pair, band_fraction, length)

    def objective(s):
        r = model(s) - v_meas
        return float(r @ r)

    # Deterministic start: best node of a coarse grid over the box.
    n_seed = SEED_POINTS[min(len(free), len(SEED_POINTS)) - 1]
    nodes = np.linspace(0.05, 0.95, n_seed)
    starts = np.array(np.meshgrid(*[nodes] * len(free), indexing="ij")).reshape(len(free), -1).T
    starts = np.arcsin(2 * starts - 1)
    seed_values = [objective(s) for s in starts]
    s0 = starts[int(np.argmin(seed_values))]
    step = 0.5 * (np.arcsin(2 * nodes[1] - 1) - np.arcsin(2 * nodes[0] - 1))
    simplex = np.vstack([s0] + [s0 + step * e for e in np.eye(len(free))])
    f_scale = max(min(seed_values), 1e-300)
    res = minimize(
        objective,
        s0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxiter": max_iter,
            "xatol": rtol,
            "fatol": rtol * f_scale,
        },
    )
    D, eps = unpack(res.x)
    converged = bool(res.success)
    if not converged:
        log.warning("fit did not converge after %d iterations: %s", res.nit, res.message)
    return FitResult(
        D=D if "D" in free else None,
        epsilon=eps,
        residual=math.sqrt(max(res.fun, 0.0)),
        iterations=int(res.nit),
        evaluations=int(res.nfev) + len(seed_values),
        converged=converged,
        message=str(res.message),
    )
