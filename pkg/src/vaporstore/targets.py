"""Amplitude targets (resolution lines, seven-segment digits) and region phases.

A target is a set of axis-aligned rectangles, one region per rectangle.
Rasterization is binary: a pixel belongs to a rectangle when its center lies
strictly inside it. Centers that coincide with an edge (to 1e-6 pixel) are
left out on both sides so symmetric geometry rasterizes symmetrically.

Image rows grow downward, so the top of a glyph is at negative y.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .errors import ConfigurationError, ShapeError
from .field import ComplexField, GridSpec

DEFAULT_LINE_LENGTH = 2e-3
DEFAULT_GLYPH_HEIGHT = 1.7e-3
DEFAULT_STROKE_WIDTH = 340e-6

_EDGE_TOL_PX = 1e-6

# Segment sets; '9' keeps the bottom bar d.
SEVEN_SEGMENT = {
    "2": "abged",
    "6": "afgedc",
    "9": "abcdfg",
}


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``x0 < x < x1``, ``y0 < y < y1`` in meters."""

    x0: float
    x1: float
    y0: float
    y1: float


def _segment_rects(glyph: str, stroke: float, height: float) -> list[Rect]:
    width = (height + stroke) / 2
    hw, hh = width / 2, height / 2
    rects = {
        "a": Rect(-hw, hw, -hh, -hh + stroke),
        "g": Rect(-hw, hw, -stroke / 2, stroke / 2),
        "d": Rect(-hw, hw, hh - stroke, hh),
        "f": Rect(-hw, -hw + stroke, -hh + stroke, -stroke / 2),
        "b": Rect(hw - stroke, hw, -hh + stroke, -stroke / 2),
        "e": Rect(-hw, -hw + stroke, stroke / 2, hh - stroke),
        "c": Rect(hw - stroke, hw, stroke / 2, hh - stroke),
    }
    return [rects[s] for s in "abcdefg" if s in SEVEN_SEGMENT[glyph]]


@dataclass(frozen=True)
class TargetSpec:
    """Geometric description of an amplitude target plus per-region phases.

    ``kind`` is ``"lines"`` (``n_lines`` bars parallel to y, centered, labelled
    left to right) or ``"glyph"`` (a seven-segment digit, one region per
    stroke). ``region_phases`` may be empty, meaning phase 0 everywhere.
    ``envelope_waist`` optionally multiplies the amplitude by the Gaussian
    probe profile ``exp(-r^2 / w^2)``.
    """

    kind: str = "lines"
    n_lines: int = 3
    thickness: float = 340e-6
    spacing: float = 340e-6
    length: float = DEFAULT_LINE_LENGTH
    glyph: str = "2"
    stroke_width: float = DEFAULT_STROKE_WIDTH
    glyph_height: float = DEFAULT_GLYPH_HEIGHT
    region_phases: tuple = dc_field(default=())
    envelope_waist: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "region_phases", tuple(float(p) for p in self.region_phases))
        if self.kind == "lines":
            if int(self.n_lines) != self.n_lines or self.n_lines < 1:
                raise ConfigurationError(f"n_lines must be an integer >= 1, got {self.n_lines!r}", "n_lines")
            if not self.thickness > 0:
                raise ConfigurationError(f"must be > 0, got {self.thickness!r}", "thickness")
            if not self.spacing >= 0:
                raise ConfigurationError(f"must be >= 0, got {self.spacing!r}", "spacing")
            if not self.length > 0:
                raise ConfigurationError(f"must be > 0, got {self.length!r}", "length")
        elif self.kind == "glyph":
            if self.glyph not in SEVEN_SEGMENT:
                raise ConfigurationError(
                    f"unsupported glyph {self.glyph!r}; choose one of {sorted(SEVEN_SEGMENT)}", "glyph"
                )
            if not self.stroke_width > 0:
                raise ConfigurationError(f"must be > 0, got {self.stroke_width!r}", "stroke_width")
            if not self.glyph_height >= 3 * self.stroke_width:
                raise ConfigurationError("glyph height must be at least three stroke widths", "glyph_height")
        else:
            raise ConfigurationError(f"unknown target kind {self.kind!r}", "kind")
        if self.region_phases and len(self.region_phases) != self.region_count:
            raise ShapeError(f"{len(self.region_phases)} region phases given for {self.region_count} regions")

    @property
    def region_count(self) -> int:
        return len(self.rectangles())

    def rectangles(self) -> list[Rect]:
        if self.kind == "glyph":
            return _segment_rects(self.glyph, self.stroke_width, self.glyph_height)
        n, t, s = self.n_lines, self.thickness, self.spacing
        left = -(n * t + (n - 1) * s) / 2
        half = self.length / 2
        return [Rect(left + k * (t + s), left + k * (t + s) + t, -half, half) for k in range(n)]

    def extent(self) -> tuple[float, float]:
        rects = self.rectangles()
        return (
            max(r.x1 for r in rects) - min(r.x0 for r in rects),
            max(r.y1 for r in rects) - min(r.y0 for r in rects),
        )

    def with_phases(self, phases) -> "TargetSpec":
        return replace(self, region_phases=tuple(phases))

    def build(self, grid: GridSpec) -> tuple[ComplexField, np.ndarray]:
        """Rasterize onto ``grid`` and apply ``region_phases``."""
        field, labels = rasterize(self.rectangles(), grid)
        if self.envelope_waist is not None:
            X, Y = grid.meshgrid()
            field = field.with_values(field.values * np.exp(-(X ** 2 + Y ** 2) / self.envelope_waist ** 2))
        if self.region_phases:
            field = apply_region_phases(field, labels, self.region_phases)
        return field, labels


def rasterize(rects, grid: GridSpec) -> tuple[ComplexField, np.ndarray]:
    """Binary amplitude and region label map (0 = background, k = k-th rectangle)."""
    xs = grid.x / grid.pitch
    ys = grid.y / grid.pitch
    labels = np.zeros(grid.shape, dtype=np.int32)
    half_x, half_y = grid.extent[0] / 2, grid.extent[1] / 2
    for k, r in enumerate(rects, start=1):
        if r.x0 < -half_x or r.x1 > half_x or r.y0 < -half_y or r.y1 > half_y:
            raise ConfigurationError(f"region {k} extends beyond the {grid.extent[0]:.4g} x {grid.extent[1]:.4g} m grid")
        inx = (xs > r.x0 / grid.pitch + _EDGE_TOL_PX) & (xs < r.x1 / grid.pitch - _EDGE_TOL_PX)
        iny = (ys > r.y0 / grid.pitch + _EDGE_TOL_PX) & (ys < r.y1 / grid.pitch - _EDGE_TOL_PX)
        mask = iny[:, None] & inx[None, :]
        if not mask.any():
            raise ConfigurationError(f"region {k} covers no pixel centers at pitch {grid.pitch:g} m")
        if (labels[mask] != 0).any():
            raise ConfigurationError(f"region {k} overlaps an earlier region")
        labels[mask] = k
    labels.setflags(write=False)
    return ComplexField(grid, (labels > 0).astype(float)), labels


def make_lines_target(n_lines, thickness, spacing, length=DEFAULT_LINE_LENGTH, grid=None, **kwargs):
    """Centered bars parallel to y; regions numbered left to right, phase 0."""
    if grid is None:
        raise ConfigurationError("a grid is required", "grid")
    spec = TargetSpec("lines", n_lines=n_lines, thickness=thickness, spacing=spacing, length=length, **kwargs)
    return spec.build(grid)


def make_glyph_target(glyph, stroke_width=DEFAULT_STROKE_WIDTH, glyph_height=DEFAULT_GLYPH_HEIGHT, grid=None, **kwargs):
    """Seven-segment digit ('2', '6' or '9'), one region per stroke, phase 0."""
    if grid is None:
        raise ConfigurationError("a grid is required", "grid")
    spec = TargetSpec("glyph", glyph=str(glyph), stroke_width=stroke_width, glyph_height=glyph_height, **kwargs)
    return spec.build(grid)


def apply_region_phases(field: ComplexField, labels: np.ndarray, phases) -> ComplexField:
    """Multiply region ``k`` by ``exp(1j * phases[k - 1])``; background untouched."""
    phases = np.asarray(phases, dtype=float).ravel()
    labels = np.asarray(labels)
    if labels.shape != field.grid.shape:
        raise ShapeError(f"label map shape {labels.shape} does not match grid {field.grid.shape}")
    n_regions = int(labels.max())
    if phases.size != n_regions:
        raise ShapeError(f"{phases.size} phases given for {n_regions} regions")
    factors = np.concatenate(([1.0 + 0j], np.exp(1j * phases)))
    return field.with_values(field.values * factors[labels])


def region_masks(labels: np.ndarray) -> list[np.ndarray]:
    """Boolean mask per region, index 0 = region 1."""
    return [labels == k for k in range(1, int(labels.max()) + 1)]
