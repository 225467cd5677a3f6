"""Complex scalar fields sampled on a uniform square-pixel grid.

All lengths are in meters and all times in seconds. Pixel centers sit at
``(i - (n - 1) / 2) * pitch`` along each axis, so the grid is symmetric about
the origin and flipping an array mirrors it exactly. For odd ``n`` a pixel
lies on the axis; for even ``n`` the axis falls between two pixels.

Arrays are indexed ``[row, column]`` = ``[y, x]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .errors import DomainError, ShapeError

MIN_PIXELS = 8


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2D sampling grid.

    Parameters
    ----------
    nx, ny : int
        Pixel counts along x (columns) and y (rows).
    pitch : float
        Pixel size in meters, identical along both axes.
    """

    nx: int
    ny: int
    pitch: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            value = getattr(self, name)
            if int(value) != value or value < MIN_PIXELS:
                raise DomainError(f"{name} must be an integer >= {MIN_PIXELS}, got {value!r}")
        if not (np.isfinite(self.pitch) and self.pitch > 0):
            raise DomainError(f"pitch must be positive, got {self.pitch!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent(self) -> tuple[float, float]:
        """Physical size (x, y) of the grid in meters."""
        return (self.nx * self.pitch, self.ny * self.pitch)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) - (self.nx - 1) / 2) * self.pitch

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - (self.ny - 1) / 2) * self.pitch

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Stored field (equivalently the ground-state coherence) on a grid.

    ``values`` is copied to complex128 and made read-only so a field can be
    shared freely; every operation returns a new field.
    """

    grid: GridSpec
    values: np.ndarray = dc_field(repr=False)
    timestamp: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ShapeError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values, timestamp=None) -> "ComplexField":
        ts = self.timestamp if timestamp is None else timestamp
        return replace(self, values=values, timestamp=ts)

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)


def field_from_intensity(image, grid: GridSpec, phase=None, timestamp: float = 0.0) -> ComplexField:
    """Build a field whose amplitude is the square root of an intensity image.

    Parameters
    ----------
    image : array_like
        Non-negative intensity, shape ``grid.shape``.
    grid : GridSpec
    phase : array_like, optional
        Phase in radians, same shape as ``image``. Zero when omitted.
    timestamp : float
        Storage time the image was recorded at, in seconds.
    """
    image = np.asarray(image, dtype=float)
    if image.shape != grid.shape:
        raise ShapeError(f"image shape {image.shape} does not match grid {grid.shape}")
    if np.any(image < 0):
        raise DomainError("intensity image has negative entries")
    values = np.sqrt(image).astype(np.complex128)
    if phase is not None:
        phase = np.asarray(phase, dtype=float)
        if phase.shape != grid.shape:
            raise ShapeError(f"phase shape {phase.shape} does not match grid {grid.shape}")
        values = values * np.exp(1j * phase)
    return ComplexField(grid, values, timestamp)


def intensity(field: ComplexField) -> np.ndarray:
    """Per-pixel squared magnitude."""
    v = field.values
    return v.real ** 2 + v.imag ** 2


def dc_component(field: ComplexField) -> complex:
    """Zero-frequency Fourier coefficient, ``pitch**2 * sum(values)`` in m^2."""
    return complex(field.grid.pitch ** 2 * field.values.sum())


def support_extent(field: ComplexField, rel_threshold: float = 1e-12) -> tuple[float, float]:
    """Size (x, y) in meters of the bounding box of non-negligible amplitude.

    Pixels with ``|value| <= rel_threshold * max|value|`` are treated as empty.
    An all-zero field has zero extent.
    """
    amp = field.amplitude
    peak = amp.max()
    if peak == 0:
        return (0.0, 0.0)
    rows, cols = np.nonzero(amp > rel_threshold * peak)
    p = field.grid.pitch
    return ((cols.max() - cols.min() + 1) * p, (rows.max() - rows.min() + 1) * p)
