"""Diffusion of a stored field during storage.

Over a storage interval ``tau`` each atom random-walks, so the stored
coherence is convolved with a Gaussian heat kernel of per-axis standard
deviation ``sqrt(2 D tau)`` and damped by ``exp(-Gamma tau / 2)``. Only the
transverse plane is modelled; the 2D kernel is the exact transverse marginal
of the 3D propagator.

Two independent routes compute the same discrete operator:

* :func:`propagate_storage` multiplies the spectrum by the Gaussian Fourier
  multiplier summed over its aliases (a Jacobi theta function), evaluated in
  closed form per axis.
* :func:`propagate_storage_direct` sums the sampled real-space Gaussian over
  its periodic images and convolves by brute force.

By Poisson summation the two agree to round-off on any grid. Once the kernel
is wider than a couple of pixels both reduce to the continuum Gaussian
``exp(-D tau |k|^2)`` to machine precision. Periodic wraparound is prevented
by rejecting fields that leave less than ``8 * sigma`` of empty margin, unless
the caller opts into periodic semantics explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from .errors import ConfigurationError, DomainError
from .field import ComplexField, GridSpec, support_extent

PADDING_SIGMAS = 8.0
DIRECT_MAX_PIXELS = 64 * 64

# Below this width (in pixels) the sampled kernel is a delta to double precision:
# exp(-0.5 / 0.1**2) ~ 2e-22.
_DELTA_SIGMA_PX = 0.1
# Alias/image terms are dropped once their Gaussian factor is below exp(-_TAIL).
_TAIL = 40.0


@dataclass(frozen=True)
class MediumParams:
    """Diffusion coefficient ``D`` (m^2/s) and ground-state decay rate ``Gamma`` (1/s)."""

    D: float
    Gamma: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.D) and self.D >= 0):
            raise DomainError(f"D must be finite and >= 0, got {self.D!r}")
        if not (np.isfinite(self.Gamma) and self.Gamma >= 0):
            raise DomainError(f"Gamma must be finite and >= 0, got {self.Gamma!r}")

    def decay_factor(self, tau: float) -> float:
        """Field (not intensity) attenuation after ``tau``."""
        return math.exp(-0.5 * self.Gamma * tau)


def blur_sigma(medium: MediumParams, tau: float) -> float:
    """Per-axis standard deviation of the diffusion kernel, ``sqrt(2 D tau)``."""
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    return math.sqrt(2.0 * medium.D * tau)


@lru_cache(maxsize=256)
def _axis_multiplier(n: int, pitch: float, dtau: float) -> np.ndarray:
    k = 2 * np.pi * fft.fftfreq(n, d=pitch)
    sigma_px = math.sqrt(2 * dtau) / pitch
    if sigma_px < _DELTA_SIGMA_PX:
        out = np.ones(n)
    else:
        # |k + 2 pi m / p| >= (2|m| - 1) pi / p for k in the first zone.
        m_max = int(math.ceil((math.sqrt(_TAIL / dtau) * pitch / math.pi + 1) / 2)) + 1
        shifts = 2 * np.pi / pitch * np.arange(-m_max, m_max + 1)
        theta = np.exp(-dtau * (k[:, None] + shifts[None, :]) ** 2).sum(axis=1)
        theta0 = np.exp(-dtau * shifts ** 2).sum()
        out = theta / theta0
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _axis_kernel(n: int, pitch: float, sigma: float) -> np.ndarray:
    """Periodized sampled Gaussian along one axis, unit sum, origin at index 0."""
    if sigma / pitch < _DELTA_SIGMA_PX:
        g = np.zeros(n)
        g[0] = 1.0
    else:
        period = n * pitch
        m_max = int(math.ceil(math.sqrt(2 * _TAIL) * sigma / period)) + 1
        offsets = np.arange(n) * pitch
        images = period * np.arange(-m_max, m_max + 1)
        g = np.exp(-((offsets[:, None] + images[None, :]) ** 2) / (2 * sigma ** 2)).sum(axis=1)
        g /= g.sum()
    g.setflags(write=False)
    return g


@dataclass(frozen=True)
class DiffusionKernel:
    """Diffusion propagator for one storage interval.

    The same operator is available as a Fourier multiplier (for the FFT path)
    and as a sampled real-space kernel (for the direct oracle).
    """

    tau: float
    D: float

    def __post_init__(self):
        if self.tau < 0:
            raise DomainError(f"tau must be >= 0, got {self.tau!r}")
        if self.D < 0:
            raise DomainError(f"D must be >= 0, got {self.D!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(2.0 * self.D * self.tau)

    def fourier_multiplier(self, grid: GridSpec) -> np.ndarray:
        """Real, positive multiplier in FFT frequency order; exactly 1 at k = 0."""
        dtau = self.D * self.tau
        mx = _axis_multiplier(grid.nx, grid.pitch, dtau)
        my = _axis_multiplier(grid.ny, grid.pitch, dtau)
        return my[:, None] * mx[None, :]

    def real_space(self, grid: GridSpec) -> np.ndarray:
        """Kernel samples in 1/m^2, origin at ``[0, 0]`` with wraparound ordering.

        ``kernel.sum() * pitch**2 == 1`` up to round-off.
        """
        gx = _axis_kernel(grid.nx, grid.pitch, self.sigma)
        gy = _axis_kernel(grid.ny, grid.pitch, self.sigma)
        return np.outer(gy, gx) / grid.pitch ** 2


def check_padding(field: ComplexField, sigma: float) -> None:
    """Reject fields whose empty margin is narrower than ``8 * sigma`` on either axis."""
    grid = field.grid
    for axis, used, total in zip("xy", support_extent(field), grid.extent):
        if total - used < PADDING_SIGMAS * sigma - 1e-12 * total:
            raise ConfigurationError(
                f"grid {axis}-extent {total:.4g} m leaves {total - used:.4g} m of margin around a "
                f"{used:.4g} m field; diffusion over this interval needs "
                f"{PADDING_SIGMAS:g}*sigma = {PADDING_SIGMAS * sigma:.4g} m"
            )


def propagate_storage(
    field: ComplexField, medium: MediumParams, tau: float, *, periodic: bool = False
) -> ComplexField:
    """Evolve a stored field over a storage interval ``tau`` (seconds).

    Returns ``exp(-Gamma tau / 2) * (G_tau * field)`` with the timestamp
    advanced by ``tau``. With ``periodic=True`` the padding check is skipped
    and the grid is treated as a torus.
    """
    if not tau >= 0:
        raise DomainError(f"tau must be >= 0, got {tau!r}")
    if tau == 0:
        return field.with_values(field.values, field.timestamp)
    kernel = DiffusionKernel(tau, medium.D)
    if not periodic:
        check_padding(field, kernel.sigma)
    spectrum = fft.fft2(field.values)
    spectrum *= kernel.fourier_multiplier(field.grid)
    out = fft.ifft2(spectrum)
    out *= medium.decay_factor(tau)
    return field.with_values(out, field.timestamp + tau)


def propagate_storage_direct(
    field: ComplexField, medium: MediumParams, tau: float, *, periodic: bool = False
) -> ComplexField:
    """Brute-force real-space version of :func:`propagate_storage`.

    Sums every source pixel against the sampled, renormalized kernel. Cost is
    O(N^2) in the pixel count, so grids are limited to 64x64.
    """
    if not tau > 0:
        raise DomainError(f"tau must be > 0 for the direct path, got {tau!r}")
    grid = field.grid
    if grid.nx * grid.ny > DIRECT_MAX_PIXELS:
        raise DomainError(f"direct convolution limited to {DIRECT_MAX_PIXELS} pixels, grid has {grid.nx * grid.ny}")
    kernel = DiffusionKernel(tau, medium.D)
    if not periodic:
        check_padding(field, kernel.sigma)
    weights = kernel.real_space(grid) * grid.pitch ** 2
    values = field.values
    out = np.zeros(grid.shape, dtype=np.complex128)
    for a, b in zip(*np.nonzero(values)):
        out += values[a, b] * np.roll(weights, (a, b), axis=(0, 1))
    out *= medium.decay_factor(tau)
    return field.with_values(out, field.timestamp + tau)
