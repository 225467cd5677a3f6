"""Slow-light storage timing: delayed probe, pump off (store), pump on (retrieve).

Only scalar pulse energy is tracked here; the spatial image is handled by
:mod:`vaporstore.propagation` at a fixed storage duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .propagation import MediumParams

SEGMENTS = ("leaked", "stored", "restored")
WINDOW_SIGMAS = 6.0


@dataclass(frozen=True)
class SequenceParams:
    """Timing of one storage experiment (SI units).

    ``t_peak`` is the peak time of the input probe; the slowed pulse peaks at
    the cell exit at ``t_peak + L / v_g``.
    """

    sigma_probe: float = 5e-6
    t_peak: float = 25e-6
    v_g: float = 8000.0
    L: float = 0.05
    t_off: float | None = None
    t_on: float | None = None

    def __post_init__(self):
        if not self.sigma_probe > 0:
            raise DomainError(f"sigma_probe must be > 0, got {self.sigma_probe!r}")
        if not self.v_g > 0:
            raise DomainError(f"v_g must be > 0, got {self.v_g!r}")
        if not self.L >= 0:
            raise DomainError(f"L must be >= 0, got {self.L!r}")
        # Default switch-off at the delayed peak.
        if self.t_off is None:
            object.__setattr__(self, "t_off", self.t_peak + self.L / self.v_g)
        if self.t_on is None:
            object.__setattr__(self, "t_on", self.t_off)
        if self.t_on < self.t_off:
            raise DomainError(f"t_on ({self.t_on!r}) precedes t_off ({self.t_off!r})")

    @property
    def storage_duration(self) -> float:
        return self.t_on - self.t_off


def group_delay(params: SequenceParams) -> float:
    """Transit time ``L / v_g`` of the slowed probe through the cell."""
    return params.L / params.v_g


def _pulse(t, center, sigma):
    return np.exp(-0.5 * ((t - center) / sigma) ** 2)


def stored_fraction(params: SequenceParams) -> float:
    """Fraction of the pulse energy still inside the cell when the pump switches off."""
    delayed_peak = params.t_peak + group_delay(params)
    z = (params.t_off - delayed_peak) / (params.sigma_probe * math.sqrt(2.0))
    return 0.5 * math.erfc(z)


@dataclass(frozen=True, eq=False)
class TimeTrace:
    """Uniformly sampled detector traces.

    ``input_power`` is the reference probe without the medium; ``power`` is
    the cell output; ``segment[i]`` labels sample ``i`` as one of
    ``leaked``, ``stored`` or ``restored``.
    """

    times: np.ndarray
    input_power: np.ndarray
    power: np.ndarray
    segment: np.ndarray
    dt: float

    def energy(self, label: str | None = None) -> float:
        """Rectangle-rule energy of the output, in (power units) x seconds."""
        if label is None:
            return float(self.power.sum() * self.dt)
        if label not in SEGMENTS:
            raise DomainError(f"unknown segment {label!r}")
        return float(self.power[self.segment == label].sum() * self.dt)


def simulate_traces(params: SequenceParams, medium: MediumParams, sample_dt: float) -> TimeTrace:
    """Detector traces for instantaneous pump switching.

    The output follows the delayed unit-peak pulse until ``t_off``, is dark
    until ``t_on``, then replays the remainder of the pulse shifted by the
    storage duration and damped by ``exp(-Gamma * storage)`` in power.

    The sample grid is anchored on ``t_off``. When the storage duration is an
    integer multiple of ``sample_dt`` the restored samples coincide with the
    unstored pulse samples, so leaked plus undamped restored energy equals the
    full pulse energy to the window truncation (about 2e-9).
    """
    if not sample_dt > 0:
        raise DomainError(f"sample_dt must be > 0, got {sample_dt!r}")
    sigma = params.sigma_probe
    t_d = group_delay(params)
    storage = params.storage_duration
    start = params.t_peak - WINDOW_SIGMAS * sigma
    stop = params.t_peak + t_d + storage + WINDOW_SIGMAS * sigma
    i0 = math.floor((start - params.t_off) / sample_dt)
    i1 = math.ceil((stop - params.t_off) / sample_dt)
    idx = np.arange(i0, i1 + 1)
    times = params.t_off + idx * sample_dt

    steps = storage / sample_dt
    i_on = round(steps) if abs(steps - round(steps)) < 1e-9 else math.ceil(steps)
    segment = np.where(idx < 0, "leaked", np.where(idx < i_on, "stored", "restored"))

    delayed = params.t_peak + t_d
    power = np.zeros_like(times)
    leaked = idx < 0
    restored = idx >= i_on
    power[leaked] = _pulse(times[leaked], delayed, sigma)
    power[restored] = math.exp(-medium.Gamma * storage) * _pulse(times[restored] - storage, delayed, sigma)
    return TimeTrace(times, _pulse(times, params.t_peak, sigma), power, segment, sample_dt)


def pulse_energy(params: SequenceParams) -> float:
    """Energy of the unit-peak Gaussian probe, ``sigma * sqrt(2 pi)``."""
    return params.sigma_probe * math.sqrt(2 * math.pi)
