"""Flat ``key = value`` run configuration.

Keys carry their unit in the name (``pitch_um``, ``D_cm2_per_s``, ...). The
parsed :class:`RunConfig` keeps values in those file units so that
``parse_config(format_config(cfg)) == cfg`` exactly; the ``grid``,
``medium``, ``target`` and ``sequence`` accessors convert to SI.

Lines starting with ``#`` are comments. List values are comma separated.
An empty value or ``none`` means "use the default".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigurationError, DomainError, ShapeError
from .field import GridSpec
from .propagation import PADDING_SIGMAS, MediumParams, blur_sigma
from .sequence import SequenceParams
from .targets import SEVEN_SEGMENT, TargetSpec

UM = 1e-6
US = 1e-6
CM2_PER_S = 1e-4


@dataclass(frozen=True)
class RunConfig:
    nx: int = 512
    ny: int = 512
    pitch_um: float = 10.0
    D_cm2_per_s: float = 10.0
    Gamma_per_s: float = 14000.0
    target: str = "lines"
    n_lines: int = 3
    thickness_um: float = 340.0
    spacing_um: float = 340.0
    length_um: float = 2000.0
    glyph: str = "2"
    stroke_um: float = 340.0
    glyph_height_um: float = 1700.0
    envelope_waist_um: float | None = None
    phases_rad: tuple = ()
    phase_errors_pi: tuple = (0.01, 0.1)
    epsilon_region: int = 1
    design: bool = False
    design_tau_us: float | None = None
    taus_us: tuple = (2.0, 10.0, 20.0, 30.0)
    pair: tuple = (1, 2)
    band_fraction: float = 0.5
    initial_image: str | None = None
    initial_time_us: float = 0.0
    sigma_us: float = 5.0
    tpeak_us: float = 25.0
    vg_m_per_s: float = 8000.0
    L_cm: float = 5.0
    toff_us: float | None = None
    ton_us: float | None = None
    trace_dt_us: float = 0.05
    fit_curve: str | None = None
    fit_free: tuple = ("D",)
    D_bounds_cm2_per_s: tuple = (1.0, 20.0)
    epsilon_bounds_rad: tuple = (0.0, math.pi / 2)
    out_dir: str = "out"

    # SI views -------------------------------------------------------------

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny, self.pitch_um * UM)

    @property
    def medium(self) -> MediumParams:
        return MediumParams(self.D_cm2_per_s * CM2_PER_S, self.Gamma_per_s)

    @property
    def taus(self) -> np.ndarray:
        return np.array(self.taus_us) * US

    @property
    def initial_time(self) -> float:
        return self.initial_time_us * US

    @property
    def design_tau(self) -> float:
        return (self.taus_us[-1] if self.design_tau_us is None else self.design_tau_us) * US

    def target_spec(self, phases=()) -> TargetSpec:
        waist = None if self.envelope_waist_um is None else self.envelope_waist_um * UM
        return TargetSpec(
            kind=self.target,
            n_lines=self.n_lines,
            thickness=self.thickness_um * UM,
            spacing=self.spacing_um * UM,
            length=self.length_um * UM,
            glyph=self.glyph,
            stroke_width=self.stroke_um * UM,
            glyph_height=self.glyph_height_um * UM,
            region_phases=tuple(phases),
            envelope_waist=waist,
        )

    @property
    def sequence(self) -> SequenceParams:
        t_off = self.resolved_toff_us * US
        t_on = (self.ton_us if self.ton_us is not None else self.resolved_toff_us + 25.0) * US
        return SequenceParams(self.sigma_us * US, self.tpeak_us * US, self.vg_m_per_s, self.L_cm * 1e-2, t_off, t_on)

    @property
    def resolved_toff_us(self) -> float:
        if self.toff_us is not None:
            return self.toff_us
        return self.tpeak_us + self.L_cm * 1e-2 / self.vg_m_per_s / US

    @property
    def fit_bounds(self) -> dict:
        return {
            "D": tuple(b * CM2_PER_S for b in self.D_bounds_cm2_per_s),
            "epsilon": tuple(self.epsilon_bounds_rad),
        }


_FIELDS = {f.name: f for f in fields(RunConfig)}
_DEFAULTS = RunConfig()


def _kind(name):
    default = getattr(_DEFAULTS, name)
    annotation = str(_FIELDS[name].type)
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, int):
        return "int"
    if isinstance(default, tuple):
        if name in ("pair",):
            return "int_list"
        if name in ("fit_free",):
            return "str_list"
        return "float_list"
    if "float" in annotation:
        return "float"
    return "str"


def _convert(name, raw):
    kind = _kind(name)
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if kind == "float":
            return float(raw)
        if kind.endswith("_list"):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if kind == "int_list":
                return tuple(int(s) for s in items)
            if kind == "str_list":
                return tuple(items)
            return tuple(float(s) for s in items)
        return raw
    except ValueError:
        raise ConfigurationError(f"cannot parse {raw!r} as {kind.replace('_', ' ')}", name) from None


def parse_config(text: str = "") -> RunConfig:
    """Parse and validate a configuration document; missing keys take defaults."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigurationError("unknown key", key)
        if key in values:
            raise ConfigurationError("duplicate key", key)
        if raw == "" or raw.lower() == "none":
            if _kind(key).endswith("_list"):
                values[key] = ()
            continue
        values[key] = _convert(key, raw)
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Serialize every key; re-parsing the result reproduces ``cfg`` exactly."""
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        lines.append(f"{name} = {'none' if value is None else _fmt(value)}")
    return "\n".join(lines) + "\n"


def _require(cond, key, message):
    if not cond:
        raise ConfigurationError(message, key)


def validate(cfg: RunConfig) -> None:
    """Check every value against the owning module's invariants."""
    _require(cfg.nx >= 8, "nx", f"must be >= 8, got {cfg.nx}")
    _require(cfg.ny >= 8, "ny", f"must be >= 8, got {cfg.ny}")
    _require(cfg.pitch_um > 0 and math.isfinite(cfg.pitch_um), "pitch_um", f"must be > 0, got {cfg.pitch_um}")
    _require(cfg.D_cm2_per_s >= 0, "D_cm2_per_s", f"must be >= 0, got {cfg.D_cm2_per_s}")
    _require(cfg.Gamma_per_s >= 0, "Gamma_per_s", f"must be >= 0, got {cfg.Gamma_per_s}")
    _require(cfg.target in ("lines", "glyph"), "target", f"must be 'lines' or 'glyph', got {cfg.target!r}")
    _require(cfg.n_lines >= 1, "n_lines", f"must be >= 1, got {cfg.n_lines}")
    _require(cfg.thickness_um > 0, "thickness_um", f"must be > 0, got {cfg.thickness_um}")
    _require(cfg.spacing_um >= 0, "spacing_um", f"must be >= 0, got {cfg.spacing_um}")
    _require(cfg.length_um > 0, "length_um", f"must be > 0, got {cfg.length_um}")
    _require(cfg.glyph in SEVEN_SEGMENT, "glyph", f"must be one of {sorted(SEVEN_SEGMENT)}, got {cfg.glyph!r}")
    _require(cfg.stroke_um > 0, "stroke_um", f"must be > 0, got {cfg.stroke_um}")
    _require(cfg.glyph_height_um >= 3 * cfg.stroke_um, "glyph_height_um", "must be at least 3 stroke widths")
    _require(
        cfg.envelope_waist_um is None or cfg.envelope_waist_um > 0, "envelope_waist_um", "must be > 0 when given"
    )
    taus = np.array(cfg.taus_us)
    _require(taus.size > 0, "taus_us", "must list at least one duration")
    _require(bool(np.all(np.diff(taus) > 0)), "taus_us", "must be strictly increasing")
    _require(bool(np.all(taus >= cfg.initial_time_us)), "taus_us", "must not precede initial_time_us")
    _require(cfg.initial_time_us >= 0, "initial_time_us", "must be >= 0")
    _require(len(cfg.pair) == 2 and cfg.pair[0] != cfg.pair[1], "pair", "must name two distinct regions")
    _require(0 < cfg.band_fraction <= 1, "band_fraction", f"must be in (0, 1], got {cfg.band_fraction}")
    _require(cfg.design_tau_us is None or cfg.design_tau_us > 0, "design_tau_us", "must be > 0")
    _require(cfg.sigma_us > 0, "sigma_us", f"must be > 0, got {cfg.sigma_us}")
    _require(cfg.vg_m_per_s > 0, "vg_m_per_s", f"must be > 0, got {cfg.vg_m_per_s}")
    _require(cfg.L_cm > 0, "L_cm", f"must be > 0, got {cfg.L_cm}")
    _require(cfg.trace_dt_us > 0, "trace_dt_us", f"must be > 0, got {cfg.trace_dt_us}")
    if cfg.ton_us is not None:
        _require(cfg.ton_us >= cfg.resolved_toff_us, "ton_us", "must not precede toff_us")
    _require(set(cfg.fit_free) <= {"D", "epsilon"} and cfg.fit_free, "fit_free", "must be a subset of D, epsilon")
    for key in ("D_bounds_cm2_per_s", "epsilon_bounds_rad"):
        b = getattr(cfg, key)
        _require(len(b) == 2 and b[1] > b[0] and all(map(math.isfinite, b)), key, "must be 'lo, hi' with hi > lo")
    _require(cfg.D_bounds_cm2_per_s[0] >= 0, "D_bounds_cm2_per_s", "must be non-negative")

    try:
        spec = cfg.target_spec(cfg.phases_rad)
    except ShapeError as exc:
        raise ConfigurationError(str(exc), "phases_rad") from None
    _require(1 <= cfg.epsilon_region <= spec.region_count, "epsilon_region", "must name an existing region")
    _require(max(cfg.pair) <= spec.region_count and min(cfg.pair) >= 1, "pair", "must name existing regions")
    check_target_fits(spec, cfg.grid, cfg.medium, (cfg.taus_us[-1] - cfg.initial_time_us) * US)


def check_target_fits(spec: TargetSpec, grid: GridSpec, medium: MediumParams, tau_max: float) -> None:
    """Grid must hold the target plus ``8 * sigma(tau_max)`` of empty margin per axis."""
    sigma = blur_sigma(medium, max(tau_max, 0.0))
    for axis, used, total in zip("xy", spec.extent(), grid.extent):
        if total < used + PADDING_SIGMAS * sigma:
            raise ConfigurationError(
                f"{axis}-extent {total * 1e3:.4g} mm cannot hold the {used * 1e3:.4g} mm target plus "
                f"{PADDING_SIGMAS:g} blur sigmas ({PADDING_SIGMAS * sigma * 1e3:.4g} mm) at the longest duration",
                "nx" if axis == "x" else "ny",
            )


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    """Copy ``cfg`` with selected keys replaced, re-validated."""
    changes = {k: v for k, v in changes.items() if v is not None}
    out = replace(cfg, **changes)
    try:
        validate(out)
    except DomainError as exc:
        raise ConfigurationError(str(exc)) from None
    return out
