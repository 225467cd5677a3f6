"""Command-line entry point: ``vaporstore {simulate,sweep,fit,design,traces}``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import VisibilityCurve, curve_from_field, fit_parameters, line_profile, visibility
from .config import US, RunConfig, format_config, parse_config, with_overrides
from .design import assign_phases_two_color, build_adjacency, default_radius, design_phases, retrieved_image
from .errors import ConfigurationError, ShapeError, VaporStoreError
from .field import field_from_intensity, intensity
from .fileio import (
    read_curve,
    read_image,
    write_curve,
    write_fit_result,
    write_image,
    write_manifest,
    write_phases,
    write_trace,
)
from .propagation import propagate_storage
from .sequence import group_delay, simulate_traces, stored_fraction
from .targets import apply_region_phases

log = logging.getLogger("vaporstore")

OUT_ENV = "VAPORSTORE_OUT"
VERBS = ("simulate", "sweep", "fit", "design", "traces")


def _float_list(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="vaporstore", description="Image storage in a diffusing atomic vapor.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or out_dir)")
    p.add_argument("--taus", type=_float_list, help="storage durations in microseconds, comma separated")
    p.add_argument("--phases", type=_float_list, help="region phases in radians, comma separated")
    p.add_argument("--design", action="store_true", help="use a designed phase mask")
    p.add_argument("--curve", type=Path, help="visibility CSV to fit (fit verb)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


class Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, cfg: RunConfig, out: Path, figures: bool):
        self.cfg = cfg
        self.out = out
        self.figures = figures
        self.outputs = []
        self.timings = {}
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p

    def timed(self, label, fn, *args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        self.timings[label] = self.timings.get(label, 0.0) + time.perf_counter() - t0
        return result

    def figure(self, fn, name, *args):
        if self.figures:
            from . import plotting

            self.timed("figures", getattr(plotting, fn), *args, self.path(name))


def _initial(cfg: RunConfig):
    """Unphased amplitude, region labels and target spec for the configured run."""
    spec = cfg.target_spec()
    amp, labels = spec.build(cfg.grid)
    if cfg.initial_image:
        image = read_image(cfg.initial_image)
        if image.shape != cfg.grid.shape:
            raise ShapeError(f"initial image is {image.shape}, grid is {cfg.grid.shape}")
        amp = field_from_intensity(np.clip(image, 0, None), cfg.grid, timestamp=cfg.initial_time)
    return amp, labels, spec


def _designed(run: Run, amp, labels):
    cfg = run.cfg
    result = run.timed("design", design_phases, amp, labels, cfg.medium, cfg.design_tau)
    log.info("designed phases %s (objective %.4f)", np.round(result.phases, 4), result.objective)
    return result


def _phases(run: Run, amp, labels, default):
    cfg = run.cfg
    if cfg.design:
        return _designed(run, amp, labels).phases
    if cfg.phases_rad:
        return cfg.phases_rad
    return default


def _length(spec):
    return spec.length if spec.kind == "lines" else None


def cmd_simulate(run: Run):
    cfg = run.cfg
    amp, labels, spec = _initial(cfg)
    phases = _phases(run, amp, labels, (0.0,) * spec.region_count)
    field = apply_region_phases(amp, labels, phases)
    images, titles, vis = [], [], []
    for tau_us in cfg.taus_us:
        out = run.timed("propagate", propagate_storage, field, cfg.medium, tau_us * US - field.timestamp)
        img = intensity(out)
        write_image(img, run.path(f"intensity_tau{tau_us:g}us.pgm"))
        run.outputs.append(run.out / f"intensity_tau{tau_us:g}us.pgm.scale")
        images.append(img)
        titles.append(rf"{tau_us:g} $\mu$s")
        if spec.kind == "lines" and spec.n_lines > 1:
            vis.append(visibility(line_profile(img, cfg.grid, cfg.band_fraction, _length(spec)), cfg.pair, labels))
    if vis:
        write_curve(VisibilityCurve(cfg.taus, vis), run.path("visibility.csv"))
    run.figure("plot_intensity_panels", "simulate.png", images, titles, cfg.grid)


def cmd_sweep(run: Run):
    cfg = run.cfg
    if cfg.target != "lines":
        raise ConfigurationError("visibility sweeps need a lines target", "target")
    amp, labels, spec = _initial(cfg)
    if cfg.design:
        shifted = _designed(run, amp, labels).phases
    elif cfg.phases_rad:
        shifted = cfg.phases_rad
    else:
        graph = build_adjacency(labels, cfg.grid, default_radius(cfg.medium, cfg.design_tau))
        shifted = assign_phases_two_color(graph).phases
    patterns = {"constant": (0.0,) * spec.region_count, "shifted": tuple(shifted)}
    for err in cfg.phase_errors_pi:
        p = list(shifted)
        p[cfg.epsilon_region - 1] += err * math.pi
        patterns[f"shifted_err{err:g}pi"] = tuple(p)
    taus = cfg.taus
    curves = {}
    for name, phases in patterns.items():
        field = apply_region_phases(amp, labels, phases)
        vis = run.timed(
            "sweep",
            curve_from_field,
            field,
            labels,
            cfg.medium,
            taus - field.timestamp,
            cfg.pair,
            cfg.band_fraction,
            _length(spec),
        )
        curves[name] = VisibilityCurve(taus, vis, {"phases_rad": phases})
        write_curve(curves[name], run.path(f"visibility_{name}.csv"))
    run.figure("plot_visibility_curves", "visibility.png", curves)


def cmd_fit(run: Run, curve_path):
    cfg = run.cfg
    if curve_path is None:
        raise ConfigurationError("no curve given; pass --curve or set fit_curve", "fit_curve")
    measured = read_curve(curve_path)
    spec = cfg.target_spec(cfg.phases_rad)
    result = run.timed(
        "fit",
        fit_parameters,
        measured,
        spec,
        cfg.grid,
        cfg.medium,
        cfg.fit_free,
        cfg.fit_bounds,
        pair=cfg.pair,
        epsilon_region=cfg.epsilon_region,
        band_fraction=cfg.band_fraction,
    )
    write_fit_result(result, run.path("fit_result.txt"))
    if not result.converged:
        log.warning("fit did not converge: %s", result.message)
    if run.figures:
        medium = cfg.medium if result.D is None else replace(cfg.medium, D=result.D)
        phases = np.array(spec.region_phases or (0.0,) * spec.region_count)
        if result.epsilon is not None:
            phases[cfg.epsilon_region - 1] += result.epsilon
        field, labels = spec.with_phases(phases).build(cfg.grid)
        fine = np.linspace(measured.taus[0], measured.taus[-1], 25)
        model = curve_from_field(field, labels, medium, fine, cfg.pair, cfg.band_fraction, _length(spec))
        run.figure("plot_fit", "fit.png", measured, fine, model)
    return result


def cmd_design(run: Run):
    cfg = run.cfg
    amp, labels, _ = _initial(cfg)
    result = _designed(run, amp, labels)
    write_phases(result, run.path("phases.csv"))
    summary = run.path("design.txt")
    summary.write_text(
        f"design_tau_us = {cfg.design_tau / US:.9g}\n"
        f"objective = {result.objective:.9g}\n"
        f"conflicts = {result.conflicts}\n"
        f"cycles = {result.cycles}\n"
    )
    if run.figures:
        zeros = np.zeros(int(labels.max()))
        images = [retrieved_image(amp, labels, cfg.medium, cfg.design_tau, p) for p in (zeros, result.phases)]
        run.figure("plot_intensity_panels", "design.png", images, ["constant phase", "designed phase"], cfg.grid)
    return result


def cmd_traces(run: Run, storages_us):
    cfg = run.cfg
    seq = cfg.sequence
    single = storages_us is None
    storages = [seq.storage_duration / US] if single else list(storages_us)
    traces = {}
    for s in storages:
        params = replace(seq, t_on=seq.t_off + s * US)
        trace = simulate_traces(params, cfg.medium, cfg.trace_dt_us * US)
        name = "trace.csv" if single else f"trace_storage{s:g}us.csv"
        write_trace(trace, run.path(name))
        traces[rf"storage {s:g} $\mu$s"] = trace
    run.path("traces.txt").write_text(
        f"group_delay_us = {group_delay(seq) / US:.9g}\n"
        f"stored_fraction = {stored_fraction(seq):.9g}\n"
        f"toff_us = {seq.t_off / US:.9g}\n"
    )
    run.figure("plot_traces", "traces.png", traces)


def load_config(path) -> RunConfig:
    text = "" if path is None else Path(path).read_text()
    return parse_config(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.taus is not None and args.verb != "traces":
            overrides["taus_us"] = args.taus
        if args.phases is not None:
            overrides["phases_rad"] = args.phases
        if args.design:
            overrides["design"] = True
        if args.curve is not None:
            overrides["fit_curve"] = str(args.curve)
        cfg = with_overrides(cfg, **overrides)
        out = args.out or Path(os.environ.get(OUT_ENV) or cfg.out_dir)
        run = Run(cfg, Path(out), figures=not args.no_figures)
        t0 = time.perf_counter()
        if args.verb == "simulate":
            cmd_simulate(run)
        elif args.verb == "sweep":
            cmd_sweep(run)
        elif args.verb == "fit":
            cmd_fit(run, cfg.fit_curve)
        elif args.verb == "design":
            cmd_design(run)
        else:
            cmd_traces(run, args.taus)
        run.timings["total"] = time.perf_counter() - t0
        write_manifest(
            run.out / "manifest.json",
            verb=args.verb,
            config_text=format_config(cfg),
            version=__version__,
            outputs=run.outputs,
            timings=run.timings,
        )
    except VaporStoreError as exc:
        print(f"vaporstore {args.verb}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vaporstore {args.verb}: I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
