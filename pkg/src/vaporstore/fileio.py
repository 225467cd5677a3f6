"""File formats: 16-bit PGM images, CSV curves/phases/traces, run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .analysis import FitResult, VisibilityCurve
from .design import PhaseAssignment
from .errors import DomainError, FormatError
from .sequence import TimeTrace

PGM_MAXVAL = 65535
SCALE_SUFFIX = ".scale"
CURVE_HEADER = ["tau_us", "visibility"]
PHASE_HEADER = ["region", "phase_rad"]
TRACE_HEADER = ["t_us", "input_power", "output_power", "segment"]


def _num(x) -> str:
    return f"{float(x):.9g}"


# -- images ------------------------------------------------------------------


def write_image(image, path) -> Path:
    """Write a 16-bit binary PGM plus a ``.scale`` sidecar with (min, max).

    Pixel values are mapped linearly onto 0..65535, so reading back is exact
    to ``(max - min) / 65535``.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise DomainError(f"images must be 2D, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise DomainError("image contains non-finite values")
    path = Path(path)
    lo, hi = float(image.min()), float(image.max())
    if hi > lo:
        counts = np.rint((image - lo) / (hi - lo) * PGM_MAXVAL)
    else:
        counts = np.zeros_like(image)
    Image.fromarray(counts.astype(np.uint16)).save(path, format="PPM")
    Path(str(path) + SCALE_SUFFIX).write_text(f"min = {lo!r}\nmax = {hi!r}\n")
    return path


def _read_scale(path: Path):
    sidecar = Path(str(path) + SCALE_SUFFIX)
    if not sidecar.exists():
        return None
    values = {}
    for line in sidecar.read_text().splitlines():
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            values[k] = v
    try:
        return float(values["min"]), float(values["max"])
    except (KeyError, ValueError):
        raise FormatError(f"malformed scale sidecar {sidecar}") from None


def read_image(path) -> np.ndarray:
    """Read a binary PGM written by :func:`write_image` (or any P5 graymap).

    With a sidecar the original scale is restored; without one the counts
    are normalized to [0, 1] by the header's maximum value.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(2) != b"P5":
            raise FormatError(f"{path}: not a binary PGM (magic P5)")
    try:
        with Image.open(path) as im:
            counts = np.asarray(im, dtype=float)
            maxval = PGM_MAXVAL if im.mode.startswith("I") else 255
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    scale = _read_scale(path)
    if scale is None:
        return counts / maxval
    lo, hi = scale
    return lo + counts / PGM_MAXVAL * (hi - lo)


# -- CSV ---------------------------------------------------------------------


def _write_rows(path, header, rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def _read_rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if [h.strip() for h in first] != header:
            raise FormatError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
        return [row for row in reader if row]


def write_curve(curve: VisibilityCurve, path) -> Path:
    rows = [(_num(t * 1e6), _num(v)) for t, v in zip(curve.taus, curve.visibility)]
    return _write_rows(path, CURVE_HEADER, rows)


def read_curve(path) -> VisibilityCurve:
    rows = _read_rows(path, CURVE_HEADER)
    try:
        data = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    except ValueError:
        raise FormatError(f"{path}: non-numeric or short row") from None
    return VisibilityCurve(data[:, 0] * 1e-6, data[:, 1], {"source": str(path)})


def write_phases(assignment: PhaseAssignment, path) -> Path:
    rows = [(k, _num(p)) for k, p in enumerate(assignment.phases, start=1)]
    return _write_rows(path, PHASE_HEADER, rows)


def read_phases(path) -> PhaseAssignment:
    rows = _read_rows(path, PHASE_HEADER)
    try:
        pairs = sorted((int(r), float(p)) for r, p in rows)
    except ValueError:
        raise FormatError(f"{path}: non-numeric row") from None
    if [r for r, _ in pairs] != list(range(1, len(pairs) + 1)):
        raise FormatError(f"{path}: regions must be numbered 1..n")
    return PhaseAssignment(tuple(p for _, p in pairs))


def write_trace(trace: TimeTrace, path) -> Path:
    rows = (
        (_num(t * 1e6), _num(i), _num(p), s)
        for t, i, p, s in zip(trace.times, trace.input_power, trace.power, trace.segment)
    )
    return _write_rows(path, TRACE_HEADER, rows)


def write_fit_result(result: FitResult, path) -> Path:
    lines = []
    if result.D is not None:
        lines.append(f"D_cm2_per_s = {_num(result.D * 1e4)}")
    if result.epsilon is not None:
        lines.append(f"epsilon_rad = {_num(result.epsilon)}")
        lines.append(f"epsilon_pi = {_num(result.epsilon / math.pi)}")
    lines += [
        f"residual = {_num(result.residual)}",
        f"iterations = {result.iterations}",
        f"evaluations = {result.evaluations}",
        f"converged = {'true' if result.converged else 'false'}",
    ]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


# -- manifest ----------------------------------------------------------------


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, *, verb, config_text, version, outputs, timings) -> Path:
    """Record config, version, output checksums and timings; written atomically."""
    path = Path(path)
    root = path.parent
    manifest = {
        "verb": verb,
        "version": version,
        "config": config_text,
        "outputs": {str(Path(p).relative_to(root)): sha256(p) for p in sorted(map(Path, outputs))},
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
    }
    fd, tmp = tempfile.mkstemp(dir=root, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path
