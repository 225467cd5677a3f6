"""Phase masks that keep neighbouring image features apart during storage.

Regions whose coherence overlaps after diffusion are connected in an
adjacency graph. A two-coloring of that graph with phases 0 and pi makes the
spreading coherence of neighbours cancel in the gaps between them. The
coloring is then refined by coordinate descent over continuous phases
against the forward model.

The design objective is the worst pairwise gap visibility. For each pair of
adjacent regions the trough is the brightest pixel on the gap's bisector,
i.e. the background pixels about equally far from both regions and lying
between them. This is conservative: it penalizes the worst point along the
whole gap rather than a single cut.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import fft, ndimage

from .errors import DomainError
from .field import ComplexField, intensity
from .propagation import DiffusionKernel, MediumParams, blur_sigma, check_padding, propagate_storage
from .targets import apply_region_phases, region_masks

ADJACENCY_SIGMAS = 3.0
SCAN_POINTS = 32
MAX_CYCLES = 50
MIN_CYCLE_GAIN = 1e-4


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected graph on region indices ``1..n_regions``; edges as sorted pairs."""

    n_regions: int
    edges: frozenset

    def neighbours(self, node: int) -> list[int]:
        return sorted({b if a == node else a for a, b in self.edges if node in (a, b)})


@dataclass(frozen=True)
class PhaseAssignment:
    """Per-region phases in [0, 2 pi).

    ``objective`` is the worst gap visibility when it has been evaluated;
    ``conflicts`` counts adjacent pairs left with equal phase by the coloring.
    """

    phases: tuple
    objective: float | None = None
    conflicts: int = 0
    cycles: int = 0
    history: tuple = ()


def _distance_maps(labels: np.ndarray, pitch: float) -> list[np.ndarray]:
    """Distance (m) from every pixel center to the nearest pixel of each region."""
    return [ndimage.distance_transform_edt(~mask) * pitch for mask in region_masks(labels)]


def _pair_distances(labels: np.ndarray, dmaps) -> np.ndarray:
    n = len(dmaps)
    masks = region_masks(labels)
    dist = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = dmaps[i][masks[j]].min()
    return dist


def build_adjacency(labels, grid, radius: float) -> AdjacencyGraph:
    """Connect regions whose closest pixel centers are at most ``radius`` apart."""
    labels = np.asarray(labels)
    n = int(labels.max())
    if n < 1:
        raise DomainError("label map has no regions")
    if not radius > 0:
        raise DomainError(f"radius must be > 0, got {radius!r}")
    dist = _pair_distances(labels, _distance_maps(labels, grid.pitch))
    tol = 1e-9 * grid.pitch
    edges = frozenset((i + 1, j + 1) for i in range(n) for j in range(i + 1, n) if dist[i, j] <= radius + tol)
    return AdjacencyGraph(n, edges)


def default_radius(medium: MediumParams, tau: float) -> float:
    return ADJACENCY_SIGMAS * blur_sigma(medium, tau)


def assign_phases_two_color(graph: AdjacencyGraph) -> PhaseAssignment:
    """Breadth-first 0/pi coloring, lowest region index first in every component.

    Bipartite graphs get a proper coloring. Otherwise each node takes the
    phase that clashes with fewer already-colored neighbours (0 on ties) and
    the remaining same-phase edges are reported as ``conflicts``.
    """
    color: dict[int, int] = {}
    for root in range(1, graph.n_regions + 1):
        if root in color:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for nb in graph.neighbours(node):
                if nb in color:
                    continue
                done = [color[m] for m in graph.neighbours(nb) if m in color]
                color[nb] = 1 if done.count(0) > done.count(1) else 0
                queue.append(nb)
    conflicts = sum(color[a] == color[b] for a, b in graph.edges)
    phases = tuple(math.pi * color[k] for k in range(1, graph.n_regions + 1))
    return PhaseAssignment(phases, conflicts=conflicts)


class GapObjective:
    """Worst gap visibility of a phased target after storage for ``tau``.

    Propagation is linear, so each region is propagated once and any phase
    assignment is evaluated as a weighted sum of the stored basis fields.
    """

    def __init__(self, field: ComplexField, labels, medium: MediumParams, tau: float, graph: AdjacencyGraph):
        labels = np.asarray(labels)
        grid = field.grid
        self.grid = grid
        kernel = DiffusionKernel(tau, medium.D)
        check_padding(field, kernel.sigma)
        multiplier = kernel.fourier_multiplier(grid) * medium.decay_factor(tau)
        self.masks = region_masks(labels)
        self.basis = np.stack([fft.ifft2(fft.fft2(np.where(m, field.values, 0)) * multiplier) for m in self.masks])
        dmaps = _distance_maps(labels, grid.pitch)
        dist = _pair_distances(labels, dmaps)
        background = labels == 0
        self.pairs = []
        for a, b in sorted(graph.edges):
            i, j = a - 1, b - 1
            # Touching regions have no gap to protect.
            if dist[i, j] <= 1.5 * grid.pitch:
                continue
            between = dmaps[i] + dmaps[j] <= dist[i, j] + 1.5 * grid.pitch
            bisector = np.abs(dmaps[i] - dmaps[j]) <= grid.pitch + 1e-9 * grid.pitch
            zone = background & between & bisector
            if zone.any():
                self.pairs.append((i, j, zone))

    def image(self, phases) -> np.ndarray:
        weights = np.exp(1j * np.asarray(phases, dtype=float))
        e = np.tensordot(weights, self.basis, axes=1)
        return e.real ** 2 + e.imag ** 2

    def __call__(self, phases) -> float:
        if not self.pairs:
            return 1.0
        img = self.image(phases)
        peaks = [img[m].max() for m in self.masks]
        worst = 1.0
        for i, j, zone in self.pairs:
            peak = 0.5 * (peaks[i] + peaks[j])
            trough = img[zone].max()
            v = (peak - trough) / (peak + trough) if peak + trough > 0 else 0.0
            worst = min(worst, max(0.0, v))
        return float(worst)


def _parabola_vertex(xs, fs):
    (x0, x1, x2), (f0, f1, f2) = xs, fs
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (f1 - f0) + x1 * (f0 - f2) + x0 * (f2 - f1)) / denom
    b = (x2 ** 2 * (f0 - f1) + x1 ** 2 * (f2 - f0) + x0 ** 2 * (f1 - f2)) / denom
    if a >= 0:
        return None
    return -b / (2 * a)


def refine_phases(
    field: ComplexField,
    labels,
    medium: MediumParams,
    tau: float,
    initial: PhaseAssignment,
    *,
    graph: AdjacencyGraph | None = None,
) -> PhaseAssignment:
    """Cyclic coordinate ascent of the worst gap visibility at duration ``tau``.

    ``field`` is the unphased amplitude target. Region 1 keeps its initial
    phase (global phase is unobservable). Each coordinate is scanned at
    32 phases and polished with a parabola through the best scan point and
    its neighbours; a move is taken only if it improves the objective, so
    the result is never worse than ``initial``.
    """
    labels = np.asarray(labels)
    if graph is None:
        graph = build_adjacency(labels, field.grid, default_radius(medium, tau))
    objective = GapObjective(field, labels, medium, tau, graph)
    phases = np.mod(np.asarray(initial.phases, dtype=float), 2 * np.pi)
    best = objective(phases)
    history = [best]
    h = 2 * np.pi / SCAN_POINTS
    scan = np.arange(SCAN_POINTS) * h
    cycles = 0
    while cycles < MAX_CYCLES and objective.pairs:
        cycles += 1
        start = best
        for k in range(1, phases.size):
            trial = phases.copy()
            values = []
            for p in scan:
                trial[k] = p
                values.append(objective(trial))
            j = int(np.argmax(values))
            cand_phase, cand_val = scan[j], values[j]
            xs = (scan[j] - h, scan[j], scan[j] + h)
            fs = (values[j - 1], values[j], values[(j + 1) % SCAN_POINTS])
            vertex = _parabola_vertex(xs, fs)
            if vertex is not None:
                trial[k] = vertex
                v = objective(trial)
                if v > cand_val:
                    cand_phase, cand_val = vertex, v
            if cand_val > best:
                phases[k] = np.mod(cand_phase, 2 * np.pi)
                best = cand_val
        history.append(best)
        if best - start < MIN_CYCLE_GAIN:
            break
    conflicts = sum(
        abs(math.remainder(phases[a - 1] - phases[b - 1], 2 * np.pi)) < np.pi / 2 for a, b in graph.edges
    )
    return PhaseAssignment(tuple(float(p) for p in phases), best, int(conflicts), cycles, tuple(history))


def evaluate_assignment(field: ComplexField, labels, medium: MediumParams, tau: float, phases, graph=None) -> float:
    """Worst gap visibility for fixed ``phases``."""
    if graph is None:
        graph = build_adjacency(labels, field.grid, default_radius(medium, tau))
    return GapObjective(field, labels, medium, tau, graph)(phases)


def design_phases(field: ComplexField, labels, medium: MediumParams, tau: float) -> PhaseAssignment:
    """Two-color the adjacency graph at ``tau`` and refine against the forward model."""
    graph = build_adjacency(labels, field.grid, default_radius(medium, tau))
    colored = assign_phases_two_color(graph)
    refined = refine_phases(field, labels, medium, tau, colored, graph=graph)
    return PhaseAssignment(refined.phases, refined.objective, colored.conflicts, refined.cycles, refined.history)


def retrieved_image(field: ComplexField, labels, medium: MediumParams, tau: float, phases) -> np.ndarray:
    """Retrieved intensity of the phased target, for plotting designed masks."""
    return intensity(propagate_storage(apply_region_phases(field, labels, phases), medium, tau))
