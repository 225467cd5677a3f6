import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaporstore import (
    AdjacencyGraph,
    DomainError,
    GridSpec,
    MediumParams,
    PhaseAssignment,
    TargetSpec,
    assign_phases_two_color,
    build_adjacency,
    refine_phases,
)
from vaporstore.design import GapObjective, default_radius, design_phases, evaluate_assignment

from conftest import D_REF, GAMMA_REF

PI = math.pi
TAU = 30e-6


def _wrapped(a, b):
    return abs(math.remainder(a - b, 2 * PI))


def _min_conflicts(graph):
    best = len(graph.edges)
    for bits in itertools.product((0, 1), repeat=graph.n_regions):
        best = min(best, sum(bits[a - 1] == bits[b - 1] for a, b in graph.edges))
    return best


@pytest.fixture(scope="module")
def lines_setup():
    g = GridSpec(512, 512, 10e-6)
    amp, labels = TargetSpec("lines").build(g)
    return amp, labels, MediumParams(D_REF, GAMMA_REF)


def test_three_lines_form_a_path(lines_setup):
    amp, labels, m = lines_setup
    graph = build_adjacency(labels, amp.grid, default_radius(m, TAU))
    assert graph.edges == frozenset({(1, 2), (2, 3)})
    assert graph.neighbours(2) == [1, 3]


def test_small_radius_no_edges(lines_setup):
    amp, labels, _ = lines_setup
    assert build_adjacency(labels, amp.grid, 100e-6).edges == frozenset()
    with pytest.raises(DomainError):
        build_adjacency(labels, amp.grid, 0.0)


def test_two_color_path():
    p = assign_phases_two_color(AdjacencyGraph(3, frozenset({(1, 2), (2, 3)})))
    assert p.phases == (0.0, PI, 0.0)
    assert p.conflicts == 0


def test_two_color_single_and_isolated():
    assert assign_phases_two_color(AdjacencyGraph(1, frozenset())).phases == (0.0,)
    assert assign_phases_two_color(AdjacencyGraph(3, frozenset())).phases == (0.0, 0.0, 0.0)


def test_triangle_reports_one_conflict():
    g = AdjacencyGraph(3, frozenset({(1, 2), (2, 3), (1, 3)}))
    p = assign_phases_two_color(g)
    assert p.conflicts == 1 == _min_conflicts(g)


@st.composite
def graphs(draw, bipartite=False):
    n = draw(st.integers(1, 9))
    side = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    pairs = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]
    if bipartite:
        pairs = [(a, b) for a, b in pairs if side[a - 1] != side[b - 1]]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return AdjacencyGraph(n, frozenset(chosen))


@settings(max_examples=150, deadline=None)
@given(graphs(bipartite=True))
def test_two_color_bipartite_is_proper(graph):
    p = assign_phases_two_color(graph)
    assert p.conflicts == 0
    for a, b in graph.edges:
        assert p.phases[a - 1] != p.phases[b - 1]


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_two_color_conflicts_counted_and_bounded(graph):
    p = assign_phases_two_color(graph)
    actual = sum(p.phases[a - 1] == p.phases[b - 1] for a, b in graph.edges)
    assert p.conflicts == actual >= _min_conflicts(graph)
    assert set(p.phases) <= {0.0, PI}


def test_objective_scan_peaks_at_pi(lines_setup):
    amp, labels, m = lines_setup
    obj = GapObjective(amp, labels, m, TAU, build_adjacency(labels, amp.grid, default_radius(m, TAU)))
    scan = np.arange(64) * 2 * PI / 64
    vals = [obj((0.0, p, 0.0)) for p in scan]
    assert scan[int(np.argmax(vals))] == pytest.approx(PI)
    assert obj((0.0, PI, 0.0)) > 0.9 > obj((0.0, 0.0, 0.0))


def test_refine_from_alternating_stays(lines_setup):
    amp, labels, m = lines_setup
    p = refine_phases(amp, labels, m, TAU, PhaseAssignment((PI, 0.0, PI)))
    assert _wrapped(p.phases[0] - p.phases[1], PI) < 0.02 * PI
    assert _wrapped(p.phases[2] - p.phases[1], PI) < 0.02 * PI


def test_refine_from_constant(lines_setup):
    amp, labels, m = lines_setup
    p = refine_phases(amp, labels, m, TAU, PhaseAssignment((0.0, 0.0, 0.0)))
    assert p.objective > 0.9
    assert _wrapped(p.phases[1], PI) < 0.02 * PI
    assert _wrapped(p.phases[2], 0.0) < 0.02 * PI
    assert p.phases[0] == 0.0
    assert all(b >= a for a, b in zip(p.history, p.history[1:]))
    assert p.conflicts == 0


def test_refine_never_worse_than_initial(lines_setup):
    amp, labels, m = lines_setup
    start = PhaseAssignment((0.3, 2.0, 5.0))
    before = evaluate_assignment(amp, labels, m, TAU, start.phases)
    p = refine_phases(amp, labels, m, TAU, start)
    assert p.objective >= before
    assert p.history[0] == pytest.approx(before)


def test_single_region_unchanged():
    g = GridSpec(512, 512, 10e-6)
    amp, labels = TargetSpec("lines", n_lines=1).build(g)
    m = MediumParams(D_REF, GAMMA_REF)
    p = refine_phases(amp, labels, m, TAU, PhaseAssignment((1.25,)))
    assert p.phases == (1.25,)
    assert p.objective == 1.0


def test_gauge_invariance(lines_setup):
    amp, labels, m = lines_setup
    graph = build_adjacency(labels, amp.grid, default_radius(m, TAU))
    obj = GapObjective(amp, labels, m, TAU, graph)
    base = np.array([0.4, 2.9, 0.1])
    for shift in (0.7, PI, 5.0):
        assert obj(base + shift) == pytest.approx(obj(base), abs=1e-12)
        np.testing.assert_allclose(obj.image(base + shift), obj.image(base), rtol=0, atol=1e-12 * obj.image(base).max())


@pytest.mark.parametrize("glyph", ["2", "6", "9"])
def test_glyph_design_improves(glyph):
    g = GridSpec(512, 512, 10e-6)
    amp, labels = TargetSpec("glyph", glyph=glyph).build(g)
    m = MediumParams(D_REF, GAMMA_REF)
    tau = 20e-6
    flat = evaluate_assignment(amp, labels, m, tau, np.zeros(int(labels.max())))
    p = design_phases(amp, labels, m, tau)
    assert p.objective > flat
    assert len(p.phases) == labels.max()
