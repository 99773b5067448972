import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bilapnet import _kernels_py
from bilapnet._backend import BACKEND, kernels
from bilapnet.errors import (
    Disconnected, DuplicateEdge, IndexOutOfRange, LoopEdge, SizeCapExceeded, SizeTooSmall,
)
from bilapnet.graphs import (
    MetricGraph, build_graph, count_connected_graphs, enumerate_connected_graphs,
    incidence_matrix, preset_graph,
)


def test_build_path():
    g = build_graph(3, [(0, 1), (1, 2)])
    assert g.edges == ((0, 1), (1, 2))
    assert g.degrees.tolist() == [1, 2, 1]


def test_smallest_graph():
    g = build_graph(2, [(0, 1)])
    assert g.edge_count == 1


@pytest.mark.parametrize("n, edges, exc", [
    (3, [(0, 1), (0, 1)], DuplicateEdge),
    (3, [(0, 1), (1, 0), (1, 2)], DuplicateEdge),
    (2, [(0, 0), (0, 1)], LoopEdge),
    (3, [(0, 1)], Disconnected),
    (2, [(0, 2)], IndexOutOfRange),
])
def test_build_rejects(n, edges, exc):
    with pytest.raises(exc):
        build_graph(n, edges)


def test_incidence_examples():
    assert incidence_matrix(preset_graph("path", 3)).tolist() == [[-1, 0], [1, -1], [0, 1]]
    assert incidence_matrix(build_graph(2, [(0, 1)])).tolist() == [[-1], [1]]


def test_reversed_orientation_same_laplacian():
    a = incidence_matrix(build_graph(3, [(0, 1), (1, 2)]))
    b = incidence_matrix(build_graph(3, [(1, 0), (1, 2)]))
    assert np.array_equal(a[:, 0], -b[:, 0])
    assert np.array_equal(a @ a.T, b @ b.T)


def test_presets():
    k4 = preset_graph("complete", 4)
    assert (k4.vertex_count, k4.edge_count) == (4, 6)
    s3 = preset_graph("star", 3)
    assert s3.degrees.tolist() == [3, 1, 1, 1]
    assert preset_graph("cycle", 3).adjacency().tolist() == preset_graph("complete", 3).adjacency().tolist()
    fl = preset_graph("flower", 2)
    assert fl.degrees[0] == 4 and fl.edge_count == 6


@pytest.mark.parametrize("kind, n", [("path", 1), ("cycle", 2), ("complete", 2), ("star", 1)])
def test_preset_too_small(kind, n):
    with pytest.raises(SizeTooSmall):
        preset_graph(kind, n)


def test_metric_graph_defaults_and_checks():
    mg = MetricGraph(preset_graph("path", 3))
    assert mg.lengths == (1.0, 1.0) and mg.total_length == 2.0
    with pytest.raises(ValueError):
        MetricGraph(preset_graph("path", 3), (1.0, -1.0))
    with pytest.raises(ValueError):
        MetricGraph(preset_graph("path", 3), (1.0,))


def _brute_count(n):
    pairs = list(itertools.combinations(range(n), 2))
    count = 0
    for r in range(len(pairs) + 1):
        for sub in itertools.combinations(pairs, r):
            try:
                build_graph(n, sub)
            except Disconnected:
                continue
            count += 1
    return count


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_enumeration_matches_subset_filter(n):
    graphs = list(enumerate_connected_graphs(n))
    assert len(graphs) == _brute_count(n)
    assert len({g.edges for g in graphs}) == len(graphs)


def test_enumeration_known_counts():
    assert [count_connected_graphs(n) for n in range(1, 7)] == [1, 1, 4, 38, 728, 26704]


def test_enumeration_cap():
    with pytest.raises(SizeCapExceeded):
        list(enumerate_connected_graphs(8))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_laplacian_rows_and_degree_sum(n):
    for g in enumerate_connected_graphs(n):
        inc = incidence_matrix(g)
        assert np.all(inc.sum(axis=0) == 0)
        lap = inc @ inc.T
        adj = g.adjacency()
        assert np.array_equal(np.diag(lap), g.degrees)
        assert np.array_equal(lap - np.diag(np.diag(lap)), -adj)
        assert g.degrees.sum() == 2 * g.edge_count


@st.composite
def connected_graphs(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    # random spanning tree plus extra edges
    edges = {(draw(st.integers(0, v - 1)), v) for v in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=10))
    for a, b in extra:
        if a != b and (min(a, b), max(a, b)) not in edges:
            edges.add((min(a, b), max(a, b)))
    return build_graph(n, sorted(edges))


@given(connected_graphs())
@settings(max_examples=60, deadline=None)
def test_backends_agree_on_bilaplacian(g):
    adj = np.ascontiguousarray(g.adjacency(), dtype=np.int64)
    assert np.array_equal(kernels.closed_form_bilaplacian(adj), _kernels_py.closed_form_bilaplacian(adj))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_backends_agree_on_enumeration(n):
    assert np.array_equal(kernels.connected_edge_masks(n), _kernels_py.connected_edge_masks(n))


def test_backends_agree_on_assembly_and_sup():
    n_el = np.array([3, 5], dtype=np.int64)
    lengths = np.array([0.7, 1.9])
    k1, m1 = kernels.assemble_hermite(n_el, lengths)
    k2, m2 = _kernels_py.assemble_hermite(n_el, lengths)
    assert np.allclose(k1, k2, rtol=1e-14, atol=0) and np.allclose(m1, m2, rtol=1e-14, atol=0)
    rng = np.random.default_rng(0)
    phi = np.ascontiguousarray(rng.standard_normal((30, 6)))
    w = np.ascontiguousarray(rng.random(6))
    brute = np.max(np.abs((phi * w) @ phi.T))
    assert kernels.kernel_sup(phi, w) == pytest.approx(brute, rel=1e-12)
    assert _kernels_py.kernel_sup(phi, w) == pytest.approx(brute, rel=1e-12)


def test_backend_name():
    assert BACKEND in ("cython", "python")
