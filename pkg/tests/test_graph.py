import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lisfdr import EdgeClass, Graph, GraphSizeError, R2Record, StructureError
from lisfdr.graph import build_chain, build_grid, build_max_r2_graph, build_perfect_binary_tree, classify_r2

from conftest import forests, loopy_graphs


def union_find_components(m, edges):
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)
    return len({find(a) for a in range(m)})


def test_chain_small():
    g = build_chain(3)
    assert g.edge_list() == [(0, 1, EdgeClass.DEFAULT), (1, 2, EdgeClass.DEFAULT)]
    assert g.is_acyclic


def test_chain_single_and_large():
    assert build_chain(1).n_edges == 0
    assert build_chain(3000).n_edges == 2999


def test_chain_zero_rejected():
    with pytest.raises(GraphSizeError):
        build_chain(0)


@pytest.mark.parametrize("height,nodes", [(0, 1), (2, 7), (12, 8191)])
def test_tree_sizes(height, nodes):
    g = build_perfect_binary_tree(height)
    assert g.m == nodes
    assert g.n_edges == nodes - 1
    assert g.is_acyclic


def test_tree_children():
    g = build_perfect_binary_tree(2)
    assert sorted(g.adjacency[0]) == [1, 2]
    assert sorted(g.adjacency[1]) == [0, 3, 4]
    assert sorted(g.adjacency[2]) == [0, 5, 6]


def test_tree_overflow():
    with pytest.raises(GraphSizeError):
        build_perfect_binary_tree(60)
    with pytest.raises(GraphSizeError):
        build_perfect_binary_tree(-1)


def test_grid_examples():
    assert build_grid(100, 100).m == 10000
    assert build_grid(1, 1).n_edges == 0
    g = build_grid(2, 2)
    assert g.n_edges == 4
    assert not g.is_acyclic


def test_grid_edge_count_exhaustive():
    for r in range(1, 11):
        for c in range(1, 11):
            g = build_grid(r, c)
            assert g.n_edges == r * (c - 1) + c * (r - 1)
            assert g.is_acyclic == (r == 1 or c == 1)


def test_grid_zero_dim():
    with pytest.raises(GraphSizeError):
        build_grid(0, 3)


def test_max_r2_worked_example():
    recs = [R2Record(0, 1, 0.9), R2Record(0, 2, 0.3), R2Record(1, 2, 0.6)]
    g = build_max_r2_graph(recs, 3, (0.25, 0.5, 0.8))
    assert g.edge_list() == [(0, 1, EdgeClass.HIGH), (1, 2, EdgeClass.MEDIUM)]


def test_max_r2_all_weak_and_isolated():
    recs = [R2Record(0, 1, 0.1), R2Record(1, 2, 0.2)]
    assert build_max_r2_graph(recs, 4).n_edges == 0
    g = build_max_r2_graph([R2Record(0, 1, 0.9)], 4)
    assert g.adjacency[3] == [] and g.adjacency[2] == []


def test_max_r2_class_boundaries():
    t = (0.25, 0.5, 0.8)
    assert classify_r2(0.25, t) == EdgeClass.LOW
    assert classify_r2(0.5, t) == EdgeClass.LOW
    assert classify_r2(0.8, t) == EdgeClass.MEDIUM
    assert classify_r2(0.81, t) == EdgeClass.HIGH
    assert classify_r2(0.2499, t) is None


def test_max_r2_tie_goes_to_lowest_id():
    recs = [R2Record(2, 0, 0.5), R2Record(2, 1, 0.5)]
    g = build_max_r2_graph(recs, 3)
    # node 2 picks 0; nodes 0 and 1 each pick 2
    assert {(i, j) for i, j, _ in g.edge_list()} == {(0, 2), (1, 2)}


def test_max_r2_out_of_range():
    with pytest.raises(IndexError):
        build_max_r2_graph([R2Record(0, 5, 0.9)], 3)


def test_max_r2_bad_thresholds():
    with pytest.raises(ValueError):
        build_max_r2_graph([], 3, (0.5, 0.25, 0.8))


@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_max_r2_at_most_m_edges(m, seed):
    gen = np.random.default_rng(seed)
    recs = [R2Record(i, j, float(gen.random())) for i in range(m) for j in range(i + 1, m) if gen.random() < 0.5]
    g = build_max_r2_graph(recs, m)
    assert g.n_edges <= m
    assert g.is_acyclic == (g.n_edges == m - union_find_components(m, g.edges.tolist()))


def test_invalid_edges():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(IndexError):
        Graph.from_edges(3, [(0, 3)])
    with pytest.raises(ValueError):
        Graph(3, np.array([[1, 0]]), np.array([3]))


@given(st.one_of(forests(max_m=15), loopy_graphs(max_m=12)))
def test_acyclic_flag_matches_union_find(g):
    assert g.is_acyclic == (g.n_edges == g.m - union_find_components(g.m, g.edges.tolist()))


@given(st.one_of(forests(max_m=15), loopy_graphs(max_m=12)))
def test_adjacency_consistent(g):
    adj = g.adjacency
    assert sum(len(a) for a in adj) == 2 * g.n_edges
    for i, j in g.edges.tolist():
        assert j in adj[i] and i in adj[j]


def test_forest_order_rejects_cycles():
    with pytest.raises(StructureError):
        build_grid(3, 3).forest_order


@given(forests(max_m=15))
def test_forest_order_parents_precede_children(g):
    fo = g.forest_order
    pos = np.empty(g.m, dtype=int)
    pos[fo.order] = np.arange(g.m)
    for v in range(g.m):
        if fo.parent[v] >= 0:
            assert pos[fo.parent[v]] < pos[v]
    assert np.sum(fo.parent < 0) == g.n_components
