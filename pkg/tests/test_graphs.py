import itertools
import json
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dependent_wigner.errors import InvalidSpec, LimitExceeded, NotConnected
from dependent_wigner.graphs import (
    CanonicalGraphKey,
    OrientedMultigraph,
    automorphism_count,
    canonical_key,
    check_euler_lemma,
    connected_components,
    enumerate_graphs,
    from_index_pattern,
    graph_from_key,
    is_eulerian,
    reverse,
    scaling_exponent,
    set_partitions,
    symmetry_factor,
)


def to_nx(g):
    h = nx.MultiDiGraph()
    h.add_nodes_from(range(g.vertex_count))
    h.add_edges_from(g.edges)
    return h


def brute_force_classes(max_vertices, max_edges):
    """Isomorphism classes by direct edge-multiset enumeration and networkx matching."""
    reps = []
    for v in range(1, max_vertices + 1):
        slots = [(s, t) for s in range(v) for t in range(v)]
        for e in range(1, max_edges + 1):
            for edges in itertools.combinations_with_replacement(slots, e):
                used = {x for edge in edges for x in edge}
                if len(used) != v:
                    continue
                h = to_nx(OrientedMultigraph(v, edges))
                if not any(
                    r.number_of_nodes() == v and r.number_of_edges() == e and nx.is_isomorphic(r, h)
                    for r in reps
                ):
                    reps.append(h)
    return reps


def test_index_pattern_example():
    # <M_12 M_23 M_31 M_11>: three vertices, a 3-cycle plus a loop
    g, labels = from_index_pattern([(1, 2), (2, 3), (3, 1), (1, 1)])
    assert g.vertex_count == 3 and g.edge_count == 4
    assert labels == {1: 0, 2: 1, 3: 2}
    assert is_eulerian(g)
    assert scaling_exponent(g) == 0


def test_non_eulerian_two_components():
    g, _ = from_index_pattern([(1, 2), (3, 3)])
    assert not is_eulerian(g)
    assert connected_components(g) == 2
    assert scaling_exponent(g) == 0
    assert automorphism_count(g) == 1
    assert symmetry_factor(g) == 1


def test_scaling_exponents():
    two_cycle = OrientedMultigraph(2, ((0, 1), (1, 0)))
    assert scaling_exponent(two_cycle) == 0
    four_cycle = OrientedMultigraph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))
    assert scaling_exponent(four_cycle) == 1
    assert scaling_exponent(OrientedMultigraph(1, ((0, 0),))) == Fraction(-1, 2)


def test_symmetry_counts_multiplicities():
    double_loop = OrientedMultigraph(1, ((0, 0), (0, 0)))
    assert automorphism_count(double_loop) == 1
    assert symmetry_factor(double_loop) == 2
    two_cycle = OrientedMultigraph(2, ((0, 1), (1, 0)))
    assert automorphism_count(two_cycle) == 2
    assert symmetry_factor(two_cycle) == 2


def test_isolated_vertex_rejected():
    with pytest.raises(InvalidSpec):
        OrientedMultigraph(3, ((0, 1),))


@pytest.mark.parametrize("limits", [(1, 1), (2, 2), (3, 3), (2, 3), (4, 3)])
def test_enumeration_matches_networkx(limits):
    mine = enumerate_graphs(*limits)
    assert len(mine) == len(brute_force_classes(*limits))
    assert len({canonical_key(g) for g in mine}) == len(mine)


def test_enumeration_known_sizes():
    assert len(enumerate_graphs(1, 1)) == 1
    assert len(enumerate_graphs(2, 1)) == 2
    assert len(enumerate_graphs(2, 2)) == 8
    assert len(enumerate_graphs(4, 4)) == 258


def test_automorphisms_match_networkx():
    for g in enumerate_graphs(4, 4):
        h = to_nx(g)
        count = sum(1 for _ in nx.algorithms.isomorphism.MultiDiGraphMatcher(h, h).isomorphisms_iter())
        assert automorphism_count(g) == count, g


def test_key_roundtrip_and_order():
    graphs = enumerate_graphs(3, 3)
    keys = [canonical_key(g) for g in graphs]
    for g, k in zip(graphs, keys):
        assert canonical_key(graph_from_key(k)) == k
        assert k.vertex_count == g.vertex_count and k.edge_count == g.edge_count
    assert sorted(keys) == sorted(keys, key=lambda k: k.canonical_encoding)
    assert isinstance(keys[0], CanonicalGraphKey)


def test_limit_guard():
    big = OrientedMultigraph(9, tuple((i, i + 1) for i in range(8)))
    with pytest.raises(LimitExceeded):
        canonical_key(big)
    assert canonical_key(big, limit=9).vertex_count == 9


def test_reverse_involution():
    for g in enumerate_graphs(3, 3):
        assert canonical_key(reverse(reverse(g))) == canonical_key(g)
        assert is_eulerian(reverse(g)) == is_eulerian(g)


def test_json_roundtrip():
    g = OrientedMultigraph(3, ((0, 1), (1, 2), (2, 2)))
    assert OrientedMultigraph.from_dict(json.loads(g.to_json())) == g


def test_euler_lemma_on_all_connected_graphs():
    for g in enumerate_graphs(4, 4):
        if connected_components(g) == 1:
            assert check_euler_lemma(g)


def test_euler_lemma_needs_connected_graph():
    with pytest.raises(NotConnected):
        check_euler_lemma(OrientedMultigraph(2, ((0, 0), (1, 1))))


def test_set_partitions_are_bell_numbers():
    assert [sum(1 for _ in set_partitions(n)) for n in range(1, 7)] == [1, 2, 5, 15, 52, 203]


edge_lists = st.integers(1, 5).flatmap(
    lambda v: st.lists(st.tuples(st.integers(0, v - 1), st.integers(0, v - 1)), min_size=1, max_size=6)
)


@settings(max_examples=150, deadline=None)
@given(edge_lists, st.randoms(use_true_random=False))
def test_canonical_key_is_label_free(edges, rnd):
    used = sorted({x for e in edges for x in e})
    relabel = {x: i for i, x in enumerate(used)}
    g = OrientedMultigraph(len(used), tuple((relabel[s], relabel[t]) for s, t in edges))
    perm = list(range(g.vertex_count))
    rnd.shuffle(perm)
    h = g.relabel(perm)
    assert canonical_key(h) == canonical_key(g)
    assert nx.is_isomorphic(to_nx(graph_from_key(canonical_key(g))), to_nx(g))
