from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maso.core import (
    Allocation, GroundSet, InvariantViolation, MasoInstance, check_monotone, check_submodular,
    coverage, explicit_family, graph_cut, graphic_matroid, intersection, mask, matchings, members,
    modular, partition_matroid, poset_ideals, uniform_matroid, vertex_covers,
)
from maso.extensions import multilinear_eval_exact
from maso.lifting import (
    check_base_family, check_bases_correspondence, check_crossing, check_matroid, check_ring, cov, embed,
    graph_family, lift_agent_families, lift_family, lift_graph, lift_instance, lifted_function,
    p_system_ratio, split, unlift, count_members,
)
from maso.core import bases_of, proper_supersets
from maso.oracle import brute_force_maso, brute_force_so

K3 = [(0, 1), (1, 2), (0, 2)]


def test_single_agent_lift_is_identity():
    f = coverage([{0, 1}, {1, 2}, {3}])
    g = lifted_function([f])
    assert all(f(S) == g(S) for S in range(8))


def test_modular_lift_adds_weights():
    w1, w2 = [1.0, 2.0, 4.0], [8.0, 16.0, 32.0]
    g = lifted_function([modular(w1), modular(w2)])
    # (agent 1, item a=0) and (agent 2, item b=2)
    assert g(embed([mask([0]), mask([2])], 3)) == w1[0] + w2[2]


def test_lifted_optimum_matches_brute_force_on_covers():
    objs = [coverage([{0, 1}, {1}, {2, 3}]), coverage([{0}, {1, 2}, {3}])]
    inst = MasoInstance(GroundSet(3), objs, vertex_covers(3, K3))
    L = lift_instance(inst)
    lifted_value, S = brute_force_so(L.f, L.combined(), 6)
    value, _ = brute_force_maso(inst)
    assert lifted_value == value
    assert inst.outer(cov(S, 3, 2))


def test_unlift_examples():
    assert unlift(0, 3, 2).parts == (0, 0)
    assert unlift(mask([0, 1]), 3, 2).parts == (mask([0, 1]), 0)


def test_unlift_overlap_rejected():
    with pytest.raises(InvariantViolation):
        unlift(mask([0, 3]), 3, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_embed_unlift_round_trip(k, n, data):
    owner = data.draw(st.lists(st.integers(-1, k - 1), min_size=n, max_size=n))
    parts = [sum(1 << v for v in range(n) if owner[v] == i) for i in range(k)]
    S = embed(parts, n)
    assert embed(unlift(S, n, k), n) == S
    assert split(S, n, k) == parts


def test_matroid_checks():
    assert check_matroid(uniform_matroid(4, 2))
    v = check_matroid(explicit_family(2, [[], [0], [0, 1]]))
    assert not v
    assert mask([1]) in v.witness
    assert check_matroid(lift_family(graphic_matroid(3, K3), 2))


def test_p_system_examples():
    assert p_system_ratio(graphic_matroid(4, [(0, 1), (1, 2), (2, 3), (0, 2)])) == 1
    M1 = partition_matroid(4, [[0, 1], [2, 3]], [1, 1])
    M2 = partition_matroid(4, [[0, 2], [1, 3]], [1, 1])
    assert p_system_ratio(intersection([M1, M2])) <= 2
    # three-edge path 0-1-2-3: the middle edge alone is a basis next to the two outer edges
    assert p_system_ratio(matchings(4, [(0, 1), (1, 2), (2, 3)])) == Fraction(2)
    # two-edge path: every maximal matching is a single edge
    assert p_system_ratio(matchings(3, [(0, 1), (1, 2)])) == 1


def test_bases_correspondence_examples():
    F = uniform_matroid(2, 1)
    FL = lift_family(F, 2)
    v = check_bases_correspondence(F, FL, 0, 2)
    assert v
    S = embed([mask([0]), mask([0])], 2)
    v = check_bases_correspondence(F, FL, S, 2)
    assert v and v.detail == "basis sizes (1, 1)"
    G = graphic_matroid(3, K3)
    tri = embed([0b111, 0], 3)
    v = check_bases_correspondence(G, lift_family(G, 2), tri, 2)
    assert v and v.detail == "basis sizes (2, 2)"


def test_lift_graph_shapes():
    G1 = lift_graph(3, K3, 1)
    assert G1.edges == K3 and G1.pi(0, 2) == 2
    G2 = lift_graph(3, K3, 2)
    assert len(G2.edges) == 6 and G2.nodes == 3
    assert G2.pi(1, 0) == 3


def test_spanning_trees_of_p3_lift_count():
    edges = [(0, 1), (1, 2)]
    F = lift_family(graph_family("spanning-trees", 3, edges), 2)
    assert count_members(F) == 4
    assert count_members(graph_family("spanning-trees", 3, lift_graph(3, edges, 2).edges)) == 4


@pytest.mark.parametrize("kind", ["forests", "spanning-trees", "matchings", "perfect-matchings", "st-paths"])
def test_graph_family_counts_survive_lifting(kind):
    nodes, edges = 4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]
    for k in (1, 2):
        lifted = count_members(lift_family(graph_family(kind, nodes, edges), k))
        direct = count_members(graph_family(kind, nodes, lift_graph(nodes, edges, k).edges))
        assert lifted == direct


def test_lifted_properties_preserved():
    objs = [coverage([{0, 1}, {1, 2}, {2}, {0}]), modular([1, 0, 2, 1]), coverage([{0}, {1}, {0, 1}, {2}])]
    f = lifted_function(objs)
    assert check_submodular(f, 12) and check_monotone(f, 12)
    cut = lifted_function([graph_cut(4, [(0, 1), (2, 3)]), graph_cut(4, [(1, 2)])])
    assert check_submodular(cut, 8)
    assert not check_monotone(cut, 8)


def test_lifted_bases_and_agents():
    B = bases_of(partition_matroid(4, [[0, 1], [2, 3]], [1, 1]))
    assert check_base_family(lift_family(B, 2))
    H = lift_agent_families([uniform_matroid(3, 1), partition_matroid(3, [[0, 1], [2]], [1, 1])])
    assert check_matroid(H)
    R = lift_agent_families([poset_ideals(3, [(0, 1)]), poset_ideals(3, [(1, 2)])])
    assert check_ring(R)


def test_crossing_check():
    assert check_crossing(proper_supersets(4, [0]))
    assert check_ring(poset_ideals(4, [(0, 1), (2, 3)]))
    # two crossing members whose union is missing
    bad = explicit_family(4, [[0, 1], [1, 2]])
    assert not check_crossing(bad)


def test_lifted_multilinear_additive():
    rng = np.random.default_rng(2)
    objs = [coverage([{0, 1}, {1, 2}, {2}]), coverage([{0}, {1, 2}, {0, 2}])]
    f = lifted_function(objs)
    for _ in range(25):
        zs = rng.random((2, 3))
        total = sum(multilinear_eval_exact(g, zs[i]) for i, g in enumerate(objs))
        assert multilinear_eval_exact(f, zs.ravel()) == pytest.approx(total, abs=1e-9)


def test_lifted_feasible_sets_are_allocations():
    inst = MasoInstance(GroundSet(3), [modular([1, 1, 1])] * 2, vertex_covers(3, K3))
    L = lift_instance(inst)
    for S in range(64):
        if L.feasible(S):
            alloc = Allocation(split(S, 3, 2))
            assert inst.is_feasible(alloc)
    assert L.element(4).agent == 1 and L.element(4).item == 1
    assert members(cov(embed([mask([0]), mask([2])], 3), 3, 2)) == [0, 2]
