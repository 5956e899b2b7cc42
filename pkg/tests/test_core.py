import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maso.core import (
    Allocation, CapacityError, GroundSet, InfeasibleError, InvariantViolation, MasoInstance,
    PreconditionError, ValueOracle, bases_of, check_monotone, check_submodular, compute_blocker,
    concave_of_modular, coverage, eval_marginal, explicit_family, facility_location, family_from_spec,
    graph_cut, graphic_matroid, is_antichain, mask, matroid_rank, members, modular, peel_to_minimal,
    poset_ideals, scale, standard_function, sum_of, trivial_family, uniform_matroid,
    upward_closed_from_blocker, upward_closure, vertex_covers,
)

K3 = [(0, 1), (1, 2), (0, 2)]


def card(n):
    return modular([1.0] * n)


def size_squared(n):
    return ValueOracle(lambda S: float(bin(S).count("1") ** 2), n, submodular=False, name="sq")


# marginals -----------------------------------------------------------------

def test_marginal_cardinality():
    assert eval_marginal(card(2), mask([0]), 1) == 1


def test_marginal_saturated_budget():
    f = concave_of_modular([1, 1], "min-cap", 1)
    assert eval_marginal(f, mask([0]), 1) == 0


def test_marginal_coverage_contained_set():
    f = coverage([{"x", "y"}, {"y"}])
    # set 1 covers y, already covered by set 0
    assert eval_marginal(f, mask([0]), 1) == 0


def test_marginal_rejects_member():
    with pytest.raises(PreconditionError):
        eval_marginal(card(2), mask([0]), 0)


# property checkers -----------------------------------------------------------

def test_modular_is_submodular():
    assert check_submodular(card(3), 3)


def test_square_fails_with_singleton_witness():
    v = check_submodular(size_squared(2), 2)
    assert not v
    assert v.witness == (mask([0]), mask([1]))


def test_coverage_n4_submodular():
    f = coverage([{0, 1}, {1, 2}, {2, 3, 4}, {0, 4}])
    assert check_submodular(f, 4)
    # cross-check against the textbook pair definition on all 256 pairs
    for S in range(16):
        for T in range(16):
            assert f(S) + f(T) >= f(S | T) + f(S & T) - 1e-12


def test_cut_not_monotone_witness():
    f = graph_cut(2, [(0, 1)])
    v = check_monotone(f, 2)
    assert not v
    assert v.witness == (mask([0]), mask([0, 1]))
    assert f(0) < f(mask([0])) and f(mask([0, 1])) < f(mask([0]))


def test_facility_location_monotone():
    f = facility_location(np.array([[3, 1, 0], [0, 2, 5]], dtype=float))
    assert check_monotone(f, 3)
    assert check_submodular(f, 3)


def test_sampled_mode_finds_supermodularity():
    assert not check_submodular(size_squared(6), 6, mode="sampled", seed=1, trials=500)


def test_exhaustive_cap():
    with pytest.raises(CapacityError):
        check_submodular(card(15), 15)


# blockers and peeling ---------------------------------------------------------

def test_blocker_of_trivial_family():
    assert sorted(compute_blocker(trivial_family(3))) == [1, 2, 4]


def test_blocker_of_k3_covers():
    assert sorted(compute_blocker(vertex_covers(3, K3))) == sorted(mask(e) for e in K3)


def test_blocker_of_path_spanning_trees():
    # edges e01 (index 0) and e12 (index 1) of the path 0-1-2; each edge is a cut
    trees = upward_closure(bases_of(graphic_matroid(3, [(0, 1), (1, 2)])))
    assert sorted(compute_blocker(trees)) == [mask([0]), mask([1])]


def test_blocker_of_empty_family_raises():
    with pytest.raises(InfeasibleError):
        compute_blocker(explicit_family(3, []))


def test_peel_ascending_on_k3():
    F = vertex_covers(3, K3)
    # ascending scan: dropping 0 keeps a cover, then 1 and 2 are both needed
    assert members(peel_to_minimal(F, 7)) == [1, 2]


def test_peel_descending_on_k3():
    assert members(peel_to_minimal(vertex_covers(3, K3), 7, order="descending")) == [0, 1]


def test_peel_fixed_points():
    assert peel_to_minimal(vertex_covers(3, K3), mask([0, 1])) == mask([0, 1])
    assert peel_to_minimal(trivial_family(3), 7) == 7


def test_peel_rejects_nonmember():
    with pytest.raises(PreconditionError):
        peel_to_minimal(vertex_covers(3, K3), mask([0]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 15 - 1), st.integers(0, 63))
def test_peel_output_is_minimal(edge_bits, S):
    pairs = [(a, b) for a in range(6) for b in range(a + 1, 6)]
    edges = [e for j, e in enumerate(pairs) if edge_bits >> j & 1] or [(0, 1)]
    F = vertex_covers(6, edges)
    if not F(S):
        S = 63
    M = peel_to_minimal(F, S)
    assert F(M) and M & ~S == 0
    assert all(not F(M & ~(1 << v)) for v in members(M))


def test_blocker_is_antichain_and_blocks():
    F = vertex_covers(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
    B = compute_blocker(F)
    assert is_antichain(B)
    for S in range(32):
        assert F(S) == all(S & b for b in B)


# standard functions ------------------------------------------------------------

def test_standard_examples():
    assert modular([2, 3])(mask([0, 1])) == 5
    assert concave_of_modular([1, 1], "min-cap", 1)(mask([0, 1])) == 1
    assert coverage([{"x"}, {"x", "y"}])(mask([0, 1])) == 2


@pytest.mark.parametrize("f", [
    modular([1, 0, 2, 5]),
    coverage([{0}, {0, 1}, {2}, {1, 3}], {"0": 2.0, "1": 1.0, "2": 0.5, "3": 3.0}),
    facility_location(np.arange(12, dtype=float).reshape(3, 4)),
    graph_cut(4, [(0, 1), (1, 2), (2, 3)], [1.0, 2.0, 0.5]),
    matroid_rank(uniform_matroid(4, 2)),
    concave_of_modular([1, 2, 3, 4], "sqrt"),
    concave_of_modular([1, 2, 3, 4], "min-cap", 3.5),
    sum_of([modular([1, 1, 1, 1]), concave_of_modular([1, 2, 3, 4], "sqrt")]),
    scale(modular([1, 2, 3, 4]), 0.5),
], ids=lambda f: f.name)
def test_zoo_claims_and_spec_round_trip(f):
    assert check_submodular(f, f.n)
    if f.claims_monotone:
        assert check_monotone(f, f.n)
    g = standard_function(f.spec)
    assert all(f(S) == g(S) for S in range(1 << f.n))


def test_negative_values_rejected():
    with pytest.raises(ValueError):
        modular([1, -1])
    bad = ValueOracle(lambda S: -1.0, 2)
    with pytest.raises(InvariantViolation):
        bad(1)


def test_memo_cold_and_warm_agree():
    f = coverage([{0, 1}, {1, 2}, {3}])
    cold = [f(S) for S in range(8)]
    warm = [f(S) for S in range(8)]
    f.clear_cache()
    assert cold == warm == [f(S) for S in range(8)]


def test_memo_concurrent_readers():
    calls = []
    f = ValueOracle(lambda S: calls.append(S) or float(S), 6)
    threads = [threading.Thread(target=lambda: [f(S) for S in range(64)]) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert [f(S) for S in range(64)] == [float(S) for S in range(64)]


# families -----------------------------------------------------------------------

def test_family_specs_round_trip():
    fams = [
        trivial_family(4), uniform_matroid(4, 2), vertex_covers(4, [(0, 1), (2, 3)]),
        upward_closed_from_blocker(4, [[0, 1], [2]]), poset_ideals(4, [(0, 1), (1, 2)], required=[1]),
        explicit_family(3, [[0], [0, 1]]),
    ]
    for F in fams:
        G = family_from_spec(F.spec)
        assert np.array_equal(F.indicator(), G.indicator())


def test_empty_blocker_member_raises():
    with pytest.raises(InfeasibleError):
        upward_closed_from_blocker(3, [[]])


def test_ring_family_of_ideals_is_closed():
    F = poset_ideals(5, [(0, 1), (1, 3), (2, 4)])
    mem = F.members()
    for a in mem:
        for b in mem:
            assert F(a | b) and F(a & b)


# allocations and instances --------------------------------------------------------

def test_allocation_overlap_rejected():
    with pytest.raises(InvariantViolation):
        Allocation([mask([0, 1]), mask([1])])


def test_instance_feasibility_and_cost():
    inst = MasoInstance(GroundSet(3), [modular([1, 2, 3]), modular([3, 2, 1])], vertex_covers(3, K3))
    a = Allocation([mask([0]), mask([2])])
    assert inst.is_feasible(a)
    assert inst.cost(a) == 2.0
    assert not inst.is_feasible(Allocation([mask([0]), 0]))
