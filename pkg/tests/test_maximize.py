import math

import numpy as np
import pytest

from maso.core import (
    GroundSet, InvariantViolation, MasoInstance, PreconditionError, concave_of_modular, coverage,
    full_powerset, graph_cut, mask, modular, partition_matroid, uniform_matroid, zero,
)
from maso.instances import generate
from maso.extensions import multilinear_eval_exact
from maso.maximize import (
    box, continuous_greedy_ma, disjointify_supports, hypercube, lifted_greedy, ma_multilinear_value,
    matroid_polytope, maximize_pipeline, monotone_solver, nonmonotone_slot, partition_polytope,
    round_partition_matroid,
)
from maso.minimize import FractionalAssignment
from maso.oracle import brute_force_maso

FACTOR = 1 - 1 / math.e - 0.05


def max_inst(objs, family):
    return MasoInstance(GroundSet(objs[0].n), objs, family, sense="max")


# continuous greedy -------------------------------------------------------------------

def test_greedy_modular_hypercube():
    w = [1.0, 2.0, 0.5]
    inst = max_inst([modular(w)], full_powerset(3))
    z = continuous_greedy_ma(inst, hypercube(3), 50)
    assert np.allclose(z.parts, 1.0)
    assert z.value == pytest.approx(sum(w))


def test_greedy_modular_rank_one():
    w = [1.0, 3.0, 2.0]
    inst = max_inst([modular(w)], uniform_matroid(3, 1))
    z = continuous_greedy_ma(inst, partition_polytope(inst.outer), 40)
    assert np.allclose(z.parts, [[0.0, 1.0, 0.0]])
    assert z.value == pytest.approx(max(w))


def test_greedy_rejects_nonmonotone():
    inst = max_inst([graph_cut(3, [(0, 1)])], full_powerset(3))
    with pytest.raises(PreconditionError):
        continuous_greedy_ma(inst, hypercube(3))


def test_greedy_stays_in_polytope():
    inst = generate("sensor", 2, n=5, k=2, b=2)
    P = partition_polytope(inst.outer)
    z = continuous_greedy_ma(inst, P, 100)
    assert P.membership(z.aggregate)


def test_greedy_welfare_factor():
    inst = generate("welfare", 3, n=4, k=2, universe=6)
    z = continuous_greedy_ma(inst, hypercube(4), 100)
    opt, _ = brute_force_maso(inst)
    assert z.value >= FACTOR * opt


def test_matroid_polytope_linear_max_and_membership():
    from maso.core import graphic_matroid
    M = graphic_matroid(3, [(0, 1), (1, 2), (0, 2)])
    P = matroid_polytope(M)
    assert np.array_equal(P.linear_max(np.array([3.0, 2.0, 1.0])), [1, 1, 0])
    assert P.membership([2 / 3, 2 / 3, 2 / 3])
    assert not P.membership([1, 1, 0.5])


# disjointify -------------------------------------------------------------------------

def test_disjointify_already_disjoint():
    inst = max_inst([modular([1, 2]), modular([2, 1])], full_powerset(2))
    z = FractionalAssignment([[0.4, 0.0], [0.0, 0.9]])
    out = disjointify_supports(z, inst)
    assert np.array_equal(out.parts, z.parts) and out.moves == 0


def test_disjointify_moves_to_better_agent():
    inst = max_inst([modular([1.0]), modular([2.0])], full_powerset(1))
    out = disjointify_supports(FractionalAssignment([[0.3], [0.4]]), inst)
    assert np.allclose(out.parts, [[0.0], [0.7]])
    # endpoints 0.7 * 1 against 0.7 * 2
    assert out.value == pytest.approx(1.4)


def test_disjointify_tie_goes_to_first_agent():
    f = coverage([{0}, {1}])
    inst = max_inst([f, coverage([{0}, {1}])], full_powerset(2))
    out = disjointify_supports(FractionalAssignment([[0.2, 0.5], [0.6, 0.5]]), inst)
    assert out.parts[0, 0] == pytest.approx(0.8) and out.parts[0, 1] == pytest.approx(1.0)


def test_disjointify_never_decreases():
    rng = np.random.default_rng(1)
    for seed in range(20):
        inst = generate("welfare", seed, n=5, k=3)
        zs = rng.random((3, 5)) / 3
        before = ma_multilinear_value(inst, zs)
        out = disjointify_supports(FractionalAssignment(zs), inst)
        assert out.value >= before - 1e-9
        assert all((out.parts[:, v] > 0).sum() <= 1 for v in range(5))


# pipage ----------------------------------------------------------------------------------

def test_pipage_integral_point_unchanged():
    P = partition_polytope(uniform_matroid(3, 2))
    assert round_partition_matroid([1, 0, 1], P, modular([1, 1, 1])) == mask([0, 2])


def test_pipage_modular_picks_heavier():
    P = partition_polytope(uniform_matroid(2, 1))
    assert round_partition_matroid([0.5, 0.5], P, modular([1.0, 2.0])) == mask([1])


def test_pipage_budget_function():
    f = concave_of_modular([1, 1], "min-cap", 1)
    P = partition_polytope(uniform_matroid(2, 1))
    S = round_partition_matroid([0.5, 0.5], P, f)
    assert S in (mask([0]), mask([1]))
    assert f(S) == 1 >= multilinear_eval_exact(f, [0.5, 0.5]) == pytest.approx(0.75)


def test_pipage_partition_respects_caps():
    fam = partition_matroid(6, [[0, 1, 2], [3, 4, 5]], [2, 1])
    P = partition_polytope(fam)
    rng = np.random.default_rng(0)
    f = coverage([{0, 1}, {1}, {2}, {3}, {0, 4}, {5}])
    for _ in range(20):
        z = np.concatenate([rng.dirichlet([1, 1, 1]) * 2, rng.dirichlet([1, 1, 1])])
        z = np.clip(z, 0, 1)
        if not P.membership(z):
            continue
        S = round_partition_matroid(z, P, f)
        assert fam(S) and f(S) >= multilinear_eval_exact(f, z) - 1e-9


# pipelines ---------------------------------------------------------------------------------

def test_pipeline_single_agent():
    f = coverage([{0, 1}, {1, 2}, {3}, {0, 3}])
    inst = max_inst([f], uniform_matroid(4, 2))
    res = maximize_pipeline(inst, partition_polytope(inst.outer))
    opt, _ = brute_force_maso(inst)
    assert res.feasible and res.value >= FACTOR * opt


def test_pipeline_welfare_two_agents():
    for seed in range(5):
        inst = generate("welfare", seed, n=4, k=2)
        res = maximize_pipeline(inst, hypercube(4), 100, seed)
        opt, _ = brute_force_maso(inst)
        assert res.feasible and res.value >= FACTOR * opt


def test_pipeline_modular_is_exact():
    w = [[1.0, 4.0, 2.0], [3.0, 1.0, 2.5]]
    inst = max_inst([modular(w[0]), modular(w[1])], full_powerset(3))
    res = maximize_pipeline(inst, hypercube(3))
    assert res.value == pytest.approx(sum(max(a, b) for a, b in zip(*w)))


def test_lifted_greedy_examples():
    inst = max_inst([modular([3.0]), modular([1.0])], uniform_matroid(1, 1))
    res = lifted_greedy(inst)
    assert res.allocation.parts == (mask([0]), 0) and res.value == 3
    empty = max_inst([zero(3), zero(3)], full_powerset(3))
    res = lifted_greedy(empty)
    assert res.allocation.parts == (0, 0) and res.value == 0


def test_lifted_greedy_half_on_welfare():
    for seed in range(50):
        inst = generate("welfare", seed, n=3, k=2)
        res = lifted_greedy(inst, seed)
        opt, _ = brute_force_maso(inst)
        assert res.feasible and 2 * res.value >= opt - 1e-9


def test_lifted_greedy_respects_agent_families():
    inst = generate("sap", 1, n=4, k=2, capacity=1)
    res = lifted_greedy(inst)
    assert res.feasible
    assert all(bin(p).count("1") <= 1 for p in res.allocation.parts)


# nonmonotone slot -----------------------------------------------------------------------------

def test_slot_with_monotone_solver_matches_pipeline():
    inst = generate("sensor", 4, n=4, k=2, b=2)
    P = partition_polytope(inst.outer)
    a = nonmonotone_slot(inst, P, monotone_solver, seed=0, factor=1 - 1 / math.e)
    b = maximize_pipeline(inst, P, seed=0)
    assert a.allocation == b.allocation and a.value == b.value
    assert not a.details["heuristic"]


def test_slot_cut_in_half_box():
    inst = max_inst([graph_cut(4, [(0, 1), (1, 2), (2, 3)])], full_powerset(4))
    res = nonmonotone_slot(inst, box(4, 0.5), seed=0)
    assert res.feasible and res.value >= 0
    assert res.details["heuristic"] and res.factor_claimed is None


def test_slot_symmetric_cut_within_opt():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        edges = [(a, b) for a in range(4) for b in range(a + 1, 4) if rng.random() < 0.6] or [(0, 1)]
        objs = [graph_cut(4, edges, rng.integers(1, 4, len(edges)).tolist()) for _ in range(3)]
        inst = max_inst(objs, full_powerset(4))
        res = nonmonotone_slot(inst, hypercube(4), seed=seed)
        opt, _ = brute_force_maso(inst)
        assert 0 <= res.value <= opt + 1e-9


def test_slot_rejects_non_downward_polytope():
    from dataclasses import replace
    inst = max_inst([modular([1.0, 1.0])], full_powerset(2))
    P = replace(hypercube(2), downward_closed=False)
    with pytest.raises(PreconditionError):
        nonmonotone_slot(inst, P)


def test_pipage_detects_value_loss():
    # a lone fractional coordinate with no room must drop to 0; a rigged function
    # that only pays on the fractional point exposes the check
    P = partition_polytope(uniform_matroid(2, 1))
    from maso.core import ValueOracle
    f = ValueOracle(lambda S: 1.0 if S == 0b11 else 0.0, 2, submodular=False)
    with pytest.raises(InvariantViolation):
        round_partition_matroid([0.5, 0.5], P, f)
