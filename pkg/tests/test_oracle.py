import itertools

import pytest

from maso.core import (
    Allocation, CapacityError, GroundSet, InfeasibleError, MasoInstance, coverage, explicit_family,
    full_powerset, mask, modular, trivial_family, uniform_matroid, vertex_covers,
)
from maso.lifting import lift_instance
from maso.oracle import brute_force_maso, brute_force_so, certify, describe

K3 = [(0, 1), (1, 2), (0, 2)]


def enumerate_assignments(inst):
    """Independent reference: itertools over all (k+1)^n labelings."""
    best = None
    for labels in itertools.product(range(inst.k + 1), repeat=inst.n):
        parts = [sum(1 << v for v in range(inst.n) if labels[v] == i + 1) for i in range(inst.k)]
        alloc = Allocation(parts)
        if not inst.is_feasible(alloc):
            continue
        val = inst.cost(alloc)
        if best is None or (val < best if inst.sense == "min" else val > best):
            best = val
    return best


def test_single_agent_trivial_family():
    inst = MasoInstance(GroundSet(3), [modular([1.0, 2.0, 4.0])], trivial_family(3))
    value, alloc = brute_force_maso(inst)
    assert value == 7.0 and alloc.parts == (7,)


def test_triangle_cover_two_agents():
    inst = MasoInstance(GroundSet(3), [modular([1.0] * 3), modular([1.0] * 3)], vertex_covers(3, K3))
    value, _ = brute_force_maso(inst)
    assert value == 2.0 == enumerate_assignments(inst)


def test_welfare_modular_separable():
    w1, w2 = [1.0, 5.0, 2.0], [3.0, 1.0, 2.5]
    inst = MasoInstance(GroundSet(3), [modular(w1), modular(w2)], full_powerset(3), sense="max")
    value, _ = brute_force_maso(inst)
    assert value == sum(max(a, b) for a, b in zip(w1, w2))


def test_matches_itertools_reference_with_agent_families():
    objs = [coverage([{0, 1}, {1}, {2, 3}, {3}]), coverage([{0}, {1, 2}, {3}, {0, 3}])]
    inst = MasoInstance(GroundSet(4), objs, full_powerset(4), sense="max",
                        per_agent=[uniform_matroid(4, 1), uniform_matroid(4, 2)])
    value, alloc = brute_force_maso(inst)
    assert value == enumerate_assignments(inst)
    assert inst.is_feasible(alloc)


def test_lifted_single_agent_agrees():
    objs = [coverage([{0, 1}, {1}, {2}]), modular([2.0, 1.0, 1.0])]
    inst = MasoInstance(GroundSet(3), objs, vertex_covers(3, K3))
    L = lift_instance(inst)
    assert brute_force_so(L.f, L.combined(), 6)[0] == brute_force_maso(inst)[0]


def test_ties_go_to_first_assignment():
    inst = MasoInstance(GroundSet(1), [modular([1.0]), modular([1.0])], trivial_family(1))
    _, alloc = brute_force_maso(inst)
    assert alloc.parts == (1, 0)


def test_infeasible_and_capacity():
    inst = MasoInstance(GroundSet(2), [modular([1.0, 1.0])], explicit_family(2, []))
    with pytest.raises(InfeasibleError):
        brute_force_maso(inst)
    big = MasoInstance(GroundSet(24), [modular([1.0] * 24)] * 2, trivial_family(24))
    with pytest.raises(CapacityError):
        brute_force_maso(big)


def test_certificate_ratio_and_zero_optimum():
    inst = MasoInstance(GroundSet(3), [modular([1.0] * 3), modular([1.0] * 3)], vertex_covers(3, K3))
    cert = certify(inst, Allocation([mask([0, 1, 2]), 0]))
    assert cert.feasible and cert.ratio == pytest.approx(1.5)
    bad = certify(inst, Allocation([mask([0]), 0]))
    assert not bad.feasible and bad.ratio is None
    z = MasoInstance(GroundSet(2), [modular([0.0, 0.0])], full_powerset(2), sense="max")
    cert = certify(z, Allocation([0]))
    assert cert.zero_optimum and cert.ratio is None
    assert cert.to_json()["opt_value"] == 0.0
    assert describe(Allocation([mask([0, 2]), 0])) == "{0,2} | {}"
