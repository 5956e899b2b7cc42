"""Lifting a multi-agent instance to the agent x item space, plus invariance checkers.

A lifted element (i, v) has index ``i * n + v`` (agent-major), so the part of
agent i of a lifted bitset is ``(S >> i*n) & (2**n - 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    EXHAUSTIVE_CAP, MAX_N, Allocation, CapacityError, FeasibleFamily, GroundSet,
    MasoInstance, ValueOracle, Verdict, all_masks, full, graphic_matroid, matchings,
    members, popcount, popcounts, submasks,
)


@dataclass(frozen=True)
class LiftedElement:
    agent: int
    item: int

    def index(self, n: int) -> int:
        return self.agent * n + self.item


def split(S: int, n: int, k: int) -> list[int]:
    low = full(n)
    return [(S >> (i * n)) & low for i in range(k)]


def embed(parts: Sequence[int] | Allocation, n: int) -> int:
    if isinstance(parts, Allocation):
        parts = parts.parts
    S = 0
    for i, p in enumerate(parts):
        S |= p << (i * n)
    return S


def unlift(S: int, n: int, k: int) -> Allocation:
    """Lifted set -> per-agent parts. The parts need not be disjoint in general,
    so overlapping lifted sets raise; use :func:`split` for raw parts."""
    return Allocation(split(S, n, k))


def cov(S: int, n: int, k: int) -> int:
    out = 0
    for p in split(S, n, k):
        out |= p
    return out


def lift_family(F: FeasibleFamily, k: int) -> FeasibleFamily:
    """F' = {S : cov(S) in F and |S| = |cov(S)|}."""
    n = F.n
    if n * k > MAX_N:
        raise CapacityError(f"lifted ground set {n * k} exceeds {MAX_N}")

    def contains(S):
        c = cov(S, n, k)
        return popcount(c) == popcount(S) and F(c)

    kind = F.kind if F.kind in ("matroid-independent-sets", "matroid-bases", "p-system") else "explicit-list"
    return FeasibleFamily(n * k, contains, kind, spec={"type": "lifted", "k": k, "family": F.spec},
                          downward_closed=F.downward_closed)


def lift_agent_families(families: Sequence[FeasibleFamily]) -> FeasibleFamily:
    """H = {S : S_i in F_i for every agent i}."""
    n, k = families[0].n, len(families)

    def contains(S):
        return all(F(p) for F, p in zip(families, split(S, n, k)))

    kinds = {F.kind for F in families}
    if kinds <= {"matroid-independent-sets", "full-powerset"}:
        kind = "matroid-independent-sets"
    elif kinds <= {"ring", "trivial-V", "full-powerset"}:
        kind = "ring"
    else:
        kind = "explicit-list"
    return FeasibleFamily(n * k, contains, kind,
                          spec={"type": "lifted-agents", "families": [F.spec for F in families]},
                          downward_closed=all(F.downward_closed for F in families))


@dataclass
class LiftedInstance:
    lifted_ground: GroundSet
    f: ValueOracle
    outer_lifted: FeasibleFamily
    agent_lifted: FeasibleFamily
    n: int
    k: int

    def feasible(self, S: int) -> bool:
        return self.outer_lifted(S) and self.agent_lifted(S)

    def combined(self) -> FeasibleFamily:
        """F' intersected with H."""
        return FeasibleFamily(self.n * self.k, self.feasible, "explicit-list",
                              downward_closed=self.outer_lifted.downward_closed and self.agent_lifted.downward_closed)

    def element(self, index: int) -> LiftedElement:
        return LiftedElement(index // self.n, index % self.n)


def lifted_function(objectives: Sequence[ValueOracle]) -> ValueOracle:
    n, k = objectives[0].n, len(objectives)
    if n * k > MAX_N:
        raise CapacityError(f"lifted ground set {n * k} exceeds {MAX_N}")

    def fn(S):
        return sum(f(p) for f, p in zip(objectives, split(S, n, k)))

    return ValueOracle(fn, n * k, monotone=all(f.claims_monotone for f in objectives),
                       submodular=all(f.claims_submodular for f in objectives),
                       normalized=all(f.claims_normalized for f in objectives), name="lifted")


def lift_instance(inst: MasoInstance) -> LiftedInstance:
    n, k = inst.n, inst.k
    if n * k > MAX_N:
        raise CapacityError(f"n*k = {n * k} exceeds the {MAX_N}-element bitset cap")
    from .core import full_powerset
    per_agent = inst.per_agent or [full_powerset(n) for _ in range(k)]
    return LiftedInstance(GroundSet(n * k), lifted_function(inst.objectives),
                          lift_family(inst.outer, k), lift_agent_families(per_agent), n, k)


# --------------------------------------------------------------------------
# structural checkers


def _n_of(family: FeasibleFamily, ground) -> int:
    if ground is None:
        return family.n
    return ground.n if isinstance(ground, GroundSet) else int(ground)


def _rank_table(ind: np.ndarray, n: int) -> np.ndarray:
    """Largest member size inside every U (-1 when U holds no member)."""
    rank = np.where(ind, popcounts(n), -1)
    # members of a downward closed family make a one-step DP exact; the loop
    # over increasing masks handles arbitrary families too
    for U in range(1 << n):
        if ind[U]:
            continue
        best = -1
        for v in members(U):
            r = rank[U & ~(1 << v)]
            if r > best:
                best = r
        rank[U] = best
    return rank


def check_matroid(family: FeasibleFamily, ground: GroundSet | int | None = None, cap: int = 16) -> Verdict:
    """Exhaustive matroid axiom check: empty set, downward closure, exchange."""
    n = _n_of(family, ground)
    if n > cap:
        raise CapacityError(f"matroid check capped at n <= {cap}")
    ind = family.indicator()
    if not ind[0]:
        return Verdict(False, (0,), "empty set is not independent")
    masks = all_masks(n)
    for v in range(n):
        has_v = masks[((masks >> v) & 1 == 1) & ind]
        bad = has_v[~ind[has_v ^ (1 << v)]]
        if bad.size:
            S = int(bad.min())
            return Verdict(False, (S, S & ~(1 << v)), "not downward closed")
    rank = _rank_table(ind, n)
    for I in np.nonzero(ind)[0].tolist():
        dead = 0
        for v in range(n):
            if not I >> v & 1 and not ind[I | (1 << v)]:
                dead |= 1 << v
        U = I | dead
        if rank[U] > popcount(I):
            J = next(T for T in submasks(U) if ind[T] and popcount(T) == rank[U])
            return Verdict(False, (I, J), "exchange axiom fails")
    return Verdict(True)


def check_base_family(family: FeasibleFamily, ground: GroundSet | int | None = None, cap: int = 16) -> Verdict:
    """Basis exchange: for A, B members and a in A-B there is b in B-A with A-a+b a member."""
    n = _n_of(family, ground)
    if n > cap:
        raise CapacityError(f"base family check capped at n <= {cap}")
    bases = family.members()
    if not bases:
        return Verdict(False, None, "no bases")
    lookup = set(bases)
    for A in bases:
        for B in bases:
            for a in members(A & ~B):
                if not any((A & ~(1 << a)) | (1 << b) in lookup for b in members(B & ~A)):
                    return Verdict(False, (A, B), "basis exchange fails")
    return Verdict(True)


def _basis_sizes(ind: np.ndarray, U: int) -> tuple[int, int] | None:
    """(min, max) size of inclusion-maximal members inside U."""
    inside = [T for T in submasks(U) if ind[T]]
    if not inside:
        return None
    inside_set = set(inside)
    sizes = []
    for T in inside:
        if not any(T2 != T and T2 & T == T for T2 in inside_set):
            sizes.append(popcount(T))
    return min(sizes), max(sizes)


def p_system_ratio(family: FeasibleFamily, ground: GroundSet | int | None = None,
                   cap: int = EXHAUSTIVE_CAP) -> Fraction:
    """max over U of (largest basis of U) / (smallest basis of U); 0/0 counts as 1."""
    n = _n_of(family, ground)
    if n > cap:
        raise CapacityError(f"p-system ratio capped at n <= {cap}")
    ind = family.indicator()
    downward = bool(ind[0]) and all(
        ind[S & ~(1 << v)] for S in np.nonzero(ind)[0].tolist() for v in members(S))
    best = Fraction(1)
    if downward:
        rank = _rank_table(ind, n)
        minb = np.full(1 << n, np.iinfo(np.int64).max)
        for I in np.nonzero(ind)[0].tolist():
            dead = 0
            for v in range(n):
                if not I >> v & 1 and not ind[I | (1 << v)]:
                    dead |= 1 << v
            size = popcount(I)
            for sub in submasks(dead):
                U = I | sub
                if size < minb[U]:
                    minb[U] = size
        for U in range(1 << n):
            lo, hi = int(minb[U]), int(rank[U])
            r = Fraction(1) if hi == 0 else Fraction(hi, lo)
            if r > best:
                best = r
        return best
    if n > 10:
        raise CapacityError("p-system ratio of a non-downward-closed family capped at n <= 10")
    for U in range(1 << n):
        sizes = _basis_sizes(ind, U)
        if sizes is None:
            continue
        lo, hi = sizes
        r = Fraction(1) if hi == 0 else Fraction(hi, lo)
        if r > best:
            best = r
    return best


def check_bases_correspondence(F: FeasibleFamily, F_lifted: FeasibleFamily, S: int, k: int) -> Verdict:
    """Basis sizes of S under F' match basis sizes of cov(S) under F (min and max)."""
    n = F.n
    if popcount(S) > 20 or n > 20:
        raise CapacityError("basis enumeration too large")
    lifted_inside = {T: F_lifted(T) for T in submasks(S)}
    base_inside = {T: F(T) for T in submasks(cov(S, n, k))}
    lifted_sizes = _sizes_from(lifted_inside)
    base_sizes = _sizes_from(base_inside)
    if lifted_sizes != base_sizes:
        return Verdict(False, (S,), f"lifted {lifted_sizes} vs original {base_sizes}")
    return Verdict(True, None, f"basis sizes {lifted_sizes}")


def _sizes_from(member_of: dict[int, bool]):
    inside = [T for T, ok in member_of.items() if ok]
    if not inside:
        return None
    sizes = [popcount(T) for T in inside if not any(T2 != T and T2 & T == T for T2 in inside)]
    return min(sizes), max(sizes)


def check_closed_under(family: FeasibleFamily, crossing_only: bool = False) -> Verdict:
    """Ring check (closure under union and intersection), or the crossing variant
    where only pairs with A-B, B-A, A&B and V-(A|B) all nonempty are required."""
    n = family.n
    V = full(n)
    mem = family.members()
    for a_i, A in enumerate(mem):
        for B in mem[a_i + 1:]:
            if crossing_only and not (A & ~B and B & ~A and A & B and V & ~(A | B)):
                continue
            if not family(A | B):
                return Verdict(False, (A, B, A | B), "union missing")
            if not family(A & B):
                return Verdict(False, (A, B, A & B), "intersection missing")
    return Verdict(True)


def check_ring(family: FeasibleFamily) -> Verdict:
    return check_closed_under(family)


def check_crossing(family: FeasibleFamily) -> Verdict:
    return check_closed_under(family, crossing_only=True)


# --------------------------------------------------------------------------
# graphs


@dataclass
class LiftedGraph:
    nodes: int
    edges: list[tuple[int, int]]
    k: int
    m: int

    def pi(self, agent: int, edge: int) -> int:
        """Lifted element (agent, edge) -> index of copy ``agent`` of ``edge``."""
        return agent * self.m + edge

    def to_json(self) -> str:
        adj: dict[int, list[list[int]]] = {v: [] for v in range(self.nodes)}
        for j, (a, b) in enumerate(self.edges):
            adj[a].append([b, j])
            adj[b].append([a, j])
        return json.dumps({"nodes": self.nodes, "k": self.k,
                           "adjacency": {str(v): nb for v, nb in adj.items()}}, sort_keys=True)


def lift_graph(nodes: int, edges: Sequence[tuple[int, int]], k: int) -> LiftedGraph:
    """Multigraph with k parallel copies of each edge, copies listed agent-major."""
    E = [(int(a), int(b)) for a, b in edges]
    return LiftedGraph(nodes, [e for _ in range(k) for e in E], k, len(E))


def graph_family(kind: str, nodes: int, edges: Sequence[tuple[int, int]], s: int = 0, t: int | None = None) -> FeasibleFamily:
    """Forests, spanning trees, matchings, perfect matchings or s-t paths of a multigraph."""
    from .core import bases_of, st_paths
    if kind == "forests":
        return graphic_matroid(nodes, edges)
    if kind == "spanning-trees":
        return bases_of(graphic_matroid(nodes, edges))
    if kind == "matchings":
        return matchings(nodes, edges)
    if kind == "perfect-matchings":
        M = matchings(nodes, edges)
        from .core import explicit_family
        return explicit_family(len(edges), [S for S in M.members() if 2 * popcount(S) == nodes])
    if kind == "st-paths":
        return st_paths(nodes, edges, s, nodes - 1 if t is None else t)
    raise ValueError(f"unknown graph family {kind!r}")


def count_members(family: FeasibleFamily) -> int:
    return int(family.indicator().sum())
