"""Multi-agent maximization: continuous greedy on the MA multilinear relaxation,
support disjointification, pipage rounding, and the lifted greedy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import (
    Allocation, CapacityError, FeasibleFamily, InvariantViolation, MasoInstance,
    PreconditionError, ValueOracle, members, popcount, submasks,
)
from .extensions import (
    MULTILINEAR_CAP, as_point, multilinear_eval_exact, multilinear_gradient, multilinear_partial,
)
from .lifting import lift_instance, p_system_ratio, split
from .minimize import FractionalAssignment, g_function, split_by_supports

DEFAULT_STEPS = 100


@dataclass
class PolytopeOracle:
    """A relaxation P(F) with a linear maximization oracle over it.

    ``parts``/``capacities`` describe partition and uniform matroids (the
    full hypercube is the partition into singletons with capacity 1).
    """
    n: int
    kind: str
    linear_max: Callable[[np.ndarray], np.ndarray]
    membership: Callable[[np.ndarray], bool]
    downward_closed: bool = True
    parts: list[int] | None = None
    capacities: list[int] | None = None
    family: FeasibleFamily | None = None


def _top_elements(w: np.ndarray, candidates: list[int], cap: int) -> list[int]:
    positive = [v for v in candidates if w[v] > 0]
    positive.sort(key=lambda v: (-w[v], v))
    return positive[:cap]


def partition_polytope(family: FeasibleFamily) -> PolytopeOracle:
    if family.parts is None:
        raise PreconditionError("family is not a partition or uniform matroid")
    parts, caps = family.parts, family.capacities
    n = family.n

    def linear_max(w):
        y = np.zeros(n)
        for p, c in zip(parts, caps):
            for v in _top_elements(w, members(p), c):
                y[v] = 1.0
        return y

    def membership(z):
        z = np.asarray(z, float)
        if np.any(z < -1e-9) or np.any(z > 1 + 1e-9):
            return False
        return all(sum(z[v] for v in members(p)) <= c + 1e-9 for p, c in zip(parts, caps))

    return PolytopeOracle(n, "partition-matroid", linear_max, membership, True, parts, caps, family)


def hypercube(n: int) -> PolytopeOracle:
    from .core import full_powerset
    return partition_polytope(full_powerset(n))


def matroid_polytope(family: FeasibleFamily) -> PolytopeOracle:
    """General matroid polytope: greedy linear maximization, exhaustive rank membership."""
    n = family.n

    def linear_max(w):
        y = np.zeros(n)
        S = 0
        for v in sorted(range(n), key=lambda v: (-w[v], v)):
            if w[v] <= 0:
                break
            if family(S | (1 << v)):
                S |= 1 << v
                y[v] = 1.0
        return y

    rank_cache: dict[int, int] = {}

    def rank(U):
        if U not in rank_cache:
            rank_cache[U] = max(popcount(T) for T in submasks(U) if family(T))
        return rank_cache[U]

    def membership(z):
        if n > 14:
            raise CapacityError("matroid polytope membership enumerates 2^n sets")
        z = np.asarray(z, float)
        if np.any(z < -1e-9):
            return False
        return all(sum(z[v] for v in members(U)) <= rank(U) + 1e-9 for U in range(1, 1 << n))

    return PolytopeOracle(n, "matroid", linear_max, membership, True, family=family)


def box(n: int, cap: float) -> PolytopeOracle:
    """{0 <= z <= cap}; its integral points are the sets of 2^V when cap >= 1."""
    def linear_max(w):
        return np.where(np.asarray(w) > 0, cap, 0.0)

    def membership(z):
        z = np.asarray(z, float)
        return bool(np.all(z >= -1e-9) and np.all(z <= cap + 1e-9))

    return PolytopeOracle(n, "box", linear_max, membership, True,
                          parts=[1 << v for v in range(n)], capacities=[1] * n)


@dataclass
class MaxResult:
    algorithm: str
    seed: int | None
    allocation: Allocation
    value: float
    feasible: bool
    fractional_value: float | None = None
    factor_claimed: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"algorithm": self.algorithm, "seed": self.seed, "feasible": self.feasible,
               "value": self.value, "fractional_value": self.fractional_value,
               "factor_claimed": self.factor_claimed, "allocation": self.allocation.as_lists()}
        out.update({k: v for k, v in self.details.items() if isinstance(v, (int, float, str, bool, list))})
        return out


def ma_multilinear_value(inst: MasoInstance, zs: np.ndarray) -> float:
    """sum_i f_i^M(z_i), which equals the lifted f^M on the stacked point."""
    return float(sum(multilinear_eval_exact(f, zs[i]) for i, f in enumerate(inst.objectives)))


def _mc_gradient(f: ValueOracle, z: np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    grad = np.zeros(f.n)
    draws = rng.random((samples, f.n)) < z
    for row in draws:
        R = sum(1 << int(v) for v in np.nonzero(row)[0])
        for v in range(f.n):
            grad[v] += f(R | (1 << v)) - f(R & ~(1 << v))
    return grad / samples


def continuous_greedy_ma(inst: MasoInstance, P: PolytopeOracle, steps: int = DEFAULT_STEPS,
                         seed: int = 0, samples: int | None = None) -> FractionalAssignment:
    """T-step continuous greedy over W = {(z_1..z_k) : sum_i z_i in P}.

    A linear maximization over W sends each item's weight to its best agent
    (lowest index on ties) and then maximizes over P. Exact gradients are used
    unless ``samples`` asks for Monte-Carlo estimates.
    """
    if not all(f.claims_monotone for f in inst.objectives):
        raise PreconditionError("continuous greedy needs monotone objectives; use nonmonotone_slot")
    if samples is None and inst.n > MULTILINEAR_CAP:
        raise CapacityError("exact gradients need n <= 20; pass samples for Monte-Carlo mode")
    return _ascent(inst, P, steps, seed, samples, positive_only=False)


def _ascent(inst, P, steps, seed, samples, positive_only):
    k, n = inst.k, inst.n
    zs = np.zeros((k, n))
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        if samples is None:
            grads = np.array([multilinear_gradient(f, np.clip(zs[i], 0, 1))
                              for i, f in enumerate(inst.objectives)])
        else:
            grads = np.array([_mc_gradient(f, np.clip(zs[i], 0, 1), samples, rng)
                              for i, f in enumerate(inst.objectives)])
        best_agent = np.argmax(grads, axis=0)
        weights = grads[best_agent, np.arange(n)]
        if positive_only:
            weights = np.where(weights > 0, weights, 0.0)
        y = P.linear_max(weights)
        for v in np.nonzero(y > 0)[0]:
            zs[best_agent[v], v] += y[v] / steps
    zs = np.clip(zs, 0.0, 1.0)
    value = ma_multilinear_value(inst, zs) if n <= MULTILINEAR_CAP else None
    return FractionalAssignment(zs, value=value)


def disjointify_supports(z: FractionalAssignment, inst: MasoInstance, check: bool = True) -> FractionalAssignment:
    """Move each shared item wholly to one of two holders, whichever end is better.

    The objective is linear in the amount moved between two agents, so one of
    the two endpoints never loses value. Items are processed in ascending
    order, agent pairs lowest first; ties go to the lower agent.
    """
    zs = z.parts.copy()
    k, n = zs.shape
    moves = 0
    current = ma_multilinear_value(inst, zs) if check else None
    for v in range(n):
        while True:
            holders = [i for i in range(k) if zs[i, v] > 0]
            if len(holders) < 2:
                break
            i, j = holders[0], holders[1]
            pi = multilinear_partial(inst.objectives[i], zs[i], v)
            pj = multilinear_partial(inst.objectives[j], zs[j], v)
            to_i = zs[j, v] * (pi - pj)
            to_j = zs[i, v] * (pj - pi)
            if to_i >= to_j:
                zs[i, v] += zs[j, v]
                zs[j, v] = 0.0
            else:
                zs[j, v] += zs[i, v]
                zs[i, v] = 0.0
            moves += 1
            if check:
                new = ma_multilinear_value(inst, zs)
                if new < current - 1e-9:
                    raise InvariantViolation(f"support move lowered the objective {current} -> {new}")
                current = new
    value = ma_multilinear_value(inst, zs) if n <= MULTILINEAR_CAP else None
    return FractionalAssignment(zs, value=value, moves=moves)


def _snap(z: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    z = np.where(np.abs(z) < eps, 0.0, z)
    return np.where(np.abs(z - 1) < eps, 1.0, z)


def round_partition_matroid(z, P: PolytopeOracle, f: ValueOracle, seed: int = 0) -> int:
    """Pipage rounding inside each part of a partition (or uniform) matroid.

    Two fractional coordinates of a part are pushed along e_u - e_v to the
    better of the two endpoints; f^M is convex along that line, so value never
    drops. A lone fractional coordinate goes to its better feasible endpoint.
    Deterministic; ``seed`` is accepted for interface symmetry.
    """
    if P.parts is None:
        raise PreconditionError("pipage rounding here supports partition/uniform matroids only")
    z = _snap(as_point(z, f.n, unit=True).copy())
    if not P.membership(z):
        raise PreconditionError("point is outside the polytope")
    start = multilinear_eval_exact(f, z)
    for part, cap in zip(P.parts, P.capacities):
        elems = members(part)
        while True:
            frac = [v for v in elems if 0 < z[v] < 1]
            if not frac:
                break
            if len(frac) >= 2:
                u, v = frac[0], frac[1]
                up = z.copy()
                d = min(1 - z[u], z[v])
                up[u] += d
                up[v] -= d
                down = z.copy()
                d = min(z[u], 1 - z[v])
                down[u] -= d
                down[v] += d
                z = _snap(up if multilinear_eval_exact(f, up) >= multilinear_eval_exact(f, down) else down)
            else:
                u = frac[0]
                hi, lo = z.copy(), z.copy()
                hi[u], lo[u] = 1.0, 0.0
                room = sum(z[w] for w in elems if w != u) + 1 <= cap + 1e-9
                if room and multilinear_eval_exact(f, hi) >= multilinear_eval_exact(f, lo):
                    z = hi
                else:
                    z = lo
    S = sum(1 << v for v in range(f.n) if z[v] > 0.5)
    if f(S) < start - 1e-9:
        raise InvariantViolation(f"rounding lost value: {f(S)} < {start}")
    return S


def _round_and_split(inst: MasoInstance, P: PolytopeOracle, zhat: FractionalAssignment, seed: int):
    supports = zhat.supports()
    g = g_function(inst, supports)
    S = round_partition_matroid(zhat.aggregate, P, g, seed)
    alloc = split_by_supports(S, supports)
    value = inst.cost(alloc)
    if abs(value - g(S)) > 1e-9:
        raise InvariantViolation("split value differs from g on the rounded set")
    return alloc, value, g


def _feasible(inst: MasoInstance, P: PolytopeOracle, alloc: Allocation) -> bool:
    if P.family is not None:
        return inst.is_feasible(alloc) and P.family(alloc.union)
    return inst.is_feasible(alloc)


def maximize_pipeline(inst: MasoInstance, P: PolytopeOracle, steps: int = DEFAULT_STEPS,
                      seed: int = 0) -> MaxResult:
    z = continuous_greedy_ma(inst, P, steps, seed)
    zhat = disjointify_supports(z, inst)
    alloc, value, _ = _round_and_split(inst, P, zhat, seed)
    return MaxResult("maximize_pipeline", seed, alloc, value, _feasible(inst, P, alloc), z.value,
                     1 - 1 / math.e, {"disjoint_value": zhat.value, "moves": zhat.moves})


def lifted_greedy(inst: MasoInstance, seed: int = 0, p: Fraction | None = None) -> MaxResult:
    """Greedy on the lifted ground set under F' and H; ties go to the lowest lifted index."""
    lifted = lift_instance(inst)
    f = lifted.f
    N = inst.n * inst.k
    S = 0
    while True:
        base = f(S)
        best, best_gain = None, 0.0
        for e in range(N):
            if S >> e & 1 or not lifted.feasible(S | (1 << e)):
                continue
            gain = f(S | (1 << e)) - base
            if gain > best_gain + 1e-12:
                best, best_gain = e, gain
        if best is None:
            break
        S |= 1 << best
    alloc = Allocation(split(S, inst.n, inst.k))
    claimed = None if p is None else float(1 / (p + 1))
    return MaxResult("lifted_greedy", seed, alloc, inst.cost(alloc), inst.is_feasible(alloc),
                     None, claimed, {"lifted_set": members(S)})


def outer_p(inst: MasoInstance) -> Fraction:
    return p_system_ratio(inst.outer)


def heuristic_ascent(inst: MasoInstance, P: PolytopeOracle, seed: int = 0,
                     steps: int = DEFAULT_STEPS) -> FractionalAssignment:
    """Frank-Wolfe style ascent on positive gradient parts. No certified factor."""
    return _ascent(inst, P, steps, seed, None, positive_only=True)


def nonmonotone_slot(inst: MasoInstance, P: PolytopeOracle, sa_solver=None, seed: int = 0,
                     factor: float | None = None) -> MaxResult:
    """Pluggable continuous solver followed by the same disjointify and rounding steps.

    ``sa_solver(inst, P, seed)`` returns a FractionalAssignment with the sum
    of parts in P; ``factor`` is the approximation factor it guarantees on W.
    """
    if not P.downward_closed:
        raise PreconditionError("the nonmonotone slot needs a downwards closed polytope")
    solver = sa_solver or heuristic_ascent
    z = solver(inst, P, seed)
    if not P.membership(z.aggregate):
        raise InvariantViolation("continuous solver left the polytope")
    zhat = disjointify_supports(z, inst)
    alloc, value, _ = _round_and_split(inst, P, zhat, seed)
    heuristic = factor is None
    return MaxResult("nonmonotone_slot", seed, alloc, value, _feasible(inst, P, alloc),
                     ma_multilinear_value(inst, z.parts), factor,
                     {"heuristic": heuristic, "solver": getattr(solver, "__name__", "solver")})


def monotone_solver(inst: MasoInstance, P: PolytopeOracle, seed: int = 0) -> FractionalAssignment:
    return continuous_greedy_ma(inst, P, DEFAULT_STEPS, seed)
