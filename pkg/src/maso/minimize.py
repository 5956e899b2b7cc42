"""Monotone multi-agent minimization: MA-LE relaxation and its roundings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import (
    TOL, Allocation, FeasibleFamily, InfeasibleError, InvariantViolation, MasoInstance,
    PreconditionError, ValueOracle, compute_blocker, full, members, popcount,
    upward_closed_from_blocker, zero,
)
from .extensions import lovasz_eval, lovasz_subgradient


@dataclass
class FractionalAssignment:
    parts: np.ndarray  # shape (k, n)
    value: float | None = None
    converged: bool = True
    lower_bound: float | None = None
    moves: int = 0

    def __post_init__(self):
        self.parts = np.atleast_2d(np.asarray(self.parts, dtype=float))
        if np.any(self.parts < 0):
            raise ValueError("fractional assignment must be nonnegative")

    @property
    def k(self) -> int:
        return self.parts.shape[0]

    @property
    def aggregate(self) -> np.ndarray:
        return self.parts.sum(axis=0)

    def supports(self) -> list[int]:
        return [sum(1 << int(v) for v in np.nonzero(row > 0)[0]) for row in self.parts]

    def is_feasible(self, family: FeasibleFamily, tol: float = 1e-9) -> bool:
        return family.hits_blocker(self.aggregate, tol)

    def objective(self, objectives: Sequence[ValueOracle]) -> float:
        return float(sum(lovasz_eval(f, z) for f, z in zip(objectives, self.parts)))


@dataclass(frozen=True)
class PreAssignment:
    supports: tuple[int, ...]

    def __post_init__(self):
        seen = 0
        for V_i in self.supports:
            if V_i & seen:
                raise PreconditionError("pre-assignment supports overlap")
            seen |= V_i


@dataclass
class RoundingResult:
    algorithm: str
    seed: int | None
    allocation: Allocation
    cost: float
    feasible: bool
    fractional_value: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"algorithm": self.algorithm, "seed": self.seed, "feasible": self.feasible,
               "cost": self.cost, "fractional_value": self.fractional_value,
               "allocation": self.allocation.as_lists()}
        out.update({k: v for k, v in self.details.items() if isinstance(v, (int, float, str, bool, list))})
        return out


def _blocker_of(family: FeasibleFamily) -> list[int]:
    if family.blocker is not None:
        return family.blocker
    if not family.upward_closed:
        raise PreconditionError("MA-LE needs an upward-closed family with a blocker list")
    family.blocker = compute_blocker(family)
    return family.blocker


# --------------------------------------------------------------------------
# the relaxation


def solve_ma_le(inst: MasoInstance, eps: float | None = None, max_iters: int = 500,
                seed: int = 0) -> FractionalAssignment:
    """Minimize sum_i f_i^L(z_i) subject to z(B) >= 1 for every blocker set B.

    Kelley's cutting-plane method: f^L is the support function of the base
    polytope, so each greedy vertex gives an exact linear cut. The LP is solved
    with HiGHS; the method is deterministic and ``seed`` is accepted only for
    interface symmetry with the randomized routines.
    """
    if inst.sense != "min":
        raise PreconditionError("MA-LE is a minimization relaxation")
    for f in inst.objectives:
        if abs(f(0)) > TOL:
            raise PreconditionError(f"{f.name} is not normalized")
    blocker = _blocker_of(inst.outer)
    n, k = inst.n, inst.k
    nz = n * k
    c = np.concatenate([np.zeros(nz), np.ones(k)])
    cover_rows = []
    for B in blocker:
        row = np.zeros(nz + k)
        for i in range(k):
            for v in members(B):
                row[i * n + v] = -1.0
        cover_rows.append(row)
    cuts: list[np.ndarray] = []

    def add_cut(i, s):
        row = np.zeros(nz + k)
        row[i * n:(i + 1) * n] = s
        row[nz + i] = -1.0
        cuts.append(row)

    for i, f in enumerate(inst.objectives):
        add_cut(i, lovasz_subgradient(f, np.ones(n)))
        add_cut(i, lovasz_subgradient(f, np.arange(n, 0, -1, dtype=float)))

    bounds = [(0.0, 1.0)] * nz + [(0.0, None)] * k
    best_z, best_val = None, math.inf
    lower = -math.inf
    converged = False
    for _ in range(max_iters):
        A = np.array(cover_rows + cuts)
        b = np.concatenate([-np.ones(len(cover_rows)), np.zeros(len(cuts))])
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if res.status == 2:
            raise InfeasibleError("MA-LE relaxation is infeasible")
        if res.status != 0:
            raise RuntimeError(f"LP solver failed: {res.message}")
        x = np.clip(res.x, 0.0, None)
        zs = x[:nz].reshape(k, n)
        lower = max(lower, float(res.fun))
        vals = [lovasz_eval(f, zs[i]) for i, f in enumerate(inst.objectives)]
        total = float(sum(vals))
        if total < best_val:
            best_val, best_z = total, zs.copy()
        if eps is None:
            eps = 1e-4 * max(best_val, 1e-8)
        if best_val - lower <= eps:
            converged = True
            break
        added = False
        for i, f in enumerate(inst.objectives):
            if vals[i] > x[nz + i] + 1e-12:
                add_cut(i, lovasz_subgradient(f, zs[i]))
                added = True
        if not added:
            converged = True
            break
    return FractionalAssignment(best_z, value=best_val, converged=converged, lower_bound=lower)


# --------------------------------------------------------------------------
# pre-assignments


def g_function(inst: MasoInstance, pre: PreAssignment | Sequence[int]) -> ValueOracle:
    """g(S) = sum_i f_i(S & V_i) for pairwise disjoint supports V_i."""
    if not isinstance(pre, PreAssignment):
        pre = PreAssignment(tuple(pre))
    if len(pre.supports) != inst.k:
        raise PreconditionError("need one support per agent")
    objectives, supports = inst.objectives, pre.supports

    def fn(S):
        return sum(f(S & V_i) for f, V_i in zip(objectives, supports))

    return ValueOracle(fn, inst.n, monotone=all(f.claims_monotone for f in objectives),
                       submodular=all(f.claims_submodular for f in objectives),
                       normalized=all(f.claims_normalized for f in objectives), name="g")


def split_by_supports(S: int, supports: Sequence[int]) -> Allocation:
    return Allocation([S & V_i for V_i in supports])


def disjointify_max(z: FractionalAssignment, k: int | None = None) -> FractionalAssignment:
    """Give every item to its heaviest agent (lowest index on ties), scaled by k."""
    k = z.k if k is None else k
    out = np.zeros_like(z.parts)
    for v in range(z.parts.shape[1]):
        col = z.parts[:, v]
        if col.max() <= 0:
            continue
        winner = int(np.argmax(col))
        out[winner, v] = k * col[winner]
    return FractionalAssignment(out)


# --------------------------------------------------------------------------
# single-agent rounders: (g, z, family) -> (set, factor)

SARounder = Callable[[ValueOracle, np.ndarray, FeasibleFamily], tuple[int, float]]


def threshold_rounder(beta: float) -> SARounder:
    """Keep {v : beta z(v) >= 1}; in F whenever F has a beta-bounded blocker."""
    def rounder(g, z, family):
        S = sum(1 << int(v) for v in np.nonzero(beta * z >= 1 - 1e-9)[0])
        if not family(S):
            raise InvariantViolation("threshold set is not feasible; blocker bound too small")
        return S, float(beta)
    rounder.__name__ = f"threshold({beta})"
    return rounder


def exact_rounder(g, z, family) -> tuple[int, float]:
    """Exact single-agent minimization by scanning the family (desk scale)."""
    best, best_val = None, math.inf
    for S in family.members():
        val = g(S)
        if val < best_val - 1e-12:
            best, best_val = S, val
    if best is None:
        raise InfeasibleError("family is empty")
    return best, 1.0


def k_approx_round(inst: MasoInstance, z: FractionalAssignment | None = None,
                   sa_rounder: SARounder = exact_rounder, seed: int = 0) -> RoundingResult:
    """MA-LE, heaviest-agent pre-assignment, then a single-agent rounding of g."""
    if z is None:
        z = solve_ma_le(inst, seed=seed)
    frac = z.objective(inst.objectives) if z.value is None else z.value
    zhat = disjointify_max(z, inst.k)
    supports = zhat.supports()
    g = g_function(inst, supports)
    S, alpha = sa_rounder(g, zhat.aggregate, inst.outer)
    covered = 0
    for V_i in supports:
        covered |= V_i
    alloc = split_by_supports(S, supports)
    # elements outside every support cost nothing under g; hand them to agent 0 only if needed
    if S & ~covered:
        parts = list(alloc.parts)
        parts[0] |= S & ~covered
        alloc = Allocation(parts)
    cost = inst.cost(alloc)
    return RoundingResult("k_approx", seed, alloc, cost, inst.is_feasible(alloc), frac,
                          {"alpha": alpha, "disjoint_value": zhat.objective(inst.objectives)})


# --------------------------------------------------------------------------
# CE-Rounding


@dataclass
class CEResult:
    allocation: Allocation
    iterations: int
    before_uncross: list[int]
    uncross_moves: int
    h_increases: int
    g_increases: int


def _ce_round(zs: np.ndarray, gs: Sequence[ValueOracle], h: ValueOracle,
              in_family: Callable[[int], bool], iter_cap: int,
              rng: np.random.Generator) -> CEResult:
    k, n = zs.shape
    S = 0
    parts = [0] * k
    it = 0
    while not in_family(S):
        if it >= iter_cap:
            raise InfeasibleError("coverage stalled: iteration cap exceeded")
        i = int(rng.integers(0, k))
        theta = 1.0 - rng.random()  # uniform on (0, 1]
        pick = 0
        for v in np.nonzero(zs[i] >= theta)[0]:
            pick |= 1 << int(v)
        parts[i] |= pick
        S |= pick
        it += 1
    before = list(parts)
    moves = h_up = g_up = 0
    final = list(parts)
    changed = True
    while changed:
        changed = False
        for i in range(k):
            for j in range(k):
                if i == j or not final[i] & final[j]:
                    continue
                Si, Sj = final[i], final[j]
                h_before = h(Si) + h(Sj)
                g_before = gs[i](Si) + gs[j](Sj)
                if h(Si) + h(Sj & ~Si) <= h(Si) + h(Sj):
                    final[j] = Sj & ~Si
                else:
                    final[i] = Si & ~Sj
                moves += 1
                if h(final[i]) + h(final[j]) > h_before + TOL:
                    h_up += 1
                if gs[i](final[i]) + gs[j](final[j]) > g_before + TOL:
                    g_up += 1
                changed = True
    return CEResult(Allocation(final), it, before, moves, h_up, g_up)


def ce_iteration_cap(k: int, u_size: int) -> int:
    return int(math.ceil(64 * k * (math.log(max(u_size, 1)) + 1)))


def _decomposition(inst: MasoInstance) -> tuple[list[ValueOracle], ValueOracle]:
    if inst.decomposition is not None:
        return inst.decomposition
    return list(inst.objectives), zero(inst.n)


def ce_rounding(inst: MasoInstance, z: FractionalAssignment | np.ndarray, U: int, seed: int,
                family: FeasibleFamily | None = None) -> CEResult:
    """Randomized level-set rounding followed by uncrossing with respect to h.

    Needs U in F (F upward closed) and sum_i z_i >= chi(U). The objectives are
    split as g_i + h through ``inst.decomposition`` (h = 0 when absent).
    """
    family = inst.outer if family is None else family
    zs = z.parts if isinstance(z, FractionalAssignment) else np.atleast_2d(np.asarray(z, float))
    if not family(U):
        raise PreconditionError("target set U is not in the family")
    agg = zs.sum(axis=0)
    for v in members(U):
        if agg[v] < 1 - 1e-9:
            raise PreconditionError(f"fractional assignment does not cover element {v} of U")
    gs, h = _decomposition(inst)
    rng = np.random.default_rng(seed)
    return _ce_round(zs, gs, h, family, ce_iteration_cap(inst.k, popcount(U)), rng)


def ce_round_instance(inst: MasoInstance, z: FractionalAssignment, U: int, seed: int) -> RoundingResult:
    res = ce_rounding(inst, z, U, seed)
    cost = inst.cost(res.allocation)
    frac = z.objective(inst.objectives)
    return RoundingResult("ce_rounding", seed, res.allocation, cost, inst.is_feasible(res.allocation),
                          frac, {"iterations": res.iterations, "uncross_moves": res.uncross_moves})


# --------------------------------------------------------------------------
# fracture / expand / return


def _bin_index(x: float) -> int:
    """j with x in (2^-(j+1), 2^-j], for 0 < x <= 1."""
    j = max(int(math.floor(-math.log2(x))), 0)
    while j > 0 and 2.0 ** (-j) < x:
        j -= 1
    while 2.0 ** (-(j + 1)) >= x:
        j += 1
    return j


def fracture_expand_return(inst: MasoInstance, z: FractionalAssignment,
                           sa_rounder: SARounder, seed: int) -> RoundingResult:
    """Make supports disjoint at a polylog loss, then round g with ``sa_rounder``.

    Small elements (aggregate at most 1/(2n)) are dropped and the rest doubled;
    each aggregate is rounded up to a power of 1/2 (capped at 1); each bin of
    equal aggregate is scaled to a cover, rounded by CE-Rounding with h = 0 and
    scaled back; finally the single-agent rounder acts on g.
    """
    n, k = inst.n, inst.k
    frac = z.objective(inst.objectives)
    zs = z.parts.copy()
    agg = zs.sum(axis=0)
    small = agg <= 1.0 / (2 * n)
    zs[:, small] = 0.0
    zs *= 2.0
    agg = zs.sum(axis=0)
    if not np.any(agg > 0) and not inst.outer(0):
        raise InfeasibleError("nothing left after pruning small elements")

    uniform = np.zeros_like(zs)
    bins: dict[int, int] = {}
    for v in np.nonzero(agg > 0)[0]:
        v = int(v)
        level = min(agg[v], 1.0)
        j = _bin_index(level)
        uniform[:, v] = zs[:, v] * (2.0 ** (-j) / agg[v])
        bins[j] = bins.get(j, 0) | (1 << v)
    uniform_value = float(sum(lovasz_eval(f, uniform[i]) for i, f in enumerate(inst.objectives)))
    if uniform_value > 4 * frac + 1e-9 * max(1.0, frac):
        raise InvariantViolation(f"uniform solution {uniform_value} exceeds 4 x {frac}")

    rng = np.random.default_rng(seed)
    zero_h = zero(n)
    returned = np.zeros_like(zs)
    supports = [0] * k
    ce_iters = 0
    for j in sorted(bins):
        Z = bins[j]
        r = 2.0 ** j
        expanded = np.zeros_like(zs)
        cols = members(Z)
        expanded[:, cols] = r * uniform[:, cols]
        res = _ce_round(expanded, inst.objectives, zero_h, lambda S, Z=Z: S & Z == Z,
                        ce_iteration_cap(k, popcount(Z)), rng)
        ce_iters += res.iterations
        for i, part in enumerate(res.allocation.parts):
            part &= Z
            supports[i] |= part
            for v in members(part):
                returned[i, v] += 1.0 / r
    zhat = FractionalAssignment(returned)
    g = g_function(inst, supports)
    S, alpha = sa_rounder(g, zhat.aggregate, inst.outer)
    covered = 0
    for V_i in supports:
        covered |= V_i
    if S & ~covered:
        raise InvariantViolation("single-agent rounder picked elements outside the pre-assignment")
    alloc = split_by_supports(S, supports)
    feasible = inst.is_feasible(alloc)
    if not feasible:
        raise InfeasibleError("rounded allocation is not feasible")
    cost = inst.cost(alloc)
    return RoundingResult("fracture_expand_return", seed, alloc, cost, feasible, frac,
                          {"uniform_value": uniform_value, "bins": len(bins), "alpha": alpha,
                           "returned_value": zhat.objective(inst.objectives),
                           "ce_iterations": ce_iters})


# --------------------------------------------------------------------------
# bounded blockers


def bounded_blocker_round(inst: MasoInstance, z: FractionalAssignment, beta: int | None = None,
                          seed: int = 0) -> RoundingResult:
    """Threshold the beta-scaled aggregate to get U in F, then CE-round beta z onto U."""
    beta = inst.outer.beta if beta is None else beta
    if beta is None:
        raise PreconditionError("family has no blocker bound")
    agg = z.aggregate
    U = sum(1 << int(v) for v in np.nonzero(beta * agg >= 1 - 1e-9)[0])
    if not inst.outer(U):
        raise InvariantViolation("U is not in F: the blocker bound is wrong")
    scaled = FractionalAssignment(beta * z.parts)
    res = ce_rounding(inst, scaled, U, seed)
    cost = inst.cost(res.allocation)
    return RoundingResult("bounded_blocker", seed, res.allocation, cost,
                          inst.is_feasible(res.allocation), z.objective(inst.objectives),
                          {"U": members(U), "beta": beta, "iterations": res.iterations})


def symmetrize_h(h: ValueOracle) -> ValueOracle:
    """h'(S) = h(S) + h(V - S): symmetric, and submodular when h is."""
    V = full(h.n)
    return ValueOracle(lambda S: h(S) + h(V & ~S), h.n, monotone=False,
                       submodular=h.claims_submodular, normalized=False, name=f"sym({h.name})")


# --------------------------------------------------------------------------
# crossing families


def crossing_candidates(family: FeasibleFamily) -> list[int]:
    """Minimal sets of every nonempty F_uv, plus V and the empty set when present.

    Every member of F is empty, V, or lies in some F_uv, so the best solution
    over these candidates is optimal for monotone objectives.
    """
    n = family.n
    mem = family.members()
    if not mem:
        raise InfeasibleError("crossing family is empty")
    V = full(n)
    cands = []
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            M = None
            for A in mem:
                if A >> u & 1 and not A >> v & 1:
                    M = A if M is None else M & A
            if M is not None and M not in cands:
                cands.append(M)
    for special in (V, 0):
        if family(special) and special not in cands:
            cands.append(special)
    return cands


def crossing_family_solve(inst: MasoInstance, seed: int = 0) -> RoundingResult:
    """Best facility-location allocation over the minimal sets of the F_uv."""
    if inst.n > 16:
        raise PreconditionError("crossing solver enumerates F; n <= 16")
    best: RoundingResult | None = None
    rng = np.random.default_rng(seed)
    for M in crossing_candidates(inst.outer):
        if not inst.outer(M):
            raise InvariantViolation("minimal set of a ring family is not a member")
        if M == 0:
            alloc = Allocation([0] * inst.k)
            frac = 0.0
        else:
            cover = upward_closed_from_blocker(inst.n, [1 << v for v in members(M)])
            sub = MasoInstance(inst.ground, inst.objectives, cover, sense="min")
            z = solve_ma_le(sub)
            res = _ce_round(z.parts, inst.objectives, zero(inst.n), cover,
                            ce_iteration_cap(inst.k, popcount(M)), rng)
            alloc = Allocation([p & M for p in res.allocation.parts])
            frac = z.value
        cost = inst.cost(alloc)
        if best is None or cost < best.cost - 1e-12:
            best = RoundingResult("crossing_family", seed, alloc, cost, inst.is_feasible(alloc), frac,
                                  {"M": members(M)})
    return best
