"""Exit criteria, each runnable on its own and reporting pass/fail with a detail line."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import core
from .core import (
    GroundSet, InvariantViolation, MasoInstance, check_monotone, check_submodular,
    full, full_powerset, graphic_matroid, intersection, matchings,
    modular, partition_matroid, poset_ideals, popcount, trivial_family, uniform_matroid,
    vertex_covers, bases_of,
)
from .extensions import chi, lovasz_eval, multilinear_eval_exact
from .instances import GRAPHS, _random_cost, _random_coverage, generate, random_graph
from .lifting import (
    check_base_family, check_matroid, check_ring, count_members, graph_family, lift_agent_families,
    lift_family, lift_graph, lift_instance, lifted_function, p_system_ratio,
)
from .maximize import lifted_greedy, maximize_pipeline, partition_polytope
from .minimize import (
    FractionalAssignment, bounded_blocker_round, ce_rounding, crossing_candidates,
    crossing_family_solve, exact_rounder, fracture_expand_return, g_function, k_approx_round,
    solve_ma_le, threshold_rounder,
)
from .oracle import brute_force_maso, brute_force_so


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def function_zoo(n: int = 8, seed: int = 0) -> list[core.ValueOracle]:
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 5, size=n).astype(float).tolist()
    edges = [(a, b) for a, b in combinations(range(n), 2) if rng.random() < 0.4] or [(0, 1)]
    return [
        modular(w),
        _random_coverage(rng, n, 6),
        core.facility_location(rng.integers(0, 6, size=(4, n)).astype(float)),
        core.graph_cut(n, edges, rng.integers(1, 4, size=len(edges)).astype(float).tolist()),
        core.matroid_rank(uniform_matroid(n, 3)),
        core.matroid_rank(graphic_matroid(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3), (0, 2), (2, 4)][:n])),
        core.concave_of_modular(w, "sqrt"),
        core.concave_of_modular(w, "min-cap", 4.0),
        core.sum_of([modular(w), core.concave_of_modular(w, "sqrt")]),
        core.scale(_random_coverage(rng, n, 5), 2.5),
    ]


# --------------------------------------------------------------------------


def criterion_1(samples: int = 100) -> tuple[bool, str]:
    zoo = function_zoo(8, 0) + function_zoo(10, 1)[:4]
    worst_ext = 0.0
    fails = []
    for idx, f in enumerate(zoo):
        n = f.n
        for S in range(1 << n):
            x = chi(S, n)
            worst_ext = max(worst_ext, abs(lovasz_eval(f, x) - f(S)),
                            abs(multilinear_eval_exact(f, x) - f(S)))
        rng = np.random.default_rng(1000 + idx)
        for _ in range(samples):
            z, y = rng.random(n) * 2, rng.random(n) * 2
            lam = rng.random()
            lhs = lovasz_eval(f, lam * z + (1 - lam) * y)
            rhs = lam * lovasz_eval(f, z) + (1 - lam) * lovasz_eval(f, y)
            if lhs > rhs + 1e-9:
                fails.append(f"convexity {f.name}")
                break
            base = lovasz_eval(f, z)
            for a in (0.0, 0.3, 2.0, 7.0):
                if abs(lovasz_eval(f, a * z) - a * base) > 1e-9 * max(1.0, abs(a * base)):
                    fails.append(f"homogeneity {f.name}")
                    break
    ok = worst_ext <= 1e-9 and not fails
    return ok, f"{len(zoo)} functions, max extension error {worst_ext:.1e}, failures {fails or 'none'}"


def _random_matroid(rng, n):
    choice = rng.integers(0, 3)
    if choice == 0:
        return uniform_matroid(n, int(rng.integers(1, n)))
    if choice == 1:
        labels = rng.integers(0, 2, size=n)
        parts = [[v for v in range(n) if labels[v] == c] for c in (0, 1)]
        return partition_matroid(n, parts, [int(rng.integers(1, 3)), 1])
    nodes = 4
    all_edges = list(combinations(range(nodes), 2))
    idx = rng.choice(len(all_edges), size=n, replace=False)
    return graphic_matroid(nodes, [all_edges[j] for j in sorted(idx)])


def criterion_2(families: int = 20, points: int = 100) -> tuple[bool, str]:
    notes = []
    ok = True
    # lifted objectives keep submodularity and monotonicity
    for n, k, seed in [(7, 2, 0), (4, 3, 1), (6, 2, 2), (5, 2, 3)]:
        rng = np.random.default_rng(seed)
        objs = [_random_coverage(rng, n, 5) for _ in range(k - 1)] + [core.concave_of_modular(
            rng.integers(1, 4, size=n).astype(float).tolist(), "sqrt")]
        f = lifted_function(objs)
        if not check_submodular(f, n * k) or not check_monotone(f, n * k):
            ok = False
            notes.append(f"lifted objective n={n} k={k}")
        cut = lifted_function([core.graph_cut(n, random_graph(rng, n)) for _ in range(k)])
        if not check_submodular(cut, n * k):
            ok = False
            notes.append("lifted cut")
    # lifted matroids, bases, intersections and p-systems
    for seed in range(families):
        rng = np.random.default_rng(100 + seed)
        n, k = 5, 2
        M = _random_matroid(rng, n)
        L = lift_family(M, k)
        if not check_matroid(L):
            ok = False
            notes.append(f"lifted matroid seed {seed}")
        if not check_base_family(lift_family(bases_of(M), k)):
            ok = False
            notes.append(f"lifted bases seed {seed}")
        M2 = _random_matroid(rng, n)
        X = intersection([M, M2])
        LX = lift_family(X, k)
        lifted_each = intersection([L, lift_family(M2, k)])
        if not np.array_equal(LX.indicator(), lifted_each.indicator()):
            ok = False
            notes.append(f"lifted intersection seed {seed}")
        p, p_lift = p_system_ratio(X), p_system_ratio(LX)
        if p_lift > p:
            ok = False
            notes.append(f"lifted p-system seed {seed}: {p_lift} > {p}")
        if seed % 4 == 0:
            nodes = 4
            edges = random_graph(rng, nodes, 0.7)[:5]
            Mt = matchings(nodes, edges)
            if p_system_ratio(lift_family(Mt, k)) > p_system_ratio(Mt):
                ok = False
                notes.append(f"lifted matchings seed {seed}")
    # per-agent families
    for seed in range(families // 2):
        rng = np.random.default_rng(200 + seed)
        n, k = 4, 2
        H = lift_agent_families([_random_matroid(rng, n) for _ in range(k)])
        if not check_matroid(H):
            ok = False
            notes.append(f"agent matroids seed {seed}")
        rings = []
        for _ in range(k):
            rel = [(a, b) for a, b in combinations(range(n), 2) if rng.random() < 0.4]
            rings.append(poset_ideals(n, rel))
        if not check_ring(lift_agent_families(rings)):
            ok = False
            notes.append(f"agent rings seed {seed}")
    # graph families counted on the lifted multigraph
    graphs = [GRAPHS["K3"], GRAPHS["P3"], GRAPHS["C4"], GRAPHS["star4"],
              (5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]), (4, [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)])]
    counted = 0
    for nodes, edges in graphs:
        for k in (1, 2):
            G2 = lift_graph(nodes, edges, k)
            for kind in ("forests", "spanning-trees", "matchings", "perfect-matchings", "st-paths"):
                F = graph_family(kind, nodes, edges)
                lifted_count = count_members(lift_family(F, k))
                direct = count_members(graph_family(kind, nodes, G2.edges))
                counted += 1
                if lifted_count != direct:
                    ok = False
                    notes.append(f"graph count {kind} on {edges} k={k}: {lifted_count} vs {direct}")
    # multilinear additivity of the lifted objective
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(points):
        n, k = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        objs = [_random_coverage(rng, n, 4) for _ in range(k)]
        f = lifted_function(objs)
        zs = rng.random((k, n))
        worst = max(worst, abs(multilinear_eval_exact(f, zs.ravel())
                               - sum(multilinear_eval_exact(g, zs[i]) for i, g in enumerate(objs))))
    if worst > 1e-9:
        ok = False
        notes.append(f"additivity error {worst:.1e}")
    return ok, f"{families} matroid families, {counted} graph counts, additivity error {worst:.1e}; issues: {notes or 'none'}"


def _random_disjoint(rng, k, n, high):
    owner = rng.integers(-1, k, size=n)
    zs = np.zeros((k, n))
    for v in range(n):
        if owner[v] >= 0:
            zs[owner[v], v] = rng.random() * high
    return zs


def criterion_3(trials: int = 100) -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    worst_l = worst_m = 0.0
    for _ in range(trials):
        n, k = int(rng.integers(2, 8)), int(rng.integers(1, 4))
        objs = [_random_cost(rng, n, ["modular", "sqrt", "coverage"][int(rng.integers(0, 3))])
                for _ in range(k)]
        inst = MasoInstance(GroundSet(n), objs, trivial_family(n))
        zs = _random_disjoint(rng, k, n, 2.0)
        z = FractionalAssignment(zs)
        g = g_function(inst, z.supports())
        worst_l = max(worst_l, abs(lovasz_eval(g, z.aggregate) - z.objective(objs)))
        zm = _random_disjoint(rng, k, n, 1.0)
        zz = FractionalAssignment(zm)
        g = g_function(inst, zz.supports())
        worst_m = max(worst_m, abs(multilinear_eval_exact(g, zz.aggregate)
                                   - sum(multilinear_eval_exact(f, zm[i]) for i, f in enumerate(objs))))
    return max(worst_l, worst_m) <= 1e-9, f"Lovász error {worst_l:.1e}, multilinear error {worst_m:.1e}"


def criterion_4(seeds: int = 50) -> tuple[bool, str]:
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(3, 9)), int(rng.integers(1, 4))
        inst = generate("facility-location", seed, n=n, k=k,
                        costs=["modular", "sqrt", "coverage", "mixed", "setcover"][seed % 5])
        res = k_approx_round(inst, sa_rounder=exact_rounder, seed=seed)
        opt, _ = brute_force_maso(inst)
        if not res.feasible or res.cost > k * opt + 1e-9:
            return False, f"seed {seed}: cost {res.cost} vs k*OPT {k * opt}"
        worst = max(worst, res.cost / opt if opt > 0 else 1.0)
    return True, f"{seeds} seeds, worst cost/OPT {worst:.3f}"


def _vc_instance(seed):
    rng = np.random.default_rng(seed)
    nodes = int(rng.integers(3, 8))
    k = int(rng.integers(2, 4))
    edges = random_graph(rng, nodes, 0.5)
    style = ["modular", "sqrt"][seed % 2]
    objs = [_random_cost(rng, nodes, style) for _ in range(k)]
    return MasoInstance(GroundSet(nodes), objs, vertex_covers(nodes, edges))


def criterion_5(seeds: int = 50) -> tuple[bool, str]:
    worst = 0.0
    for seed in range(seeds):
        inst = _vc_instance(seed)
        n, k = inst.n, inst.k
        z = solve_ma_le(inst)
        try:
            res = fracture_expand_return(inst, z, threshold_rounder(2), seed)
        except InvariantViolation as exc:
            return False, f"seed {seed}: {exc}"
        opt, _ = brute_force_maso(inst)
        bound = min(k, 4 * math.log2(n) ** 2) * 2
        ratio = res.cost / opt if opt > 0 else 1.0
        if not res.feasible or ratio > bound + 1e-9:
            return False, f"seed {seed}: ratio {ratio:.3f} > {bound:.3f}"
        worst = max(worst, ratio / bound)
    return True, f"{seeds} seeds, worst ratio/bound {worst:.3f}"


def _ce_instance(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(3, 9)), int(rng.integers(1, 4))
    if seed % 2 == 0:
        inst = generate("cut-decomposed", seed, n=n, k=k)
        U = full(n)
        zs = rng.random((k, n)) + 0.05
        zs /= zs.sum(axis=0)
    else:
        inst = generate("vertex-cover", seed, n=n, k=k, graph="random", costs="sqrt")
        z = solve_ma_le(inst)
        U = sum(1 << int(v) for v in np.nonzero(2 * z.aggregate >= 1 - 1e-9)[0])
        zs = 2 * z.parts
    return inst, FractionalAssignment(zs), U


def criterion_6(instances: int = 20, trials: int = 500) -> tuple[bool, str]:
    worst = 0.0
    for seed in range(instances):
        inst, z, U = _ce_instance(seed)
        frac = z.objective(inst.objectives)
        costs = []
        for t in range(trials):
            res = ce_rounding(inst, z, U, seed * 100000 + t)
            alloc = res.allocation
            if alloc.union & U != U or not inst.is_feasible(alloc):
                return False, f"instance {seed} trial {t}: U not covered"
            costs.append(inst.cost(alloc))
        bound = 4 * (math.log(max(popcount(U), 1)) + 2) * frac
        mean = float(np.mean(costs))
        if mean > bound + 1e-9:
            return False, f"instance {seed}: mean cost {mean:.3f} > {bound:.3f}"
        worst = max(worst, mean / bound if bound > 0 else 0.0)
    # single item, two agents at 1/2: geometric number of rounds with success 1/2
    one = MasoInstance(GroundSet(1), [modular([1.0]), modular([1.0])], trivial_family(1))
    half = FractionalAssignment([[0.5], [0.5]])
    iters = [ce_rounding(one, half, 1, s).iterations for s in range(1000)]
    sigma = math.sqrt(1 - 0.5) / 0.5 / math.sqrt(len(iters))
    mean_it = float(np.mean(iters))
    geo_ok = abs(mean_it - 2.0) <= 3 * sigma
    return geo_ok, f"worst mean/bound {worst:.3f}; mean iterations {mean_it:.3f} (2 +- {3 * sigma:.3f})"


def criterion_7(seeds: int = 50) -> tuple[bool, str]:
    for seed in range(seeds):
        if seed % 2 == 0:
            inst = _vc_instance(seed)
        else:
            inst = generate("hitting-set", seed, n=6, r=3, m=4, k=2)
        z = solve_ma_le(inst)
        try:
            res = bounded_blocker_round(inst, z, inst.outer.beta, seed)
        except InvariantViolation as exc:
            return False, f"seed {seed}: {exc}"
        if not res.feasible:
            return False, f"seed {seed}: infeasible output"
    return True, f"{seeds} seeds, U in F on every run"


def _max_instance(seed):
    rng = np.random.default_rng(seed)
    kind = ["welfare", "sensor", "recommendation"][seed % 3]
    k = int(rng.integers(1, 4))
    n = int(rng.integers(3, 12 // k + 1))
    n = min(n, 6)
    return generate(kind, seed, n=n, k=k, b=2, universe=5)


def criterion_8(seeds: int = 30, steps: int = 100) -> tuple[bool, str]:
    factor = 1 - 1 / math.e - 0.05
    worst = math.inf
    for seed in range(seeds):
        inst = _max_instance(seed)
        P = partition_polytope(inst.outer)
        try:
            res = maximize_pipeline(inst, P, steps, seed)
        except InvariantViolation as exc:
            return False, f"seed {seed}: {exc}"
        opt, _ = brute_force_maso(inst)
        if not res.feasible or res.value < factor * opt - 1e-9:
            return False, f"seed {seed}: value {res.value} < {factor:.3f} x {opt}"
        worst = min(worst, res.value / opt if opt > 0 else 1.0)
    return True, f"{seeds} seeds, worst value/OPT {worst:.3f}"


def _p_instance(seed):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    k = int(rng.integers(1, 4))
    if kind == 0:
        n = 5
        F = _random_matroid(rng, n)
    elif kind == 1:
        return generate("matroid-intersection", seed, n=5, k=k)
    else:
        return generate("matchings", seed, nodes=4, k=k)
    objs = [_random_coverage(rng, n, 4) for _ in range(k)]
    return MasoInstance(GroundSet(n), objs, F, sense="max")


def criterion_9(seeds: int = 50) -> tuple[bool, str]:
    worst = math.inf
    for seed in range(seeds):
        inst = _p_instance(seed)
        p = p_system_ratio(inst.outer)
        res = lifted_greedy(inst, seed, p)
        opt, _ = brute_force_maso(inst)
        if not res.feasible or res.value * (p + 1) < opt - 1e-9:
            return False, f"seed {seed}: value {res.value} x (p+1={p + 1}) < OPT {opt}"
        worst = min(worst, res.value / opt if opt > 0 else 1.0)
    return True, f"{seeds} seeds, worst value/OPT {worst:.3f}"


def criterion_10(instances: int = 20, runs: int = 10) -> tuple[bool, str]:
    worst = 0.0
    for seed in range(instances):
        rng = np.random.default_rng(seed)
        inst = generate("crossing", seed, n=int(rng.integers(3, 9)), k=int(rng.integers(1, 4)),
                        ring=bool(seed % 2))
        opt, _ = brute_force_maso(inst)
        m_size = max(popcount(M) for M in crossing_candidates(inst.outer))
        ratios = []
        for r in range(runs):
            res = crossing_family_solve(inst, seed * 1000 + r)
            if not inst.outer(res.allocation.union) or not res.feasible:
                return False, f"instance {seed}: output not in F"
            ratios.append(res.cost / opt if opt > 0 else (1.0 if res.cost <= 1e-12 else math.inf))
        bound = 2 * (math.log(max(m_size, 1)) + 2)
        mean = float(np.mean(ratios))
        if mean > bound:
            return False, f"instance {seed}: mean ratio {mean:.3f} > {bound:.3f}"
        worst = max(worst, mean / bound)
    return True, f"{instances} instances, worst mean-ratio/bound {worst:.3f}"


def criterion_11(instances: int = 100) -> tuple[bool, str]:
    for seed in range(instances):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4))
        n = int(rng.integers(2, 13 // k + 1))
        n = min(n, 6)
        sense = "min" if seed % 2 else "max"
        objs = [_random_cost(rng, n, ["modular", "sqrt", "coverage"][int(rng.integers(0, 3))])
                for _ in range(k)]
        if sense == "min":
            outer = vertex_covers(n, random_graph(rng, n, 0.5)) if seed % 4 == 1 else trivial_family(n)
        else:
            outer = uniform_matroid(n, int(rng.integers(1, n + 1))) if seed % 4 == 0 else full_powerset(n)
        per_agent = None
        if seed % 5 == 0:
            per_agent = [uniform_matroid(n, int(rng.integers(1, n + 1))) for _ in range(k)]
            if sense == "min":
                per_agent = None
        inst = MasoInstance(GroundSet(n), objs, outer, per_agent=per_agent, sense=sense)
        value, _ = brute_force_maso(inst)
        lifted = lift_instance(inst)
        lifted_value, _ = brute_force_so(lifted.f, lifted.combined(), n * k, sense)
        if lifted_value != value:
            return False, f"seed {seed}: lifted {lifted_value} vs direct {value}"
    return True, f"{instances} instances agree exactly"


CRITERIA = [
    (1, "extension correctness", criterion_1, 10.0),
    (2, "lifting invariance", criterion_2, 60.0),
    (3, "disjoint-support identities", criterion_3, None),
    (4, "facility-location k-approximation", criterion_4, 30.0),
    (5, "fracture/expand/return", criterion_5, 60.0),
    (6, "CE-Rounding", criterion_6, None),
    (7, "bounded-blocker rounding", criterion_7, None),
    (8, "maximization pipeline", criterion_8, 120.0),
    (9, "lifted greedy p-system guarantee", criterion_9, None),
    (10, "crossing-family solver", criterion_10, None),
    (11, "oracle self-consistency", criterion_11, None),
]


def run_criterion(number: int) -> CriterionResult:
    _, name, fn, budget = CRITERIA[number - 1]
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported with its message
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    secs = time.perf_counter() - start
    if budget is not None and secs > budget:
        ok = False
        detail += f"; runtime {secs:.1f}s over budget {budget:.0f}s"
    return CriterionResult(number, name, ok, detail, secs)


def run_all() -> list[CriterionResult]:
    return [run_criterion(num) for num, *_ in CRITERIA]
