"""Instance JSON round-tripping and seeded instance generators."""

from __future__ import annotations

import json
from itertools import combinations

import numpy as np

from .core import (
    GroundSet, MasoInstance, compute_blocker, coverage, facility_location, family_from_spec,
    full_powerset, graph_cut, instance_with_decomposition, modular, partition_matroid,
    standard_function, sum_of, trivial_family, uniform_matroid, upward_closed_from_blocker,
    vertex_covers, concave_of_modular, poset_ideals, proper_supersets, matchings,
    graphic_matroid, bases_of, upward_closure, st_paths, intersection, members,
)

GRAPHS = {
    "K3": (3, [(0, 1), (1, 2), (0, 2)]),
    "P3": (3, [(0, 1), (1, 2)]),
    "C4": (4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
    "K4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    "star4": (4, [(0, 1), (0, 2), (0, 3)]),
}


def instance_to_json(inst: MasoInstance, instance_id: str | None = None) -> dict:
    out = {"n": inst.n, "k": inst.k, "sense": inst.sense,
           "objectives": [f.spec for f in inst.objectives], "outer_family": inst.outer.spec}
    if inst.ground.labels is not None:
        out["labels"] = list(inst.ground.labels)
    if inst.per_agent is not None:
        out["per_agent_families"] = [F.spec for F in inst.per_agent]
    if inst.decomposition is not None:
        gs, h = inst.decomposition
        out["decomposition"] = {"g": [g.spec for g in gs], "h": h.spec}
        del out["objectives"]
        out["objectives"] = [{"type": "sum", "terms": [g.spec, h.spec]} for g in gs]
    if inst.outer.blocker is not None and inst.outer.kind != "full-powerset":
        # informational; the family spec alone rebuilds the instance
        out["blocker"] = [members(B) for B in inst.outer.blocker]
    if instance_id is not None:
        out["id"] = instance_id
    if any(s is None for s in out["objectives"]) or out["outer_family"] is None:
        raise ValueError("instance holds oracles without a serializable spec")
    return out


def instance_from_json(data: dict | str) -> MasoInstance:
    if isinstance(data, str):
        data = json.loads(data)
    labels = tuple(data["labels"]) if data.get("labels") else None
    ground = GroundSet(data["n"], labels)
    outer = family_from_spec(data["outer_family"])
    sense = data.get("sense", "min")
    if data.get("decomposition"):
        gs = [standard_function(s) for s in data["decomposition"]["g"]]
        h = standard_function(data["decomposition"]["h"])
        inst = instance_with_decomposition(ground, gs, h, outer, sense)
    else:
        inst = MasoInstance(ground, [standard_function(s) for s in data["objectives"]], outer,
                            sense=sense)
    if data.get("per_agent_families"):
        inst.per_agent = [family_from_spec(s) for s in data["per_agent_families"]]
        inst.__post_init__()
    if inst.k != data["k"]:
        raise ValueError("k does not match the number of objectives")
    return inst


# --------------------------------------------------------------------------
# generators


def _random_coverage(rng, n, universe, density=0.4):
    sets = []
    for _ in range(n):
        s = [u for u in range(universe) if rng.random() < density]
        sets.append(s)
    weights = {str(u): float(rng.integers(1, 4)) for u in range(universe)}
    return coverage(sets, weights)


def _random_cost(rng, n, style):
    if style == "modular":
        return modular(rng.integers(1, 5, size=n).astype(float).tolist())
    if style == "sqrt":
        return concave_of_modular(rng.integers(1, 5, size=n).astype(float).tolist(), "sqrt")
    if style == "coverage":
        return _random_coverage(rng, n, max(3, n))
    if style == "setcover":
        return _setcover_cost(n, [v for v in range(n) if rng.random() < 0.5] or [int(rng.integers(0, n))])
    raise ValueError(f"unknown cost style {style!r}")


def _setcover_cost(n, B, penalty=10.0):
    """1 for using any item of B, plus a large per-item charge outside B."""
    inside = coverage([["b"] if v in B else [] for v in range(n)])
    outside = modular([0.0 if v in B else penalty for v in range(n)])
    return sum_of([inside, outside])


def random_graph(rng, nodes: int, p: float = 0.6) -> list[tuple[int, int]]:
    edges = [(a, b) for a, b in combinations(range(nodes), 2) if rng.random() < p]
    if not edges:
        edges = [(0, 1)]
    return edges


def generate(kind: str, seed: int = 0, **params) -> MasoInstance:
    """Seeded instance generators for the standard application families."""
    rng = np.random.default_rng(seed)
    k = int(params.get("k", 2))
    if kind == "welfare":
        n = int(params.get("n", 4))
        objs = [_random_coverage(rng, n, int(params.get("universe", 5))) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, full_powerset(n), sense="max")
    if kind == "sensor":
        n, b = int(params.get("n", 4)), int(params.get("b", 2))
        objs = [_random_coverage(rng, n, int(params.get("universe", 5))) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, uniform_matroid(n, b), sense="max")
    if kind == "recommendation":
        n = int(params.get("n", 6))
        cats = int(params.get("categories", 2))
        labels = rng.integers(0, cats, size=n)
        parts = [[v for v in range(n) if labels[v] == c] for c in range(cats)]
        caps = [int(params.get("per_category", 1))] * cats
        objs = [facility_location(rng.integers(0, 5, size=(3, n)).astype(float)) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, partition_matroid(n, parts, caps), sense="max")
    if kind == "sap":
        # items to bins: each agent (bin) takes at most `capacity` items
        n, cap = int(params.get("n", 4)), int(params.get("capacity", 2))
        objs = [modular(rng.integers(1, 6, size=n).astype(float).tolist()) for _ in range(k)]
        inst = MasoInstance(GroundSet(n), objs, full_powerset(n), sense="max",
                            per_agent=[uniform_matroid(n, cap) for _ in range(k)])
        return inst
    if kind == "facility-location":
        n = int(params.get("n", 5))
        style = params.get("costs", "sqrt")
        styles = ["modular", "sqrt", "coverage", "setcover"]
        objs = [_random_cost(rng, n, styles[i % 3] if style == "mixed" else style) for i in range(k)]
        return MasoInstance(GroundSet(n), objs, trivial_family(n), sense="min")
    if kind == "vertex-cover":
        graph = params.get("graph", "random")
        if graph in GRAPHS:
            nodes, edges = GRAPHS[graph]
        else:
            nodes = int(params.get("n", 5))
            edges = random_graph(rng, nodes)
        style = params.get("costs", "modular")
        objs = [_random_cost(rng, nodes, style) for _ in range(k)]
        return MasoInstance(GroundSet(nodes), objs, vertex_covers(nodes, edges), sense="min")
    if kind == "hitting-set":
        n, r = int(params.get("n", 6)), int(params.get("r", 3))
        m = int(params.get("m", 4))
        blocker = [rng.choice(n, size=r, replace=False).tolist() for _ in range(m)]
        style = params.get("costs", "modular")
        objs = [_random_cost(rng, n, style) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, upward_closed_from_blocker(n, blocker), sense="min")
    if kind == "spanning-trees":
        graph = params.get("graph", "K4")
        nodes, edges = GRAPHS[graph]
        trees = bases_of(graphic_matroid(nodes, edges))
        fam = upward_closure(trees)
        fam = upward_closed_from_blocker(len(edges), compute_blocker(fam))
        objs = [_random_cost(rng, len(edges), params.get("costs", "modular")) for _ in range(k)]
        return MasoInstance(GroundSet(len(edges)), objs, fam, sense="min")
    if kind == "st-paths":
        graph = params.get("graph", "C4")
        nodes, edges = GRAPHS[graph]
        paths = st_paths(nodes, edges, 0, int(params.get("t", nodes - 1 if graph != "C4" else 2)))
        fam = upward_closed_from_blocker(len(edges), compute_blocker(upward_closure(paths)))
        objs = [_random_cost(rng, len(edges), params.get("costs", "modular")) for _ in range(k)]
        return MasoInstance(GroundSet(len(edges)), objs, fam, sense="min")
    if kind == "matchings":
        graph = params.get("graph", "random")
        if graph in GRAPHS:
            nodes, edges = GRAPHS[graph]
        else:
            nodes = int(params.get("nodes", 4))
            edges = random_graph(rng, nodes, 0.7)
        objs = [_random_coverage(rng, len(edges), 4) for _ in range(k)]
        return MasoInstance(GroundSet(len(edges)), objs, matchings(nodes, edges), sense="max")
    if kind == "matroid-intersection":
        n = int(params.get("n", 4))
        a = rng.integers(0, 2, size=n)
        b = rng.integers(0, 2, size=n)
        M1 = partition_matroid(n, [[v for v in range(n) if a[v] == c] for c in (0, 1)], [1, 1])
        M2 = partition_matroid(n, [[v for v in range(n) if b[v] == c] for c in (0, 1)], [1, 1])
        objs = [_random_coverage(rng, n, 4) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, intersection([M1, M2]), sense="max")
    if kind == "crossing":
        n = int(params.get("n", 5))
        if params.get("ring", rng.random() < 0.5):
            rel = [(int(a), int(b)) for a, b in combinations(range(n), 2) if rng.random() < 0.3]
            req = [int(rng.integers(0, n))]
            fam = poset_ideals(n, rel, required=req)
        else:
            req = rng.choice(n, size=int(rng.integers(1, 3)), replace=False).tolist()
            fam = proper_supersets(n, req)
        style = params.get("costs", "modular")
        objs = [_random_cost(rng, n, style) for _ in range(k)]
        return MasoInstance(GroundSet(n), objs, fam, sense="min")
    if kind == "cut-decomposed":
        # f_i = g_i + h with h a graph cut (symmetric), F = {V}
        n = int(params.get("n", 5))
        edges = random_graph(rng, n)
        h = graph_cut(n, edges, rng.integers(1, 3, size=len(edges)).astype(float).tolist())
        gs = [_random_cost(rng, n, params.get("costs", "modular")) for _ in range(k)]
        outer = trivial_family(n)
        return instance_with_decomposition(GroundSet(n), gs, h, outer)
    raise ValueError(f"unknown generator kind {kind!r}")


GENERATORS = ("welfare", "sensor", "recommendation", "sap", "facility-location", "vertex-cover",
              "hitting-set", "spanning-trees", "st-paths", "matchings", "matroid-intersection",
              "crossing", "cut-decomposed")
