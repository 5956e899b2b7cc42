"""Ground sets, value oracles, feasible families and blocker machinery.

Sets are Python ints used as bitsets: element ``v`` is present in ``S`` iff
``S >> v & 1``. The core supports ground sets of at most 64 elements.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_N = 64
TOL = 1e-9
EXHAUSTIVE_CAP = 14
BLOCKER_CAP = 20


class CapacityError(ValueError):
    """Raised when an exhaustive routine is asked to enumerate too much."""


class PreconditionError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


# --------------------------------------------------------------------------
# bitset helpers


def mask(elements: Iterable[int]) -> int:
    m = 0
    for v in elements:
        if v < 0 or v >= MAX_N:
            raise ValueError(f"element {v} outside 0..{MAX_N - 1}")
        m |= 1 << v
    return m


def members(S: int) -> list[int]:
    out = []
    v = 0
    while S:
        if S & 1:
            out.append(v)
        S >>= 1
        v += 1
    return out


def popcount(S: int) -> int:
    return bin(S).count("1")


def full(n: int) -> int:
    return (1 << n) - 1


def submasks(S: int):
    """Yield every subset of ``S`` (including ``S`` and 0)."""
    sub = S
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & S


def all_masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def popcounts(n: int) -> np.ndarray:
    masks = all_masks(n)
    counts = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        counts += (masks >> v) & 1
    return counts


@dataclass(frozen=True)
class GroundSet:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.n > MAX_N:
            raise ValueError(f"ground set size must be in 1..{MAX_N}, got {self.n}")
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise ValueError("need exactly one label per element")
            if len(set(self.labels)) != self.n:
                raise ValueError("labels must be unique")

    @property
    def full(self) -> int:
        return full(self.n)

    def index(self, label: str) -> int:
        if self.labels is None:
            return int(label)
        return self.labels.index(label)


# --------------------------------------------------------------------------
# value oracles


class ValueOracle:
    """Memoized nonnegative set function over ``{0..n-1}``.

    ``fn`` receives a bitset and returns a float. The cache is keyed by the
    bitset; reads are lock-free and writes are serialized.
    """

    def __init__(self, fn: Callable[[int], float], n: int, *, monotone: bool = False,
                 submodular: bool = True, normalized: bool = True, name: str = "",
                 spec: dict | None = None):
        if n < 1 or n > MAX_N:
            raise ValueError(f"oracle ground set size must be in 1..{MAX_N}")
        self.fn = fn
        self.n = n
        self.claims_monotone = monotone
        self.claims_submodular = submodular
        self.claims_normalized = normalized
        self.name = name or getattr(fn, "__name__", "oracle")
        self.spec = spec
        self._cache: dict[int, float] = {}
        self._lock = threading.Lock()
        self._table: np.ndarray | None = None

    def __call__(self, S: int) -> float:
        try:
            return self._cache[S]
        except KeyError:
            pass
        if S < 0 or S >> self.n:
            raise ValueError(f"set {S:#x} is not a subset of the {self.n}-element ground set")
        val = float(self.fn(S))
        if val < -TOL:
            raise InvariantViolation(f"{self.name} returned negative value {val} on {members(S)}")
        with self._lock:
            self._cache.setdefault(S, val)
        return self._cache[S]

    def clear_cache(self):
        with self._lock:
            self._cache.clear()
            self._table = None

    def table(self) -> np.ndarray:
        """Values on all ``2**n`` subsets, indexed by bitset."""
        if self._table is None:
            if self.n > BLOCKER_CAP:
                raise CapacityError(f"value table needs n <= {BLOCKER_CAP}, got {self.n}")
            self._table = np.array([self(S) for S in range(1 << self.n)], dtype=float)
        return self._table

    def __repr__(self):
        return f"ValueOracle({self.name!r}, n={self.n})"


def eval_marginal(oracle: ValueOracle, S: int, v: int) -> float:
    if S >> v & 1:
        raise PreconditionError(f"element {v} already in the set")
    return oracle(S | (1 << v)) - oracle(S)


@dataclass
class Verdict:
    ok: bool
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def _cap(n: int, cap: int):
    if n > cap:
        raise CapacityError(f"exhaustive check capped at n <= {cap}, got n = {n}")


def check_submodular(oracle: ValueOracle, ground: GroundSet | int, mode: str = "exhaustive",
                     seed: int = 0, trials: int = 1000, cap: int = EXHAUSTIVE_CAP,
                     tol: float = TOL) -> Verdict:
    """Search for a pair (S, T) with f(S) + f(T) < f(S | T) + f(S & T) - tol.

    Exhaustive mode scans every pair of the form (X + a, X + b); a violation of
    submodularity always shows up as such a pair, and the pair is returned as
    witness.
    """
    n = ground.n if isinstance(ground, GroundSet) else ground
    if mode == "exhaustive":
        _cap(n, cap)
        t = oracle.table()
        masks = all_masks(n)
        for a in range(n):
            for b in range(a + 1, n):
                base = masks[((masks >> a) & 1 == 0) & ((masks >> b) & 1 == 0)]
                sa, sb = base | (1 << a), base | (1 << b)
                gap = t[sa] + t[sb] - t[sa | sb] - t[base]
                bad = np.nonzero(gap < -tol)[0]
                if bad.size:
                    j = bad[0]
                    return Verdict(False, (int(sa[j]), int(sb[j])),
                                   f"violation {float(gap[j]):.3g}")
        return Verdict(True)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            S = int(rng.integers(0, 1 << n)) if n < 63 else _rand_mask(rng, n)
            T = int(rng.integers(0, 1 << n)) if n < 63 else _rand_mask(rng, n)
            gap = oracle(S) + oracle(T) - oracle(S | T) - oracle(S & T)
            if gap < -tol:
                return Verdict(False, (S, T), f"violation {gap:.3g}")
        return Verdict(True)
    raise ValueError(f"unknown mode {mode!r}")


def check_monotone(oracle: ValueOracle, ground: GroundSet | int, mode: str = "exhaustive",
                   seed: int = 0, trials: int = 1000, cap: int = EXHAUSTIVE_CAP,
                   tol: float = TOL) -> Verdict:
    n = ground.n if isinstance(ground, GroundSet) else ground
    if mode == "exhaustive":
        _cap(n, cap)
        t = oracle.table()
        masks = all_masks(n)
        best = None
        for v in range(n):
            base = masks[(masks >> v) & 1 == 0]
            drop = t[base | (1 << v)] - t[base]
            bad = np.nonzero(drop < -tol)[0]
            if bad.size:
                S = int(base[bad[0]])
                if best is None or S < best[0]:
                    best = (S, S | (1 << v))
        if best is not None:
            return Verdict(False, best, "value falls when an element is added")
        return Verdict(True)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            S = _rand_mask(rng, n)
            v = int(rng.integers(0, n))
            if S >> v & 1:
                continue
            if oracle(S | (1 << v)) < oracle(S) - tol:
                return Verdict(False, (S, S | (1 << v)), "value falls when an element is added")
        return Verdict(True)
    raise ValueError(f"unknown mode {mode!r}")


def _rand_mask(rng: np.random.Generator, n: int) -> int:
    bits = rng.integers(0, 2, size=n)
    return int(sum(1 << i for i in range(n) if bits[i]))


# --------------------------------------------------------------------------
# standard submodular functions


def _nonneg(weights, what="weights"):
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError(f"{what} must be nonnegative")
    return w


def modular(weights: Sequence[float]) -> ValueOracle:
    w = _nonneg(weights)
    wl = w.tolist()

    def fn(S):
        return sum(wl[v] for v in members(S))

    return ValueOracle(fn, len(w), monotone=True, name="modular",
                       spec={"type": "modular", "weights": wl})


def coverage(sets: Sequence[Iterable], universe_weights: dict | None = None) -> ValueOracle:
    """f(S) = total weight of universe items covered by the sets indexed by S."""
    covers = [frozenset(s) for s in sets]
    universe = sorted(set().union(*covers), key=str) if covers else []
    if universe_weights is None:
        weights = {u: 1.0 for u in universe}
    else:
        weights = {u: float(universe_weights.get(u, universe_weights.get(str(u), 1.0)))
                   for u in universe}
    if any(w < 0 for w in weights.values()):
        raise ValueError("universe weights must be nonnegative")

    def fn(S):
        covered = set()
        for v in members(S):
            covered |= covers[v]
        return sum(weights[u] for u in covered)

    spec = {"type": "coverage", "sets": [sorted(c, key=str) for c in covers]}
    if universe_weights is not None:
        spec["universe_weights"] = {str(u): w for u, w in weights.items()}
    return ValueOracle(fn, len(covers), monotone=True, name="coverage", spec=spec)


def facility_location(benefit) -> ValueOracle:
    """f(S) = sum over clients of the best benefit among facilities in S.

    ``benefit`` is a clients x facilities matrix; the ground set is the facilities.
    """
    B = _nonneg(benefit, "benefits")
    if B.ndim != 2:
        raise ValueError("benefit must be a clients x facilities matrix")

    def fn(S):
        idx = members(S)
        if not idx:
            return 0.0
        return float(B[:, idx].max(axis=1).sum())

    return ValueOracle(fn, B.shape[1], monotone=True, name="facility-location",
                       spec={"type": "facility-location", "benefit": B.tolist()})


def graph_cut(n: int, edges: Sequence[tuple[int, int]], weights: Sequence[float] | None = None) -> ValueOracle:
    """Undirected cut function on the node set."""
    w = _nonneg(weights if weights is not None else [1.0] * len(edges))
    if len(w) != len(edges):
        raise ValueError("one weight per edge")
    E = [(int(a), int(b)) for a, b in edges]

    def fn(S):
        return sum(wi for (a, b), wi in zip(E, w.tolist()) if (S >> a & 1) != (S >> b & 1))

    return ValueOracle(fn, n, monotone=False, name="graph-cut",
                       spec={"type": "graph-cut", "n": n, "edges": [list(e) for e in E],
                             "weights": w.tolist()})


def matroid_rank(family: "FeasibleFamily") -> ValueOracle:
    """Rank function of an independence system given by its membership oracle."""
    n = family.n
    if n > BLOCKER_CAP:
        raise CapacityError("rank table needs n <= 20")
    ind = family.indicator()
    rank = popcounts(n) * ind
    for S in range(1 << n):
        if not ind[S]:
            rank[S] = max(rank[S & ~(1 << v)] for v in members(S))
    rl = rank.astype(float)

    return ValueOracle(lambda S: rl[S], n, monotone=True, name="matroid-rank",
                       spec={"type": "matroid-rank", "family": family.spec})


def concave_of_modular(weights: Sequence[float], concave: str = "sqrt", cap: float | None = None) -> ValueOracle:
    w = _nonneg(weights).tolist()
    if concave == "sqrt":
        phi = np.sqrt
    elif concave == "min-cap":
        if cap is None or cap < 0:
            raise ValueError("min-cap needs a nonnegative cap")
        phi = lambda x: min(x, cap)  # noqa: E731
    else:
        raise ValueError(f"unknown concave tag {concave!r}")

    def fn(S):
        return float(phi(sum(w[v] for v in members(S))))

    spec = {"type": "concave-of-modular", "weights": w, "concave": concave}
    if cap is not None:
        spec["cap"] = cap
    return ValueOracle(fn, len(w), monotone=True, name=f"{concave}-of-modular", spec=spec)


def sum_of(oracles: Sequence[ValueOracle]) -> ValueOracle:
    if not oracles:
        raise ValueError("empty sum")
    n = oracles[0].n
    if any(o.n != n for o in oracles):
        raise ValueError("summands must share a ground set")
    return ValueOracle(lambda S: sum(o(S) for o in oracles), n,
                       monotone=all(o.claims_monotone for o in oracles),
                       submodular=all(o.claims_submodular for o in oracles),
                       normalized=all(o.claims_normalized for o in oracles), name="sum",
                       spec={"type": "sum", "terms": [o.spec for o in oracles]})


def scale(oracle: ValueOracle, c: float) -> ValueOracle:
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    return ValueOracle(lambda S: c * oracle(S), oracle.n, monotone=oracle.claims_monotone,
                       submodular=oracle.claims_submodular,
                       normalized=oracle.claims_normalized, name=f"{c}*{oracle.name}",
                       spec={"type": "scale", "factor": c, "term": oracle.spec})


def zero(n: int) -> ValueOracle:
    return ValueOracle(lambda S: 0.0, n, monotone=True, name="zero", spec={"type": "zero", "n": n})


def standard_function(spec: dict) -> ValueOracle:
    """Build a zoo function from its JSON spec (a dict tagged by ``type``)."""
    kind = spec["type"]
    if kind == "modular":
        return modular(spec["weights"])
    if kind == "coverage":
        return coverage(spec["sets"], spec.get("universe_weights"))
    if kind == "facility-location":
        return facility_location(spec["benefit"])
    if kind == "graph-cut":
        return graph_cut(spec["n"], [tuple(e) for e in spec["edges"]], spec.get("weights"))
    if kind == "matroid-rank":
        return matroid_rank(family_from_spec(spec["family"]))
    if kind == "concave-of-modular":
        return concave_of_modular(spec["weights"], spec.get("concave", "sqrt"), spec.get("cap"))
    if kind == "sum":
        return sum_of([standard_function(t) for t in spec["terms"]])
    if kind == "scale":
        return scale(standard_function(spec["term"]), spec["factor"])
    if kind == "zero":
        return zero(spec["n"])
    raise ValueError(f"unknown function type {kind!r}")


# --------------------------------------------------------------------------
# feasible families

FAMILY_KINDS = {
    "explicit-list", "matroid-independent-sets", "matroid-bases", "p-system",
    "upward-closed-with-blocker", "crossing", "ring", "trivial-V", "full-powerset",
}


@dataclass
class FeasibleFamily:
    """Membership oracle for a family of subsets of ``{0..n-1}``.

    Optional structure rides along: an explicit blocker list for upward-closed
    families, the parts and capacities of partition matroids, the member list
    of explicit families.
    """
    n: int
    contains: Callable[[int], bool]
    kind: str
    blocker: list[int] | None = None
    beta: int | None = None
    spec: dict | None = None
    parts: list[int] | None = None
    capacities: list[int] | None = None
    explicit: list[int] | None = None
    upward_closed: bool = False
    downward_closed: bool = False
    _indicator: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.blocker is not None:
            sizes = [popcount(B) for B in self.blocker]
            if any(s == 0 for s in sizes):
                raise InfeasibleError("empty blocker member: no set can hit it")
            if self.beta is None:
                self.beta = max(sizes, default=0)

    def __call__(self, S: int) -> bool:
        return bool(self.contains(S))

    def indicator(self) -> np.ndarray:
        if self._indicator is None:
            if self.n > BLOCKER_CAP:
                raise CapacityError(f"family enumeration needs n <= {BLOCKER_CAP}")
            self._indicator = np.array([bool(self.contains(S)) for S in range(1 << self.n)])
        return self._indicator

    def members(self) -> list[int]:
        return [int(S) for S in np.nonzero(self.indicator())[0]]

    def hits_blocker(self, z: np.ndarray, tol: float = 1e-9) -> bool:
        """Fractional feasibility: z(B) >= 1 for every listed blocker set."""
        if self.blocker is None:
            raise PreconditionError("family has no explicit blocker list")
        return all(sum(z[v] for v in members(B)) >= 1 - tol for B in self.blocker)


def _hits_all(S: int, blocker: Sequence[int]) -> bool:
    return all(S & B for B in blocker)


def upward_closed_from_blocker(n: int, blocker: Sequence[Iterable[int] | int], kind="upward-closed-with-blocker") -> FeasibleFamily:
    bl = [B if isinstance(B, int) else mask(B) for B in blocker]
    return FeasibleFamily(n, lambda S: _hits_all(S, bl), kind, blocker=bl,
                          spec={"type": "blocker", "n": n, "blocker": [members(B) for B in bl]},
                          upward_closed=True)


def trivial_family(n: int) -> FeasibleFamily:
    """F = {V}: the only feasible set is the whole ground set."""
    V = full(n)
    return FeasibleFamily(n, lambda S: S == V, "trivial-V", blocker=[1 << v for v in range(n)],
                          spec={"type": "trivial-V", "n": n}, upward_closed=True)


def full_powerset(n: int) -> FeasibleFamily:
    return FeasibleFamily(n, lambda S: True, "full-powerset", blocker=[],
                          spec={"type": "full-powerset", "n": n}, parts=[1 << v for v in range(n)],
                          capacities=[1] * n, upward_closed=True, downward_closed=True)


def explicit_family(n: int, sets: Iterable[Iterable[int] | int], kind: str = "explicit-list") -> FeasibleFamily:
    ms = sorted({S if isinstance(S, int) else mask(S) for S in sets})
    lookup = frozenset(ms)
    fam = FeasibleFamily(n, lambda S: S in lookup, kind, explicit=ms,
                         spec={"type": "explicit", "n": n, "kind": kind,
                               "sets": [members(S) for S in ms]})
    return fam


def upward_closure(family: FeasibleFamily) -> FeasibleFamily:
    mins = minimal_members(family)
    return FeasibleFamily(family.n, lambda S: any(S & M == M for M in mins),
                          "explicit-list", spec={"type": "upward-closure", "family": family.spec},
                          upward_closed=True)


def uniform_matroid(n: int, rank: int) -> FeasibleFamily:
    return FeasibleFamily(n, lambda S: popcount(S) <= rank, "matroid-independent-sets",
                          spec={"type": "uniform-matroid", "n": n, "rank": rank},
                          parts=[full(n)], capacities=[rank], downward_closed=True)


def partition_matroid(n: int, parts: Sequence[Iterable[int]], capacities: Sequence[int]) -> FeasibleFamily:
    pm = [mask(p) for p in parts]
    if len(pm) != len(capacities):
        raise ValueError("one capacity per part")
    seen = 0
    for p in pm:
        if p & seen:
            raise ValueError("parts must be disjoint")
        seen |= p
    # elements outside every part are free
    for v in range(n):
        if not seen >> v & 1:
            pm.append(1 << v)
            capacities = list(capacities) + [1]
    caps = list(capacities)
    return FeasibleFamily(n, lambda S: all(popcount(S & p) <= c for p, c in zip(pm, caps)),
                          "matroid-independent-sets",
                          spec={"type": "partition-matroid", "n": n,
                                "parts": [members(p) for p in pm], "capacities": caps},
                          parts=pm, capacities=caps, downward_closed=True)


def _is_forest(edge_list: Sequence[tuple[int, int]], S: int) -> bool:
    parent: dict[int, int] = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    for e in members(S):
        a, b = edge_list[e]
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def graphic_matroid(n_nodes: int, edges: Sequence[tuple[int, int]]) -> FeasibleFamily:
    """Forests of a (multi)graph; the ground set is the edge list."""
    E = [(int(a), int(b)) for a, b in edges]
    return FeasibleFamily(len(E), lambda S: _is_forest(E, S), "matroid-independent-sets",
                          spec={"type": "graphic-matroid", "nodes": n_nodes,
                                "edges": [list(e) for e in E]}, downward_closed=True)


def _is_matching(edge_list, S: int) -> bool:
    used = set()
    for e in members(S):
        a, b = edge_list[e]
        if a == b or a in used or b in used:
            return False
        used.add(a)
        used.add(b)
    return True


def matchings(n_nodes: int, edges: Sequence[tuple[int, int]]) -> FeasibleFamily:
    E = [(int(a), int(b)) for a, b in edges]
    return FeasibleFamily(len(E), lambda S: _is_matching(E, S), "p-system",
                          spec={"type": "matchings", "nodes": n_nodes,
                                "edges": [list(e) for e in E]}, downward_closed=True)


def intersection(families: Sequence[FeasibleFamily], kind: str = "p-system") -> FeasibleFamily:
    n = families[0].n
    if any(f.n != n for f in families):
        raise ValueError("families must share a ground set")
    return FeasibleFamily(n, lambda S: all(f(S) for f in families), kind,
                          spec={"type": "intersection", "kind": kind,
                                "families": [f.spec for f in families]},
                          downward_closed=all(f.downward_closed for f in families))


def bases_of(family: FeasibleFamily) -> FeasibleFamily:
    """Maximal members of an independence system (bases when it is a matroid)."""
    n = family.n
    ind = family.indicator()
    maximal = [S for S in np.nonzero(ind)[0].tolist()
               if all(not ind[S | (1 << v)] for v in range(n) if not S >> v & 1)]
    lookup = frozenset(maximal)
    fam = FeasibleFamily(n, lambda S: S in lookup, "matroid-bases", explicit=sorted(lookup),
                         spec={"type": "bases", "family": family.spec})
    return fam


def vertex_covers(n_nodes: int, edges: Sequence[tuple[int, int]]) -> FeasibleFamily:
    """Vertex covers: upward closed with blocker = the edges themselves."""
    bl = sorted({mask(e) for e in edges})
    fam = upward_closed_from_blocker(n_nodes, bl)
    fam.spec = {"type": "vertex-cover", "n": n_nodes, "edges": [list(e) for e in edges]}
    return fam


def hitting_sets(n: int, blocker: Sequence[Iterable[int]]) -> FeasibleFamily:
    return upward_closed_from_blocker(n, blocker)


def st_paths(n_nodes: int, edges: Sequence[tuple[int, int]], s: int, t: int) -> FeasibleFamily:
    """Edge sets of simple s-t paths (an explicit, non-monotone family)."""
    E = [(int(a), int(b)) for a, b in edges]
    paths = []

    def walk(node, used_nodes, used_edges):
        if node == t:
            paths.append(used_edges)
            return
        for j, (a, b) in enumerate(E):
            if used_edges >> j & 1:
                continue
            if a == node:
                nxt = b
            elif b == node:
                nxt = a
            else:
                continue
            if nxt in used_nodes:
                continue
            walk(nxt, used_nodes | {nxt}, used_edges | (1 << j))

    walk(s, {s}, 0)
    fam = explicit_family(len(E), paths)
    fam.spec = {"type": "st-paths", "nodes": n_nodes, "edges": [list(e) for e in E], "s": s, "t": t}
    return fam


def ring_family(n: int, sets: Iterable[Iterable[int] | int]) -> FeasibleFamily:
    fam = explicit_family(n, sets, kind="ring")
    fam.spec["kind"] = "ring"
    return fam


def poset_ideals(n: int, relations: Sequence[tuple[int, int]], required: Iterable[int] = (),
                 forbidden: Iterable[int] = ()) -> FeasibleFamily:
    """Ring family of down-sets of a preorder, restricted to contain ``required``
    and avoid ``forbidden``. ``(a, b)`` in relations means b in S forces a in S.
    """
    rel = [(int(a), int(b)) for a, b in relations]
    req, forb = mask(required), mask(forbidden)

    def contains(S):
        if S & req != req or S & forb:
            return False
        return all(S >> a & 1 for a, b in rel if S >> b & 1)

    return FeasibleFamily(n, contains, "ring",
                          spec={"type": "poset-ideals", "n": n, "relations": [list(r) for r in rel],
                                "required": members(req), "forbidden": members(forb)})


def proper_supersets(n: int, required: Iterable[int]) -> FeasibleFamily:
    """{A : required <= A != V}: crossing but generally not a ring family."""
    req, V = mask(required), full(n)
    return FeasibleFamily(n, lambda S: S & req == req and S != V, "crossing",
                          spec={"type": "proper-supersets", "n": n, "required": members(req)})


def family_from_spec(spec: dict) -> FeasibleFamily:
    t = spec["type"]
    if t == "blocker":
        return upward_closed_from_blocker(spec["n"], spec["blocker"])
    if t == "vertex-cover":
        return vertex_covers(spec["n"], [tuple(e) for e in spec["edges"]])
    if t == "trivial-V":
        return trivial_family(spec["n"])
    if t == "full-powerset":
        return full_powerset(spec["n"])
    if t == "explicit":
        return explicit_family(spec["n"], spec["sets"], spec.get("kind", "explicit-list"))
    if t == "uniform-matroid":
        return uniform_matroid(spec["n"], spec["rank"])
    if t == "partition-matroid":
        return partition_matroid(spec["n"], spec["parts"], spec["capacities"])
    if t == "graphic-matroid":
        return graphic_matroid(spec["nodes"], [tuple(e) for e in spec["edges"]])
    if t == "matchings":
        return matchings(spec["nodes"], [tuple(e) for e in spec["edges"]])
    if t == "intersection":
        return intersection([family_from_spec(f) for f in spec["families"]], spec.get("kind", "p-system"))
    if t == "bases":
        return bases_of(family_from_spec(spec["family"]))
    if t == "upward-closure":
        return upward_closure(family_from_spec(spec["family"]))
    if t == "st-paths":
        return st_paths(spec["nodes"], [tuple(e) for e in spec["edges"]], spec["s"], spec["t"])
    if t == "poset-ideals":
        return poset_ideals(spec["n"], spec["relations"], spec.get("required", ()), spec.get("forbidden", ()))
    if t == "proper-supersets":
        return proper_supersets(spec["n"], spec["required"])
    raise ValueError(f"unknown family type {t!r}")


# --------------------------------------------------------------------------
# blockers


def minimal_members(family: FeasibleFamily) -> list[int]:
    """Inclusion-minimal members, in ascending bitset order."""
    ind = family.indicator()
    n = family.n
    masks = all_masks(n)
    minimal = ind.copy()
    for v in range(n):
        has_v = (masks >> v) & 1 == 1
        minimal[has_v] &= ~ind[masks[has_v] ^ (1 << v)]
    # removing one element suffices only for upward-closed families; check all subsets otherwise
    out = []
    for S in np.nonzero(minimal)[0].tolist():
        if family.upward_closed or not any(ind[T] for T in submasks(S) if T != S):
            out.append(S)
    return out


def compute_blocker(family: FeasibleFamily, ground: GroundSet | int | None = None) -> list[int]:
    """All inclusion-minimal sets meeting every member of the family."""
    n = family.n if ground is None else (ground.n if isinstance(ground, GroundSet) else ground)
    if n > BLOCKER_CAP:
        raise CapacityError(f"blocker enumeration needs n <= {BLOCKER_CAP}")
    mins = minimal_members(family)
    if not mins:
        raise InfeasibleError("blocker of an empty family is undefined")
    masks = all_masks(n)
    hits = np.ones(1 << n, dtype=bool)
    for M in mins:
        hits &= (masks & M) != 0
    minimal = hits.copy()
    for v in range(n):
        has_v = (masks >> v) & 1 == 1
        minimal[has_v] &= ~hits[masks[has_v] ^ (1 << v)]
    return [int(S) for S in np.nonzero(minimal)[0]]


def is_antichain(sets: Sequence[int]) -> bool:
    return not any(a != b and a & b == a for a in sets for b in sets)


def peel_to_minimal(family: FeasibleFamily, S: int, order: str = "ascending") -> int:
    """Drop elements one at a time, in index order, while membership is kept.

    ``order="descending"`` tries the highest index first.
    """
    if not family(S):
        raise PreconditionError("input set is not in the family")
    if order not in ("ascending", "descending"):
        raise ValueError(f"unknown scan order {order!r}")
    M = S
    scan = members(S) if order == "ascending" else members(S)[::-1]
    for v in scan:
        if family(M & ~(1 << v)):
            M &= ~(1 << v)
    return M


# --------------------------------------------------------------------------
# instances and allocations


@dataclass(frozen=True)
class Allocation:
    parts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))
        seen = 0
        for p in self.parts:
            if p & seen:
                raise InvariantViolation(f"allocation parts overlap on {members(p & seen)}")
            seen |= p

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def union(self) -> int:
        u = 0
        for p in self.parts:
            u |= p
        return u

    def as_lists(self) -> list[list[int]]:
        return [members(p) for p in self.parts]


@dataclass
class MasoInstance:
    ground: GroundSet
    objectives: list[ValueOracle]
    outer: FeasibleFamily
    per_agent: list[FeasibleFamily] | None = None
    sense: str = "min"
    decomposition: tuple[list[ValueOracle], ValueOracle] | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one agent")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        n = self.ground.n
        if any(f.n != n for f in self.objectives) or self.outer.n != n:
            raise ValueError("all oracles and families must share the ground set")
        if self.per_agent is not None:
            if len(self.per_agent) != self.k or any(F.n != n for F in self.per_agent):
                raise ValueError("need one per-agent family per agent on the same ground set")
        if self.decomposition is not None:
            self._spot_check_decomposition()

    @property
    def k(self) -> int:
        return len(self.objectives)

    @property
    def n(self) -> int:
        return self.ground.n

    def _spot_check_decomposition(self, probes: int = 32, seed: int = 0):
        gs, h = self.decomposition
        if len(gs) != self.k:
            raise ValueError("decomposition needs one g per agent")
        rng = np.random.default_rng(seed)
        probe_sets = [0, self.ground.full] + [_rand_mask(rng, self.n) for _ in range(probes)]
        for i, f in enumerate(self.objectives):
            for S in probe_sets:
                if abs(f(S) - gs[i](S) - h(S)) > TOL:
                    raise InvariantViolation(f"f_{i} != g_{i} + h on {members(S)}")

    def agent_ok(self, i: int, S: int) -> bool:
        return self.per_agent is None or self.per_agent[i](S)

    def is_feasible(self, alloc: Allocation) -> bool:
        if alloc.k != self.k:
            return False
        try:
            union = Allocation(alloc.parts).union
        except InvariantViolation:
            return False
        return self.outer(union) and all(self.agent_ok(i, p) for i, p in enumerate(alloc.parts))

    def cost(self, alloc: Allocation) -> float:
        return sum(f(p) for f, p in zip(self.objectives, alloc.parts))


def instance_with_decomposition(ground: GroundSet, gs: Sequence[ValueOracle], h: ValueOracle,
                                outer: FeasibleFamily, sense: str = "min") -> MasoInstance:
    """Build f_i = g_i + h and keep the split for CE-Rounding."""
    objectives = []
    for g in gs:
        f = ValueOracle(lambda S, g=g: g(S) + h(S), ground.n,
                        monotone=g.claims_monotone and h.claims_monotone,
                        submodular=g.claims_submodular and h.claims_submodular,
                        normalized=g.claims_normalized and h.claims_normalized, name=f"{g.name}+h",
                        spec={"type": "sum", "terms": [g.spec, h.spec]})
        objectives.append(f)
    return MasoInstance(ground, objectives, outer, sense=sense, decomposition=(list(gs), h))
