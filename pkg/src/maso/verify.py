"""Named property suites behind ``maso verify``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import acceptance as acc
from .core import (
    ValueOracle, check_monotone, check_submodular, compute_blocker, members, peel_to_minimal,
    vertex_covers,
)
from .instances import GENERATORS, generate, instance_from_json, instance_to_json


def _core_checks() -> list[tuple[str, bool, str]]:
    out = []
    for f in acc.function_zoo(8, 0):
        v = check_submodular(f, f.n)
        out.append((f"{f.name} submodular", bool(v), str(v.witness)))
        if f.claims_monotone:
            m = check_monotone(f, f.n)
            out.append((f"{f.name} monotone", bool(m), str(m.witness)))
    sq = ValueOracle(lambda S: float(bin(S).count("1") ** 2), 3, name="size-squared")
    v = check_submodular(sq, 3)
    out.append(("|S|^2 is caught as non-submodular", not v and v.witness is not None, str(v.witness)))
    F = vertex_covers(3, [(0, 1), (1, 2), (0, 2)])
    bl = sorted(compute_blocker(F))
    out.append(("K3 cover blocker is the edge set", bl == [3, 5, 6], str([members(b) for b in bl])))
    rng = np.random.default_rng(0)
    for seed in range(20):
        G = vertex_covers(6, acc.random_graph(rng, 6))
        S = int(rng.integers(0, 64)) | 0
        S = S if G(S) else 63
        M = peel_to_minimal(G, S)
        minimal = G(M) and M & ~S == 0 and all(not G(M & ~(1 << v)) for v in members(M))
        out.append((f"peel seed {seed}", minimal, str(members(M))))
    for kind in GENERATORS:
        inst = generate(kind, 3)
        back = instance_from_json(instance_to_json(inst, kind))
        probes = rng.integers(0, 1 << inst.n, size=100)
        same = all(a(int(S)) == b(int(S)) for a, b in zip(inst.objectives, back.objectives) for S in probes)
        same &= all(inst.outer(int(S)) == back.outer(int(S)) for S in probes)
        out.append((f"{kind} JSON round trip", same, kind))
    return out


def _criteria(*numbers: int) -> Callable[[], list[tuple[str, bool, str]]]:
    def run():
        out = []
        for num in numbers:
            r = acc.run_criterion(num)
            out.append((f"criterion {num} {r.name}", r.passed, r.detail))
        return out
    return run


SUITES: dict[str, Callable[[], list[tuple[str, bool, str]]]] = {
    "core": _core_checks,
    "extensions": _criteria(1),
    "lifting": _criteria(2),
    "minimize": _criteria(3, 4, 5, 6, 7, 10),
    "maximize": _criteria(8, 9),
    "oracle": _criteria(11),
    "acceptance": _criteria(*range(1, 12)),
}


def run_suite(name: str, emit: Callable[[str], None] = print) -> bool:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    ok = True
    for check, passed, detail in SUITES[name]():
        ok &= passed
        emit(f"{'PASS' if passed else 'FAIL'} {check}" + ("" if passed else f"  witness: {detail}"))
    emit(f"suite {name}: {'ok' if ok else 'violations found'}")
    return ok
