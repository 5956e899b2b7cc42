"""Brute-force ground truth for small instances and ratio certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BLOCKER_CAP, Allocation, CapacityError, FeasibleFamily, GroundSet, InfeasibleError,
    MasoInstance, ValueOracle, members,
)

ASSIGNMENT_CAP = 10 ** 7


def _assignment_parts(n: int, k: int) -> np.ndarray:
    """Part bitsets of every assignment of items to {unassigned, agent 1..k}.

    Row r, column i holds agent i's bitset in assignment r; the assignment
    order is mixed-radix with item 0 as the least significant digit.
    """
    total = (k + 1) ** n
    codes = np.arange(total, dtype=np.int64)
    parts = np.zeros((total, k), dtype=np.int64)
    for v in range(n):
        digit = codes % (k + 1)
        codes //= k + 1
        for i in range(k):
            parts[:, i] |= np.where(digit == i + 1, 1 << v, 0)
    return parts


def brute_force_maso(inst: MasoInstance) -> tuple[float, Allocation]:
    n, k = inst.n, inst.k
    if (k + 1) ** n > ASSIGNMENT_CAP:
        raise CapacityError(f"(k+1)^n = {(k + 1) ** n} exceeds {ASSIGNMENT_CAP}")
    parts = _assignment_parts(n, k)
    union = np.bitwise_or.reduce(parts, axis=1)
    ok = inst.outer.indicator()[union]
    values = np.zeros(parts.shape[0])
    for i, f in enumerate(inst.objectives):
        values += f.table()[parts[:, i]]
        if inst.per_agent is not None:
            ok &= inst.per_agent[i].indicator()[parts[:, i]]
    if not ok.any():
        raise InfeasibleError("no feasible allocation")
    masked = np.where(ok, values, np.inf if inst.sense == "min" else -np.inf)
    r = int(np.argmin(masked) if inst.sense == "min" else np.argmax(masked))
    return float(values[r]), Allocation(parts[r].tolist())


def brute_force_so(f: ValueOracle, F: FeasibleFamily, ground: GroundSet | int | None = None,
                   sense: str = "min") -> tuple[float, int]:
    n = f.n if ground is None else (ground.n if isinstance(ground, GroundSet) else ground)
    if n > BLOCKER_CAP:
        raise CapacityError(f"2^n scan capped at n <= {BLOCKER_CAP}")
    ok = F.indicator()
    if not ok.any():
        raise InfeasibleError("empty family")
    vals = f.table()
    masked = np.where(ok, vals, np.inf if sense == "min" else -np.inf)
    S = int(np.argmin(masked) if sense == "min" else np.argmax(masked))
    return float(vals[S]), S


@dataclass
class Certificate:
    opt_value: float
    opt_allocation: Allocation
    algo_value: float
    ratio: float | None
    feasible: bool
    zero_optimum: bool = False

    def to_json(self) -> dict:
        return {"opt_value": self.opt_value, "opt_allocation": self.opt_allocation.as_lists(),
                "algo_value": self.algo_value, "ratio": self.ratio, "feasible": self.feasible,
                "zero_optimum": self.zero_optimum}


def certify(inst: MasoInstance, allocation: Allocation | list) -> Certificate:
    """Recheck feasibility and value of an algorithm's allocation against the optimum.

    ``ratio`` is algo/opt: at most 1 for maximization, at least 1 for
    minimization. It is None for infeasible outputs and zero optima.
    """
    opt, opt_alloc = brute_force_maso(inst)
    try:
        alloc = allocation if isinstance(allocation, Allocation) else Allocation(allocation)
        feasible = inst.is_feasible(alloc)
        value = inst.cost(alloc)
    except AssertionError:
        alloc, feasible, value = None, False, float("nan")
    zero_opt = abs(opt) <= 1e-12
    ratio = None
    if feasible and not zero_opt:
        ratio = value / opt
    return Certificate(opt, opt_alloc, value, ratio, feasible, zero_opt)


def describe(alloc: Allocation) -> str:
    return " | ".join("{" + ",".join(map(str, members(p))) + "}" for p in alloc.parts)
