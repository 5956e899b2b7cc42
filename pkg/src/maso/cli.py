"""Command line: generate instances, run algorithms over seeds, verify property suites, lift graphs."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import oracle
from .core import CapacityError, InfeasibleError, InvariantViolation, MasoInstance, PreconditionError
from .instances import GENERATORS, GRAPHS, generate, instance_from_json, instance_to_json
from .lifting import lift_graph
from .maximize import (
    DEFAULT_STEPS, PolytopeOracle, hypercube, lifted_greedy, maximize_pipeline,
    nonmonotone_slot, outer_p, partition_polytope,
)
from .minimize import (
    bounded_blocker_round, crossing_family_solve, exact_rounder, fracture_expand_return,
    k_approx_round, solve_ma_le, threshold_rounder,
)

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVARIANT, EXIT_SPEC = 0, 1, 2, 3

COLUMNS = ["instance_id", "algorithm", "seed", "feasible", "value", "fractional_value", "ratio",
           "runtime_ms", "error"]

UPWARD = {"upward-closed-with-blocker", "trivial-V"}
PACKING = {"matroid-independent-sets", "p-system", "full-powerset"}


def _polytope(inst: MasoInstance) -> PolytopeOracle:
    # rounding is implemented for partition and uniform matroids only
    fam = inst.outer
    if fam.kind == "full-powerset":
        return hypercube(inst.n)
    if fam.parts is not None:
        return partition_polytope(fam)
    raise PreconditionError(f"no roundable polytope for family kind {fam.kind!r}")


def _has_polytope(inst: MasoInstance) -> bool:
    return inst.outer.parts is not None


def _run_k_approx(inst, seed):
    return k_approx_round(inst, sa_rounder=exact_rounder, seed=seed)


def _run_fracture(inst, seed):
    beta = inst.outer.beta or 1
    return fracture_expand_return(inst, solve_ma_le(inst), threshold_rounder(beta), seed)


def _run_bounded(inst, seed):
    return bounded_blocker_round(inst, solve_ma_le(inst), inst.outer.beta, seed)


def _run_pipeline(inst, seed, steps=DEFAULT_STEPS):
    return maximize_pipeline(inst, _polytope(inst), steps, seed)


def _run_nonmonotone(inst, seed, steps=DEFAULT_STEPS):
    return nonmonotone_slot(inst, _polytope(inst), seed=seed)


def _run_lifted_greedy(inst, seed):
    p = outer_p(inst) if inst.n <= 10 else None
    return lifted_greedy(inst, seed, p)


@dataclass(frozen=True)
class Algorithm:
    name: str
    sense: str
    applies: Callable[[MasoInstance], bool]
    run: Callable


ALGORITHMS = {a.name: a for a in [
    Algorithm("k_approx", "min", lambda i: i.outer.kind in UPWARD and i.per_agent is None, _run_k_approx),
    Algorithm("fracture_expand_return", "min",
              lambda i: i.outer.kind in UPWARD and i.per_agent is None, _run_fracture),
    Algorithm("bounded_blocker", "min", lambda i: i.outer.kind in UPWARD and i.per_agent is None,
              _run_bounded),
    Algorithm("crossing_family", "min", lambda i: i.outer.kind in ("crossing", "ring") and i.per_agent is None,
              crossing_family_solve),
    Algorithm("maximize_pipeline", "max",
              lambda i: _has_polytope(i) and i.per_agent is None and all(f.claims_monotone for f in i.objectives),
              _run_pipeline),
    Algorithm("nonmonotone_slot", "max", lambda i: _has_polytope(i) and i.per_agent is None, _run_nonmonotone),
    Algorithm("lifted_greedy", "max", lambda i: i.outer.kind in PACKING, _run_lifted_greedy),
]}


def check_applicable(inst: MasoInstance, name: str) -> None:
    if name not in ALGORITHMS:
        raise PreconditionError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    algo = ALGORITHMS[name]
    if algo.sense != inst.sense:
        raise PreconditionError(f"{name} solves {algo.sense} instances, not {inst.sense}")
    if not algo.applies(inst):
        raise PreconditionError(f"{name} does not apply to family kind {inst.outer.kind!r}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_cell(args: tuple) -> dict:
    """One (instance, algorithm, seed) cell. Never raises; failures land in ``error``."""
    inst_id, data, name, seed, certify, timing = args
    row = {"instance_id": inst_id, "algorithm": name, "seed": seed, "feasible": None, "value": None,
           "fractional_value": None, "ratio": None, "runtime_ms": None, "error": None,
           "allocation": None, "opt_value": None, "opt_allocation": None, "status": "ok"}
    inst = instance_from_json(data)
    start = time.perf_counter()
    try:
        res = ALGORITHMS[name].run(inst, seed)
    except InvariantViolation as exc:
        row.update(error=f"invariant violation: {exc}", status="invariant")
        return row
    except (CapacityError, PreconditionError, InfeasibleError) as exc:
        row.update(error=f"{type(exc).__name__}: {exc}", status="capacity")
        return row
    elapsed = (time.perf_counter() - start) * 1000
    value = getattr(res, "value", None)
    if value is None:
        value = res.cost
    row.update(feasible=bool(res.feasible), value=float(value),
               fractional_value=None if res.fractional_value is None else float(res.fractional_value),
               allocation=res.allocation.as_lists())
    if timing:
        row["runtime_ms"] = round(elapsed, 3)
    if not res.feasible:
        row["status"] = "infeasible"
    if certify:
        try:
            cert = oracle.certify(inst, res.allocation)
            row.update(ratio=cert.ratio, opt_value=cert.opt_value,
                       opt_allocation=cert.opt_allocation.as_lists())
        except CapacityError as exc:
            row["error"] = f"certificate skipped: {exc}"
    return row


def parse_seeds(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def run_experiment(instances: list[tuple[str, dict]], algorithms: list[str], seeds: list[int],
                   jobs: int = 1, certify: bool = True, timing: bool = False) -> list[dict]:
    for inst_id, data in instances:
        inst = instance_from_json(data)
        for name in algorithms:
            check_applicable(inst, name)
    cells = [(iid, data, name, seed, certify, timing)
             for iid, data in instances for name in algorithms for seed in seeds]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["instance_id"], r["algorithm"], r["seed"]))
    return rows


def exit_code(rows: list[dict]) -> int:
    statuses = {r["status"] for r in rows}
    if "invariant" in statuses:
        return EXIT_INVARIANT
    if "infeasible" in statuses:
        return EXIT_INFEASIBLE
    if "capacity" in statuses:
        return EXIT_SPEC
    return EXIT_OK


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: v for k, v in r.items() if k != "status"} for r in rows]
        return json.dumps(clean, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _parse_params(pairs: list[str]) -> dict:
    out = {}
    for p in pairs:
        if "=" not in p:
            raise ValueError(f"parameter {p!r} is not key=value")
        key, raw = p.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _write(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args) -> int:
    params = _parse_params(args.param)
    inst = generate(args.kind, args.seed, **params)
    iid = args.id or f"{args.kind}-s{args.seed}"
    _write(json.dumps(instance_to_json(inst, iid), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    instances = []
    for path in args.instance:
        data = json.loads(Path(path).read_text())
        instances.append((data.get("id") or Path(path).stem, data))
    if args.caps_override:
        oracle.ASSIGNMENT_CAP = args.caps_override
    rows = run_experiment(instances, args.algo, parse_seeds(args.seeds), args.jobs,
                          certify=not args.no_certify, timing=args.timing)
    _write(render(rows, args.format), args.out)
    return exit_code(rows)


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite
    if args.suite == "acceptance" and args.caps_override:
        print("caps override is refused for acceptance runs", file=sys.stderr)
        return EXIT_SPEC
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_SPEC
    ok = run_suite(args.suite, print)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_lift_graph(args) -> int:
    if args.graph:
        nodes, edges = GRAPHS[args.graph]
    else:
        nodes = args.nodes
        edges = [tuple(int(x) for x in e.split("-")) for e in args.edges.split(",") if e]
    _write(lift_graph(nodes, edges, args.k).to_json() + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maso", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a seeded instance as JSON")
    g.add_argument("kind", choices=GENERATORS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", "-p", action="append", default=[], metavar="KEY=VALUE",
                   help="generator parameter; values parse as JSON when possible")
    g.add_argument("--id", default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(fn=cmd_generate)

    r = sub.add_parser("run", help="run algorithms over seeds and write a report")
    r.add_argument("--instance", action="append", default=[], required=True)
    r.add_argument("--algo", action="append", default=[], choices=sorted(ALGORITHMS))
    r.add_argument("--seeds", default="0..0", help="inclusive range a..b or a comma list")
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--timing", action="store_true", help="fill runtime_ms (reports stop being byte-stable)")
    r.add_argument("--no-certify", action="store_true", help="skip brute-force certificates")
    r.add_argument("--caps-override", type=int, default=None, metavar="CAP",
                   help="raise the brute-force assignment cap")
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite")
    v.add_argument("--caps-override", type=int, default=None, metavar="CAP")
    v.set_defaults(fn=cmd_verify)

    lg = sub.add_parser("lift-graph", help="emit the k-fold lifted multigraph as adjacency JSON")
    src = lg.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", choices=sorted(GRAPHS))
    src.add_argument("--edges", help="comma list like 0-1,1-2")
    lg.add_argument("--nodes", type=int, default=None)
    lg.add_argument("--k", type=int, required=True)
    lg.add_argument("--out", default=None)
    lg.set_defaults(fn=cmd_lift_graph)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "edges", None) and args.nodes is None:
        args.nodes = 1 + max(int(x) for e in args.edges.split(",") if e for x in e.split("-"))
    try:
        return args.fn(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (CapacityError, PreconditionError, InfeasibleError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
