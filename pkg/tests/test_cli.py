import csv
import io
import json

import numpy as np
import pytest

from maso.cli import COLUMNS, main, parse_seeds
from maso.core import compute_blocker, members
from maso.instances import GENERATORS, generate, instance_from_json, instance_to_json


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def gen(kind, out, *params, seed=0):
    args = ["generate", kind, "--seed", str(seed), "--out", str(out)]
    for p in params:
        args += ["-p", p]
    assert main(args) == 0
    return json.loads(out.read_text())


@pytest.mark.parametrize("kind", GENERATORS)
def test_round_trip_on_probes(kind):
    inst = generate(kind, 11)
    back = instance_from_json(json.dumps(instance_to_json(inst, kind)))
    rng = np.random.default_rng(0)
    for S in rng.integers(0, 1 << inst.n, size=100).tolist():
        assert [f(S) for f in inst.objectives] == [f(S) for f in back.objectives]
        assert inst.outer(S) == back.outer(S)
    assert back.sense == inst.sense and back.k == inst.k


@pytest.mark.parametrize("kind", GENERATORS)
def test_generated_objectives_keep_claims(kind):
    from maso.core import check_monotone, check_submodular
    inst = generate(kind, 5)
    for f in inst.objectives:
        assert check_submodular(f, f.n)
        if f.claims_monotone:
            assert check_monotone(f, f.n)


def test_generate_is_deterministic(workdir):
    a = gen("welfare", workdir / "a.json", "n=4", "k=2", seed=7)
    gen("welfare", workdir / "b.json", "n=4", "k=2", seed=7)
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()
    assert a["k"] == 2 and a["n"] == 4 and a["sense"] == "max"
    assert all(o["type"] == "coverage" for o in a["objectives"])


def test_vertex_cover_file_holds_edge_blocker(workdir):
    data = gen("vertex-cover", workdir / "vc.json", "graph=K3", "k=2", "costs=modular")
    inst = instance_from_json(data)
    edges = sorted(sorted(e) for e in data["outer_family"]["edges"])
    assert edges == [[0, 1], [0, 2], [1, 2]]
    assert sorted(members(B) for B in compute_blocker(inst.outer)) == edges
    assert sorted(data["blocker"]) == edges


def test_sensor_family_is_rank_two_uniform(workdir):
    data = gen("sensor", workdir / "s.json", "b=2")
    assert data["outer_family"] == {"type": "uniform-matroid", "n": 4, "rank": 2}
    assert instance_from_json(data).outer.kind == "matroid-independent-sets"


def test_empty_algorithm_list(workdir, capsys):
    gen("welfare", workdir / "w.json")
    assert main(["run", "--instance", "w.json", "--seeds", "0..3"]) == 0
    out = capsys.readouterr().out
    assert out.strip() == ",".join(COLUMNS)


def test_cell_count_and_byte_identical_parallel(workdir):
    gen("welfare", workdir / "w.json", "n=4", "k=2", seed=7)
    base = ["run", "--instance", "w.json", "--algo", "lifted_greedy", "--algo", "maximize_pipeline",
            "--seeds", "0..49"]
    assert main(base + ["--out", "one.csv"]) == 0
    assert main(base + ["--out", "par.csv", "--jobs", "3"]) == 0
    assert (workdir / "one.csv").read_bytes() == (workdir / "par.csv").read_bytes()
    rows = list(csv.DictReader(io.StringIO((workdir / "one.csv").read_text())))
    assert len(rows) == 100
    keys = [(r["instance_id"], r["algorithm"], int(r["seed"])) for r in rows]
    assert keys == sorted(keys)


def test_vertex_cover_suite_all_feasible(workdir):
    for s in range(3):
        gen("vertex-cover", workdir / f"vc{s}.json", "n=5", "k=2", seed=s)
    args = ["run", "--algo", "fracture_expand_return", "--seeds", "0..9", "--format", "json",
            "--out", "r.json"]
    for s in range(3):
        args += ["--instance", f"vc{s}.json"]
    assert main(args) == 0
    rows = json.loads((workdir / "r.json").read_text())
    assert len(rows) == 30 and all(r["feasible"] for r in rows)
    assert all(r["ratio"] >= 1 - 1e-9 for r in rows)
    assert all(len(r["allocation"]) == 2 for r in rows)


def test_inapplicable_algorithm_is_spec_error(workdir):
    gen("welfare", workdir / "w.json")
    assert main(["run", "--instance", "w.json", "--algo", "k_approx"]) == 3


def test_verify_refuses_cap_override_for_acceptance():
    assert main(["verify", "acceptance", "--caps-override", "100"]) == 3
    assert main(["verify", "no-such-suite"]) == 3


def test_verify_core_suite(capsys):
    assert main(["verify", "core"]) == 0
    assert "suite core: ok" in capsys.readouterr().out


def test_lift_graph_output(capsys):
    assert main(["lift-graph", "--graph", "K3", "--k", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["k"] == 2 and sum(len(v) for v in data["adjacency"].values()) == 12
    assert main(["lift-graph", "--edges", "0-1,1-2", "--k", "1"]) == 0


def test_parse_seeds():
    assert parse_seeds("2..4") == [2, 3, 4]
    assert parse_seeds("5") == [5]
    with pytest.raises(ValueError):
        parse_seeds("4..2")


@pytest.mark.parametrize("kind", GENERATORS)
def test_every_applicable_algorithm_runs_clean(kind):
    from maso.cli import ALGORITHMS, exit_code, run_experiment
    inst = generate(kind, 1)
    names = [a.name for a in ALGORITHMS.values() if a.sense == inst.sense and a.applies(inst)]
    assert names
    rows = run_experiment([(kind, instance_to_json(inst, kind))], names, [0, 1])
    assert exit_code(rows) == 0
    assert all(r["feasible"] and not r["error"] for r in rows)
    for r in rows:
        if r["ratio"] is not None:
            assert (r["ratio"] >= 1 - 1e-9) if inst.sense == "min" else (r["ratio"] <= 1 + 1e-9)
