import csv
import io
import json
import subprocess
import sys

import pytest

from filtra.cli import run
from filtra.graph import load_graph, validate_equipment
from filtra.realization import filtration_to_dict, random_filtration


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_graph_build_validate_and_dim(tmp_path, capsys):
    path = tmp_path / "p.json"
    code, _, _ = call(capsys, "graph", "build", "--family", "pascal", "--depth", 6, "--out", path)
    assert code == 0
    g, eq = load_graph(path)
    assert validate_equipment(g, eq) is None
    assert call(capsys, "graph", "validate", "--graph", path)[0] == 0
    code, out, _ = call(capsys, "dim", "--graph", path, "--vertex", "6,3")
    assert code == 0 and out.strip() == "20"


def test_validation_failure_exits_1_with_json(tmp_path, capsys):
    path = tmp_path / "p.json"
    call(capsys, "graph", "build", "--family", "pascal", "--depth", 3, "--out", path)
    data = json.loads(path.read_text())
    data["edges"][-1]["lambda"] = ["1/7"]
    path.write_text(json.dumps(data))
    code, _, err = call(capsys, "graph", "validate", "--graph", path)
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "validation"


def test_size_cap_exits_2(capsys):
    code, _, err = call(capsys, "graph", "build", "--family", "ordered_pairs", "--depth", 7)
    assert code == 2 and json.loads(err)["error"] == "size"


def test_dry_run_computes_nothing(tmp_path, capsys):
    out_path = tmp_path / "never.csv"
    code, out, _ = call(capsys, "standardness", "--graph", "pascal:30", "--measure", "lebesgue", "--n", "1..30", "--out", out_path, "--dry-run")
    assert code == 0 and not out_path.exists()
    assert json.loads(out)["dry_run"] is True


def test_standardness_csv(capsys):
    code, out, err = call(capsys, "standardness", "--graph", "pascal:12", "--measure", "lebesgue", "--f", "first-step:1,1", "--n", "4..6")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "S_n", "eps_n", "pairs_evaluated", "semantics"]
    assert [r[1] for r in rows[1:]] == ["9/52", "1/7", "25/181"]
    assert "verdict" in json.loads(err)


def test_standardness_builtin_chain(capsys):
    code, out, _ = call(capsys, "standardness", "--graph", "two_state:3/4:6", "--n", "1..6", "--semantics", "orbit")
    assert code == 0
    assert {r[1] for r in list(csv.reader(io.StringIO(out)))[1:]} == {"1/2"}


def test_entropy(capsys):
    code, out, _ = call(capsys, "entropy", "--graph", "two_state:3/4:4", "--n", "1..4")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["entropy"] for r in rows] == ["2"] * 4


def test_minimize_with_map_and_measure(tmp_path, capsys):
    q, mp, mo = tmp_path / "q.json", tmp_path / "map.json", tmp_path / "m.json"
    code, _, _ = call(capsys, "minimize", "--graph", "pascal:8", "--out", q, "--map", mp, "--measure", "lebesgue", "--measure-out", mo)
    assert code == 0
    g, _ = load_graph(q)
    assert [len(lv) for lv in g.levels] == [n // 2 + 1 for n in range(9)]
    vmap = json.loads(mp.read_text())
    assert vmap["8,1"] == vmap["8,7"] != vmap["8,2"]
    assert json.loads(mo.read_text())["levels"][0]


def test_realize(tmp_path, capsys):
    fin = tmp_path / "f.json"
    fin.write_text(json.dumps(filtration_to_dict(random_filtration(3, depth=3, max_atoms=20))))
    gout, pout = tmp_path / "g.json", tmp_path / "paths.json"
    code, _, _ = call(capsys, "realize", "--in", fin, "--out", gout, "--paths-out", pout)
    assert code == 0
    g, eq = load_graph(gout)
    assert validate_equipment(g, eq) is None
    assert len(json.loads(pout.read_text())) >= 1


def test_extremality(capsys):
    code, out, _ = call(capsys, "extremality", "--measure", "bernoulli:3/10", "--m", 3, "--N", "25,50")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    spreads = [float(r[-1]) for r in rows[1:]]
    assert len(spreads) == 2 and spreads[1] < spreads[0]


def test_mdist(capsys):
    code, out, _ = call(capsys, "mdist", "--triple", "two-point", "--k", 3, "--count", 2000, "--seed", 1)
    assert code == 0 and json.loads(out)
    code, out, _ = call(capsys, "mdist", "--triple", "interval:100", "--compare", "two-point", "--count", 2000, "--seed", 1)
    assert code == 0 and json.loads(out)["compare_score"] > 0.05


def test_sample_and_rwrs(capsys):
    code, out, _ = call(capsys, "sample", "--graph", "pascal:10", "--measure", "bernoulli:1/3", "--n", 10, "--count", 5, "--seed", 7)
    assert code == 0 and len(out.strip().splitlines()) == 5
    code, out, _ = call(capsys, "rwrs", "--n", 6, "--count", 3, "--seed", 2)
    assert code == 0 and len(out.strip().splitlines()) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["sample", "--graph", "pascal:10", "--measure", "bernoulli:1/3", "--n", "10", "--count", "20", "--seed", "7"],
        ["standardness", "--graph", "pascal:9", "--measure", "lebesgue", "--n", "1..9", "--threads", "3"],
        ["rwrs", "--n", "8", "--count", "10", "--seed", "4"],
        ["mdist", "--triple", "interval:50", "--count", "500", "--seed", "3"],
    ],
)
def test_outputs_are_byte_identical_across_runs(capsys, argv):
    first = call(capsys, *argv)
    second = call(capsys, *argv)
    assert first[0] == 0 and first == second


def test_module_entry_point_and_version():
    res = subprocess.run([sys.executable, "-m", "filtra", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "filtra.graph/1" in res.stdout
    res = subprocess.run([sys.executable, "-m", "filtra", "dim", "--graph", "nosuchfamily"], capture_output=True, text=True)
    assert res.returncode == 1 and json.loads(res.stderr.strip().splitlines()[-1])["error"]
