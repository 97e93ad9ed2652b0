import json
import subprocess
import sys
from fractions import Fraction

import pytest

from tsp12.cli import git_blob_hash, main
from tsp12.dualcert import DualCertificate
from tsp12.instance import Instance, Tour, two_triangles, w9
from tsp12.subtour import FracSolution, solve_f2m_lp


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


@pytest.fixture
def w9_file(files):
    return files("w9.json", w9().dumps())


def test_lp_and_hash(capsys, w9_file):
    code, rep, _ = run(capsys, "lp", "--instance", w9_file, "--verify")
    assert code == 0 and rep["objective"] == "9"
    assert rep["verified"] == {"optimality_certificate": True, "exhaustive_cuts": True}
    assert rep["instance_hash"] == git_blob_hash(open(w9_file, "rb").read())
    assert FracSolution.from_json(rep, 9).objective == 9


def test_ip_and_oracle(capsys, w9_file):
    code, rep, _ = run(capsys, "ip", "--instance", w9_file, "--verify")
    assert code == 0 and rep["cost"] == 10 and rep["verified"] == {"held_karp": 10}
    assert Tour.from_json(rep["tour"]).cost == 10
    code, rep, _ = run(capsys, "oracle", "--instance", w9_file, "--verify")
    assert code == 0 and rep["cost"] == 10 and rep["verified"] == {"brute_force": 10}


def test_f2m(capsys, w9_file):
    code, rep, _ = run(capsys, "f2m", "--instance", w9_file, "--canonicalize", "--verify")
    assert code == 0 and rep["objective"] == "9"
    (comp,) = rep["decomposition"]["fractional_components"]
    assert len(comp["half_cycles"]) == 2 and len(comp["one_paths"]) == 3
    assert rep["canonical"] and rep["two_connected"]


def test_two_match(capsys, w9_file, files):
    code, rep, _ = run(capsys, "two-match", "--instance", w9_file, "--normalize", "--verify")
    assert code == 0 and rep["cost"] == 10 and rep["normalized"] and rep["r"] == 0
    tri = files("tri.json", two_triangles().dumps())
    code, rep, _ = run(capsys, "two-match", "--instance", tri)
    assert code == 0 and rep["cost"] == 6 and rep["r"] == 2


@pytest.mark.parametrize("method, ratio", [("76", "10/9"), ("109", "10/9"), ("f2m", "10/9"),
                                           ("stitch", "1")])
def test_tour_methods(capsys, w9_file, method, ratio):
    code, rep, _ = run(capsys, "tour", "--instance", w9_file, "--method", method, "--verify")
    assert code == 0 and rep["tour"]["cost"] == 10 and rep["ratio"] == ratio


def test_tour_trace(capsys, w9_file):
    code, rep, _ = run(capsys, "tour", "--instance", w9_file, "--method", "76", "--trace")
    assert code == 0 and rep["trace"] and {"kind", "added"} <= set(rep["trace"][0])


def test_dual_build_and_check(capsys, files):
    tri = files("tri.json", two_triangles().dumps())
    code, rep, _ = run(capsys, "dual", "--instance", tri, "--verify")
    assert code == 0 and rep["r"] == 2 and rep["certificate"]["value"] == "8"
    cert = files("cert.json", rep["certificate"])
    code, rep, _ = run(capsys, "dual", "--instance", tri, "--check", cert)
    assert code == 0 and rep["feasible"] is True and rep["value"] == "8"
    bad = DualCertificate.from_json(json.load(open(cert)))
    bad.y_node[0] = Fraction(3, 2)
    bad_file = files("bad.json", bad.to_json())
    code, _, err = run(capsys, "dual", "--instance", tri, "--check", bad_file)
    assert code == 3 and err["error"] == "DualInfeasible" and "load" in err["message"]


def test_enum(capsys, tmp_path):
    code, rep, _ = run(capsys, "enum", "count", "--n", "6", "--verify")
    assert code == 0 and rep["count"] == 56 and rep["verified"] == {"orderly": 56}
    ck = str(tmp_path / "ck.jsonl")
    code, rep, _ = run(capsys, "enum", "sweep", "--n", "6", "--checkpoint", ck, "--verify")
    assert code == 0 and rep["count"] == 56 and rep["worst_ratio"] == "1"
    with open(ck, "a") as fh:
        fh.write('{"cert": "6:0')
    code, _, err = run(capsys, "enum", "sweep", "--n", "6", "--checkpoint", ck)
    assert code == 3 and err["error"] == "CheckpointError"


def test_cost_search(capsys, files):
    vertex = files("x.json", solve_f2m_lp(w9()).to_json())
    code, rep, _ = run(capsys, "cost-search", "--vertex", vertex, "--alpha", "10/9", "--n", "9",
                       "--verify")
    assert code == 0 and rep["objective"] == "0" and rep["verified"] == {"held_karp": 10}
    tri = FracSolution(6, {(0, 1): 1, (1, 2): 1, (0, 2): 1, (3, 4): 1, (4, 5): 1, (3, 5): 1},
                       Fraction(6))
    code, _, err = run(capsys, "cost-search", "--vertex", files("t.json", tri.to_json()),
                       "--alpha", "16/15")
    assert code == 2 and err["error"] == "InvalidVertex"


def test_transforms(capsys, files):
    tri = files("tri.json", two_triangles().dumps())
    code, rep, _ = run(capsys, "transform", "--instance", tri, "connectify", "--verify")
    assert code == 0 and Instance.from_json(rep["instance"]).n == 7
    code, rep, _ = run(capsys, "transform", "--instance", tri, "absorber", "--verify")
    assert code == 0 and "rerouted" in rep
    code, _, err = run(capsys, "transform", "--instance", tri, "biconnectify")
    assert code == 2 and err["error"] == "TransformNotApplicable"


def test_precondition_and_input_errors(capsys, files):
    tri = files("tri.json", two_triangles().dumps())
    code, _, err = run(capsys, "tour", "--instance", tri, "--method", "76")
    assert code == 2 and err["error"] == "PreconditionError"
    bad = files("bad.json", {"n": 3, "one_edges": [[2, 1]]})
    assert run(capsys, "lp", "--instance", bad)[0] == 2
    assert run(capsys, "lp", "--instance", files("junk.json", "{"))[0] == 2
    assert run(capsys, "lp", "--instance", "/nonexistent.json")[0] == 2


def test_budget_exit_code(capsys, w9_file, monkeypatch):
    monkeypatch.setenv("TSP12_PIVOT_BUDGET", "3")
    code, _, err = run(capsys, "lp", "--instance", w9_file)
    assert code == 4 and err["error"] == "PivotBudgetExceeded"
    monkeypatch.setenv("TSP12_PIVOT_BUDGET", "20000")
    monkeypatch.setenv("TSP12_NODE_BUDGET", "1")
    code, _, err = run(capsys, "ip", "--instance", w9_file)
    assert code == 4 and err["best"] == "10"


def test_out_file(capsys, w9_file, tmp_path):
    out = tmp_path / "rep.json"
    assert run(capsys, "oracle", "--instance", w9_file, "--out", str(out))[0] == 0
    assert json.loads(out.read_text())["cost"] == 10


def test_console_script(w9_file):
    proc = subprocess.run([sys.executable, "-m", "tsp12.cli", "oracle", "--instance", w9_file],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["cost"] == 10
