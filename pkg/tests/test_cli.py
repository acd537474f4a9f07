import json
import subprocess
import sys

import pytest

from quiverrep.cli import dispatch
from quiverrep.rep import HilbertRep


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


PATH3 = {"vertices": ["1", "2", "3"], "arrows": [["a", "1", "2"], ["b", "2", "3"]]}
D4T = {"vertices": ["c", "1", "2", "3", "4"], "arrows": [[f"e{i}", str(i), "c"] for i in range(1, 5)]}


def test_classify_path(tmp_path, capsys):
    code, out = run(capsys, "classify", write(tmp_path, "q.json", PATH3))
    assert code == 0 and out == {"kind": "Dynkin", "type": "A3"}


def test_build_then_check(tmp_path, capsys):
    rep = str(tmp_path / "loop.json")
    assert dispatch(["build", "--kind", "A0_loop", "--n", "3", "--out", rep]) == 0
    assert HilbertRep.from_json(json.loads(open(rep).read())).dims == {"1": 3}
    capsys.readouterr()
    code, out = run(capsys, "check", "--rep", rep)
    assert code == 0 and out == {"verdict": "indecomposable", "end_dim": 3, "radical_dim": 2}


def test_manifest_written_next_to_output(tmp_path):
    out = tmp_path / "x.json"
    assert dispatch(["build", "--kind", "D4_fourspace", "--n", "2", "--out", str(out), "--seed", "7"]) == 0
    m = json.loads((tmp_path / "x.json.manifest.json").read_text())
    assert m["command"] == "build" and m["seed"] == 7 and m["outputs"] == [str(out)]
    assert set(m["tolerance"]) == {"rank_rel_tol", "residual_tol", "eig_cluster_gap"}
    assert m["timings"]["seconds"] >= 0


def test_tolerance_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("QUIVERREP_TOL", "residual_tol=1e-6")
    dispatch(["build", "--kind", "A0_loop", "--n", "2", "--out", str(tmp_path / "a.json")])
    assert json.loads((tmp_path / "a.json.manifest.json").read_text())["tolerance"]["residual_tol"] == 1e-6
    dispatch(["build", "--kind", "A0_loop", "--n", "2", "--out", str(tmp_path / "b.json"), "--tol", "1e-9"])
    assert json.loads((tmp_path / "b.json.manifest.json").read_text())["tolerance"]["residual_tol"] == 1e-9


def test_synthesize_dynkin_is_error(tmp_path, capsys):
    code, out = run(capsys, "synthesize", "--quiver", write(tmp_path, "q.json", PATH3), "--N", "3")
    assert code == 1 and out["error"] == "GraphIsDynkin"


def test_synthesize_sweep(tmp_path, capsys):
    code, out = run(capsys, "synthesize", "--quiver", write(tmp_path, "q.json", D4T), "--N", "2", "--sweep")
    assert code == 0 and out["orientations"] == out["indecomposable"] == 16


def test_synthesize_with_rep(tmp_path, capsys):
    code, out = run(capsys, "synthesize", "--quiver", write(tmp_path, "q.json", D4T), "--N", "2", "--with-rep")
    assert code == 0 and out["certificate"]["witness"] == "D4_tilde"
    assert HilbertRep.from_json(out["rep"]).dims["c"] > 0


def test_plan(tmp_path, capsys):
    target = {"vertices": ["1", "2", "3"], "arrows": [["a", "2", "1"], ["b", "3", "2"]]}
    code, out = run(capsys, "plan", "--from", write(tmp_path, "s.json", PATH3), "--to", write(tmp_path, "t.json", target))
    assert code == 0 and [v for v, _ in out["steps"]] == ["1", "2", "1"]


def test_reflect_and_duality(tmp_path, capsys):
    rep = str(tmp_path / "d4.json")
    dispatch(["build", "--kind", "D4_fourspace", "--n", "2", "--out", rep])
    code, out = run(capsys, "reflect", "--rep", rep, "--vertex", "0", "--sign", "+")
    assert code == 0
    code, out = run(capsys, "duality", "--rep", rep, "--vertex", "0")
    assert code == 0 and out["tilde_dim"] == out["expected_tilde_dim"] == 0
    assert out["lemma_after_reflection"] and out["triple_reflection_residual"] < 1e-8


def test_decompose(tmp_path, capsys):
    rep = {"quiver": {"vertices": ["1", "2"], "arrows": [["a", "1", "2"]]}, "dims": {"1": 1, "2": 1},
           "mats": {"a": {"rows": 1, "cols": 1, "re": [0.0]}}}
    code, out = run(capsys, "decompose", "--rep", write(tmp_path, "r.json", rep))
    assert code == 0 and len(out["summands"]) == 2


def test_export_dot(tmp_path, capsys):
    code, out = run(capsys, "export-dot", write(tmp_path, "q.json", PATH3))
    assert code == 0 and "digraph" in out and '"1" -> "2"' in out


def test_bad_vertex(tmp_path, capsys):
    rep = str(tmp_path / "d4.json")
    dispatch(["build", "--kind", "D4_fourspace", "--n", "1", "--out", rep])
    code, out = run(capsys, "reflect", "--rep", rep, "--vertex", "0", "--sign", "-")
    assert code == 1 and out["error"] == "NotASource"


def test_missing_file(capsys):
    code, out = run(capsys, "classify", "/nonexistent.json")
    assert code == 1 and out["error"] == "BadParameter"


@pytest.mark.parametrize("argv", [["bogus"], [], ["build", "--kind", "A0_loop"]])
def test_usage_errors(argv, capsys):
    assert dispatch(argv) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "quiverrep", "build", "--kind", "A0_loop", "--n", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["dims"] == {"1": 1}
