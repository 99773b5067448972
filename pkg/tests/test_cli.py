import json
import os
import subprocess
import sys

import numpy as np
import pytest

from bilapnet.cli import main

P3 = {"vertices": 3, "edges": [{"source": 0, "target": 1}, {"source": 1, "target": 2}]}
STAR3 = {"vertices": 4, "edges": [{"source": 0, "target": k, "length": 1.0} for k in (1, 2, 3)]}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, data in (("p3", P3), ("star3", STAR3)):
        out[name] = tmp_path / f"{name}.json"
        out[name].write_text(json.dumps(data))
    eye = np.eye(4).tolist()
    out["bad_cb"] = tmp_path / "bad_cb.json"
    out["bad_cb"].write_text(json.dumps({"C": eye, "B": [[0, 1, 0, 0]] + [[0] * 4] * 3}))
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_discrete_check_prints_the_matrix(files, capsys, tmp_path):
    code, out, _ = run(capsys, "discrete", "check", "--graph", files["p3"], "--t", 0.1, "--out", tmp_path / "o")
    assert code == 0
    assert "0.8535  0.1978 -0.0513" in out and "not sub-Markovian" in out
    d = json.loads((tmp_path / "o" / "discrete_check.json").read_text())
    assert np.allclose(d["result"]["semigroup"][1][1], 0.6044, atol=1e-4)
    assert d["config"]["t"] == 0.1 and d["tool_version"] == "0.1.0"


def test_metric_kernel_krein_star(files, capsys):
    code, out, _ = run(capsys, "metric", "kernel", "--preset", "krein", "--graph", files["star3"])
    assert code == 0 and out.strip() == "kernel dimension: 7"


def test_conditions_verify_rejects_non_hermitian(files, capsys):
    code, _, err = run(capsys, "conditions", "verify", "--cb", files["bad_cb"])
    assert code == 2 and "CB* not Hermitian" in err


def test_conditions_convert_roundtrip(capsys, tmp_path):
    code, out, _ = run(capsys, "conditions", "convert", "--graph", "path:2", "--preset", "friedrichs")
    assert code == 0
    cb = tmp_path / "cb.json"
    cb.write_text(out)
    code, out2, _ = run(capsys, "conditions", "convert", "--cb", cb)
    assert code == 0 and "Y_basis" in json.loads(out2)
    code, out3, _ = run(capsys, "conditions", "verify", "--cb", cb)
    assert code == 0 and "self-adjoint" in out3


def test_graph_shorthand_and_bad_shorthand(capsys):
    assert run(capsys, "discrete", "gap", "--graph", "complete:4")[0] == 0
    assert run(capsys, "discrete", "gap", "--graph", "wheel:4")[0] == 2
    assert run(capsys, "discrete", "gap", "--graph", "path:x")[0] == 2
    assert run(capsys, "discrete", "gap", "--graph", "nofile")[0] == 2


def test_unknown_tolerance_name(files, capsys):
    code, _, err = run(capsys, "discrete", "check", "--graph", files["p3"], "--tol", "wiggle=1")
    assert code == 2 and "--tol" in err
    assert run(capsys, "discrete", "check", "--graph", files["p3"], "--tol", "positivity=1e-8")[0] == 0


def test_discrete_evolve_and_scan(capsys, tmp_path):
    code, out, _ = run(capsys, "discrete", "evolve", "--graph", "path:3", "--f0", "1,0,0", "--out", tmp_path)
    assert code == 0 and "t* = 0.390723" in out
    header = (tmp_path / "discrete_evolve.csv").read_text().splitlines()[3]
    assert header == "t,u0,u1,u2"
    code, out, _ = run(capsys, "discrete", "scan", "--graph", "star:2", "--f", "1,1.75,-1", "--p", "2,5.72")
    assert "kappa_f(2) = 6.125" in out and "(negative)" in out
    code, out, _ = run(capsys, "discrete", "scan", "--graph", "star:2", "--p", "6")
    assert code == 0 and "witness at p = 6" in out


def test_metric_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "metric", "spectrum", "--graph", "path:2", "--mesh", 32, "--k", 3)
    vals = [float(line.split()[1]) for line in out.splitlines()]
    assert code == 0 and abs(vals[1] / np.pi**4 - 1) < 1e-5
    code, out, _ = run(capsys, "metric", "classify", "--graph", "cycle:3", "--preset", "cont_deriv")
    assert code == 0 and "verdict: eventually_sub_markovian" in out
    code, out, _ = run(capsys, "metric", "ultra", "--graph", "path:2", "--mesh", 128)
    slope = float(out.split(":")[-1])
    assert code == 0 and -0.33 <= slope <= -0.17
    code, out, _ = run(capsys, "metric", "evolve", "--graph", "path:2", "--mesh", 64, "--out", tmp_path)
    assert code == 0 and "transition time" in out
    assert (tmp_path / "metric_evolve.csv").exists()


def test_kiik_parameters(capsys):
    args = ["metric", "kernel", "--graph", "star:3", "--preset", "kiik",
            "--param", "alpha=2", "--param", "beta=2", "--param", "gamma=2.2831853071795862"]
    assert run(capsys, *args)[0] == 0
    assert run(capsys, *args[:-2], "--param", "gamma=0", "--param", "alpha=0")[0] == 2
    code, _, err = run(capsys, "metric", "kernel", "--graph", "path:3", "--preset", "kiik")
    assert code == 2


def test_outputs_are_byte_identical(files, tmp_path, capsys):
    for d in ("a", "b"):
        run(capsys, "metric", "classify", "--graph", files["star3"], "--preset", "krein",
            "--out", tmp_path / "same")
        (tmp_path / d).mkdir()
        (tmp_path / "same" / "metric_classify.json").rename(tmp_path / d / "c.json")
    assert (tmp_path / "a" / "c.json").read_bytes() == (tmp_path / "b" / "c.json").read_bytes()


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "bilapnet.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout


def test_pure_python_fallback_end_to_end():
    env = dict(os.environ, BILAPNET_PURE_PYTHON="1")
    code = ("import bilapnet; assert bilapnet.BACKEND == 'python'; "
            "from bilapnet.cli import main; raise SystemExit(main(['metric', 'kernel', "
            "'--graph', 'star:3', '--preset', 'krein']))")
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert res.returncode == 0 and res.stdout.strip() == "kernel dimension: 7"


def test_reproduce_table_and_exit_code(capsys, tmp_path, monkeypatch):
    from bilapnet import reproduce
    monkeypatch.setattr(reproduce, "CRITERIA", [reproduce.criterion_2, reproduce.criterion_4])
    code, out, _ = run(capsys, "reproduce-paper", "--out", tmp_path)
    assert code == 0 and out.count("[PASS]") == 2 and "2/2 criteria passed" in out
    rows = json.loads((tmp_path / "reproduce.json").read_text())["result"]["criteria"]
    assert [r["status"] for r in rows] == ["PASS", "PASS"]
    failing = reproduce._timed(99, "always fails")(lambda: (False, "by construction"))
    monkeypatch.setattr(reproduce, "CRITERIA", [reproduce.criterion_2, failing])
    code, out, _ = run(capsys, "reproduce-paper")
    assert code == 1 and "[FAIL] 99. always fails" in out and "1/2 criteria passed" in out
