import io
import json
import subprocess
import sys

import numpy as np
import pytest

from matorder import choiduality as cd
from matorder import jsonio
from matorder.cli import main
from matorder.matcore import BlockElement, swap_choi
from matorder.ordspace import diagonal_space, full_space


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    text = out.getvalue()
    return code, (json.loads(text) if text else None), err.getvalue()


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(jsonio.dumps(obj))
    return str(p)


@pytest.fixture
def files(tmp_path):
    s = full_space(2)
    ident = cd.MapModel.from_function(s, 2, lambda a: a)
    transpose = cd.MapModel.from_function(s, 2, lambda a: a.T)
    return {
        "id2": write(tmp_path, "id2.json", jsonio.map_to_json(ident)),
        "t2": write(tmp_path, "transpose2.json", jsonio.map_to_json(transpose)),
        "half": write(tmp_path, "half.json", jsonio.map_to_json(ident.scale(-0.5))),
        "swap": write(tmp_path, "swap.json", jsonio.block_to_json(BlockElement(2, 2, swap_choi(2)))),
        "eye4": write(tmp_path, "eye4.json", jsonio.block_to_json(BlockElement(2, 2, np.eye(4)))),
        "ball": write(tmp_path, "ball.json", {"space": "full:2", "kind": "ball_positive"}),
        "twoI": write(tmp_path, "twoI.json", jsonio.matrix_to_json(2 * np.eye(2))),
        "halfI": write(tmp_path, "halfI.json", jsonio.matrix_to_json(np.eye(2) / 2)),
        "space": write(tmp_path, "space.json", "full:2"),
        "dir": tmp_path,
    }


def test_cpcheck_examples(files):
    assert run("cpcheck", "--map", files["id2"])[:2] == (0, {"cp": True})
    code, doc, _ = run("cpcheck", "--map", files["t2"])
    assert code == 2 and doc == {"cp": False, "witness_eig": -1.0}


def test_choi_and_theta(files):
    code, doc, _ = run("choi", "--map", files["t2"])
    assert code == 0 and np.allclose(jsonio.block_from_json(doc).mat, swap_choi(2))
    code, doc, _ = run("theta", "--tau", files["swap"])
    phi = jsonio.map_from_json(doc)
    assert np.allclose(phi(np.array([[0, 1], [0, 0]])), [[0, 0], [1, 0]])


def test_map_file_may_hold_a_choi_block(files, tmp_path):
    p = write(tmp_path, "m.json", {"dom": "full:2", "choi": jsonio.block_to_json(BlockElement(2, 2, swap_choi(2)))})
    assert run("cpcheck", "--map", p)[0] == 2


def test_kraus(files):
    code, doc, _ = run("kraus", "--map", files["id2"])
    assert code == 0 and doc["psd"] and len(doc["gammas"]) == 1
    code, doc, _ = run("kraus", "--tau", files["swap"])
    assert code == 2 and doc["witness_eig"] == pytest.approx(-1.0)
    assert run("kraus", "--tau", files["swap"], "--map", files["id2"])[0] == 64


def test_pair_and_tracenorm(files):
    code, doc, _ = run("pair", "--tau", files["swap"], "--alpha", files["eye4"])
    assert code == 0 and doc == {"re": 2.0, "im": 0.0}
    code, doc, _ = run("tracenorm", "--tau", files["swap"], "--optimizer")
    assert doc["trace_norm"] == pytest.approx(4.0) and "optimizer" in doc


def test_gauge_and_lambda(files, tmp_path):
    g = write(tmp_path, "g.json", {"kind": "scaled", "c": 2.0})
    code, doc, _ = run("gauge", "--element", files["twoI"], "--gauge", g)
    assert code == 0 and doc["value"] == 4.0
    code, doc, _ = run("lambda", "--space", files["space"], "--element", files["twoI"], "--seed", "3")
    assert code == 0 and doc["lambda_upper"] == pytest.approx(2.0)


def test_extend_and_verify(files, tmp_path):
    code, doc, _ = run("extend", "--map", files["half"], "--space", files["space"], "--seed", "2")
    assert code == 0 and doc["status"] == "VALID"
    cert = write(tmp_path, "cert.json", doc)
    code, chk, _ = run("verify", "--cert", cert, "--map", files["half"], "--seed", "9")
    assert code == 0 and chk["status"] == "VALID" and chk["exact_cp_margin"] >= -1e-9
    # psi scaled by 10 no longer satisfies the gauge bound
    doc["psi"]["coeffs"] = [dict(c, re=(10 * np.array(c["re"])).tolist(), im=(10 * np.array(c["im"])).tolist())
                            for c in doc["psi"]["coeffs"]]
    bad = write(tmp_path, "bad.json", doc)
    code, chk, _ = run("verify", "--cert", bad, "--map", files["half"])
    assert code == 2 and chk["status"] == "INVALID"
    assert run("verify", "--cert", cert)[0] == 64


def test_extend_hypothesis_failure(files):
    code, doc, _ = run("extend", "--map", files["t2"])
    assert code == 2 and doc["status"] == "HYPOTHESIS_FAILED"


def test_extend_budget_exit(tmp_path):
    # on the diagonal subspace this map needs several cutting-plane rounds
    s = diagonal_space(2)
    phi = cd.MapModel.from_function(s, 2, lambda x: -np.array([[x[0, 0], 0.9 * x[0, 0]],
                                                               [0.9 * x[0, 0], x[1, 1]]]))
    m = write(tmp_path, "m.json", jsonio.map_to_json(phi))
    code, doc, _ = run("extend", "--map", m, "--budget", "1", "--seed", "2")
    assert code == 3 and doc["status"] == "BUDGET_EXCEEDED"
    code, doc, _ = run("extend", "--map", m, "--seed", "2")
    assert code == 0 and doc["status"] == "VALID" and doc["rounds"] > 1


def test_separate_and_verify(files, tmp_path):
    code, doc, _ = run("separate", "--set", files["ball"], "--point", files["twoI"])
    assert code == 0 and doc["point_margin"] >= 0.4
    cert = write(tmp_path, "sep.json", doc)
    code, chk, _ = run("verify", "--cert", cert, "--set", files["ball"], "--point", files["twoI"])
    assert code == 0 and chk["status"] == "VALID"
    code, doc, _ = run("separate", "--set", files["ball"], "--point", files["halfI"])
    assert code == 2 and doc["status"] == "NOT_SEPARATED"


def test_suite_and_junit(files):
    junit = str(files["dir"] / "r.xml")
    code, doc, _ = run("suite", "--name", "dual-iso", "--seed", "7", "--junit", junit)
    assert code == 0 and doc["suite"] == "dual-iso" and doc["passed"]
    assert open(junit).read().startswith("<testsuites>")
    assert run("suite", "--name", "dual-iso", "--size", "m=99")[0] == 64
    assert run("suite", "--name", "dual-iso", "--size", "m")[0] == 64


def test_usage_errors(files):
    assert run()[0] == 64
    assert run("bogus")[0] == 64
    assert run("cpcheck")[0] == 64
    assert run("cpcheck", "--map", files["id2"], "--extra")[0] == 64
    assert run("suite", "--name", "nope")[0] == 64


def test_data_errors(files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dom": "full:2",\n "cod_level": }')
    code, doc, _ = run("cpcheck", "--map", str(bad))
    assert code == 65 and doc["line"] == 2 and "column" in doc
    code, doc, _ = run("cpcheck", "--map", str(tmp_path / "missing.json"))
    assert code == 65
    wrong = write(tmp_path, "wrong.json", {"dom": "full:2", "cod_level": 2, "coeffs": []})
    assert run("cpcheck", "--map", wrong)[0] == 65
    code, doc, _ = run("verify", "--cert", files["twoI"])
    assert code == 65


def test_output_is_deterministic(files):
    a = run("separate", "--set", files["ball"], "--point", files["twoI"], "--seed", "4")
    b = run("separate", "--set", files["ball"], "--point", files["twoI"], "--seed", "4")
    assert a == b


def test_console_script_reads_stdin(files):
    text = open(files["t2"]).read()
    proc = subprocess.run([sys.executable, "-m", "matorder.cli", "cpcheck", "--map", "-"],
                          input=text, capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["cp"] is False
    assert "-1.0" in proc.stdout


def test_extend_reports_infeasible_master(files, monkeypatch):
    import matorder.hahnbanach as hb

    def boom(*a, **k):
        raise hb.ExtensionInfeasible("master LP infeasible", [3])

    monkeypatch.setattr(hb, "matrix_bonsall_extend", boom)
    code, doc, _ = run("extend", "--map", files["half"])
    assert code == 2 and doc["status"] == "INFEASIBLE" and doc["active_rows"] == [3]
