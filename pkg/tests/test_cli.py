import csv
import io
import json

import numpy as np
import pytest

from ensrlab.cli import clamp_eps, fmt, main, parse_eps
from ensrlab.errors import InputError
from ensrlab.prob import JointDistribution
from ensrlab.verify import load_fixture


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def joint_file(tmp_path):
    def write(name_or_joint):
        j = load_fixture(name_or_joint) if isinstance(name_or_joint, str) else name_or_joint
        path = tmp_path / "joint.json"
        path.write_text(json.dumps(j.to_dict()))
        return str(path)
    return write


def test_fmt_and_parse():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(float("inf")) == "inf"
    assert fmt("grid") == "grid"
    assert parse_eps("0:0.2:0.1") == [0.0, 0.1, 0.2]
    assert parse_eps("0.3, 0.1") == [0.3, 0.1]
    for bad in ("a,b", "0:1", "1:0:0.1", "0:1:0", ""):
        with pytest.raises(InputError):
            parse_eps(bad)


def test_clamp_eps_warns():
    err = io.StringIO()
    assert clamp_eps([-0.1, 0.2, 0.9, 0.64 + 1e-13], 0.64, err) == [0.0, 0.2, 0.64]
    msgs = err.getvalue().splitlines()
    assert len(msgs) == 2 and all(m.startswith("warning:") for m in msgs)


def test_maxcorr(joint_file, tmp_path):
    code, out, _ = run(["maxcorr", "--joint", joint_file("bsc_0.1_uniform")])
    assert code == 0
    assert json.loads(out)["rho_m"] == pytest.approx(0.8, abs=1e-12)
    diag = JointDistribution([0, 1], [0, 1], [[0.5, 0.0], [0.0, 0.5]])
    code, out, _ = run(["maxcorr", "--joint", joint_file(diag), "--format", "csv"])
    values = {r["quantity"]: float(r["value"]) for r in rows(out)}
    assert values["rho_m"] == pytest.approx(1.0)
    indep = JointDistribution([0, 1], [0, 1], [[0.25, 0.25], [0.25, 0.25]])
    code, out, _ = run(["maxcorr", "--joint", joint_file(indep)])
    assert json.loads(out)["rho_m"] == pytest.approx(0.0, abs=1e-12)


def test_maxcorr_input_errors(tmp_path):
    assert run(["maxcorr", "--joint", str(tmp_path / "none.json")])[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["maxcorr", "--joint", str(bad)])[0] == 2
    assert run(["maxcorr"])[0] == 2
    assert run(["frobnicate"])[0] == 2


def test_curve_bsc_strong(joint_file):
    path = joint_file("bsc_0.1_uniform")
    code, out, err = run(["curve", "--joint", path, "--eps", "0.08:0.64:0.08"])
    assert code == 0 and err == ""
    table = rows(out)
    assert list(table[0]) == ["eps", "value", "erasure_bound", "strong_upper_bound", "method",
                              "slack"]
    assert len(table) == 8
    for r in table:
        eps = float(r["eps"])
        assert float(r["value"]) == pytest.approx(1 - eps / 0.64, abs=1e-3)
        assert float(r["slack"]) >= -1e-6
    assert float(table[-1]["value"]) == pytest.approx(0.0, abs=1e-12)


def test_curve_bec_and_determinism(joint_file, tmp_path):
    path = joint_file("bec_0.5_uniform")
    argv = ["curve", "--joint", path, "--eps", "0.1,0.25,0.4", "--seed", "7"]
    code, first, _ = run(argv)
    assert code == 0
    for r in rows(first):
        assert float(r["value"]) == pytest.approx(1 - float(r["eps"]) / 0.5, abs=1e-3)
    assert run(argv)[1] == first
    target = tmp_path / "curve.csv"
    code, out, _ = run(argv + ["--out", str(target)])
    assert code == 0 and out == "" and target.read_text() == first


def test_curve_clamps_and_json(joint_file):
    path = joint_file("bsc_0.1_uniform")
    code, out, err = run(["curve", "--joint", path, "--eps", "0.5,0.9", "--format", "json"])
    assert code == 0
    assert "clamped" in err
    doc = json.loads(out)
    assert [p["eps"] for p in doc["points"]] == [0.5, 0.64]


def test_curve_weak_and_perror(joint_file):
    path = joint_file("bsc_0.1_uniform")
    code, out, _ = run(["curve", "--joint", path, "--kind", "weak", "--eps", "0.32"])
    assert code == 0
    assert float(rows(out)[0]["value"]) == pytest.approx(0.5, abs=1e-3)
    code, out, _ = run(["curve", "--joint", path, "--kind", "perror", "--eps", "0,0.32",
                        "--format", "json"])
    assert code == 0
    assert all(p["sandwich_ok"] for p in json.loads(out)["points"])
    code, _, err = run(["curve", "--joint", joint_file("mixed_3x3"), "--kind", "perror",
                        "--eps", "0.1"])
    assert code == 3 and "binary" in err


def test_curve_bad_grid(joint_file):
    code, _, err = run(["curve", "--joint", joint_file("bsc_0.1_uniform"), "--eps", "x"])
    assert code == 2 and err.startswith("error:")
    code, _, _ = run(["curve", "--joint", joint_file("bsc_0.1_uniform"), "--eps", "0.1",
                      "--resolution", "0"])
    assert code == 2


def test_gaussian_command():
    code, out, _ = run(["gaussian", "--eps", "0,0.16,0.64", "--bins", "128"])
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["eps", "closed_form", "gamma_eps", "numeric_quantized", "lower",
                              "upper"]
    first, mid, last = table
    assert float(first["closed_form"]) == 1.0 and first["gamma_eps"] == "inf"
    assert float(mid["closed_form"]) == pytest.approx(0.75)
    assert float(mid["gamma_eps"]) ** 2 == pytest.approx(3.0)
    assert float(mid["numeric_quantized"]) == pytest.approx(0.75, abs=0.02)
    assert float(last["closed_form"]) == 0.0 and float(last["gamma_eps"]) == 0.0


def test_gaussian_command_non_gaussian_x(tmp_path):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"y": "gaussian", "x": "y_plus_laplace", "scale": 1.0}))
    code, out, _ = run(["gaussian", "--params", str(params), "--eps", "0.1", "--bins", "128",
                        "--format", "json"])
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["lower"] <= row["numeric_quantized"] <= row["upper"] + 0.02
    code, _, _ = run(["gaussian", "--params", '{"y": "laplace", "x": "y_plus_laplace"}',
                      "--eps", "0.1"])
    assert code == 3
    code, _, _ = run(["gaussian", "--params", '{"x": "y_times_two"}', "--eps", "0.1"])
    assert code == 2


def test_biso_command():
    code, out, _ = run(["biso", "--params", '{"kind": "bsc", "alpha": 0.1}', "--eps",
                        "0,0.32"])
    assert code == 0
    table = rows(out)
    r = table[1]
    assert float(r["w_closed"]) == pytest.approx(0.5)
    assert float(r["m_lower"]) == pytest.approx(float(r["m_upper"]))
    assert (float(r["p_error_lower"]), float(r["p_error_upper"])) == pytest.approx((0.125, 0.25))
    code, out, _ = run(["biso", "--params", '{"kind": "bec", "delta": 0.5}', "--eps", "0.25",
                        "--format", "json"])
    doc = json.loads(out)
    assert doc["initial_efficiency"] == pytest.approx(0.5)
    code, _, _ = run(["biso", "--params", '{"kind": "custom", "trans": [[0.7, 0.3], [0.2, 0.8]]}',
                      "--eps", "0.1"])
    assert code == 3


def test_verify_command_tensor(tmp_path):
    code, out, err = run(["verify", "tensor", "--seed", "0"])
    assert code == 0 and err == ""
    doc = json.loads(out)
    assert doc["passed"] and doc["suite"] == "tensor"
    assert all(c["suite"] == "tensor" for c in doc["claims"])
    assert np.all([c["passed"] for c in doc["claims"]])
