import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from bergjet import __version__
from bergjet.cli import parse_k_range, run
from bergjet.errors import ConfigError, ParseError
from bergjet.geometry import fubini_study_potential
from bergjet.recursion import expand
from bergjet.serialize import (
    bundle_from_json,
    jet_from_json,
    jet_to_json,
    potential_from_json,
    sequence_to_json,
)


def call(capsys, *argv):
    status = run(list(argv))
    out = capsys.readouterr().out
    return status, json.loads(out) if out.strip().startswith("{") else out


def test_expand_fubini_study(capsys):
    status, doc = call(capsys, "expand", "--model", "fubini-study", "--n", "1", "--order", "3", "--mode", "exact")
    assert status == 0
    assert doc["result"]["base_values"] == [1, 1, 0, 0]
    assert doc["version"] == __version__
    assert doc["config"]["model"] == "fubini-study"


def test_expand_flat(capsys):
    status, doc = call(capsys, "expand", "--model", "flat", "--n", "2", "--order", "2")
    assert status == 0 and doc["result"]["base_values"] == [1, 0, 0]


def test_expand_float_mode(capsys):
    status, doc = call(capsys, "expand", "--model", "radial-quartic", "--order", "2", "--mode", "float")
    assert status == 0
    np.testing.assert_allclose(doc["result"]["base_values"], [1, -0.2, 0.16])
    assert "re" in doc["result"]["b"][1]["terms"][0]


def test_expand_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        assert run(["expand", "--model", "radial-quartic", "--order", "3", "--degree", "2", "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0].replace(b"run0", b"run1") == outs[1]


def test_validate_csv(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    status = run(["validate", "--model", "radial-quartic", "--order", "2", "--k-range", "10:40:10", "--output", str(path)])
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 4
    assert [int(r["k"]) for r in rows] == [10, 20, 30, 40]
    assert float(rows[0]["slope"]) <= -2.5
    summary = json.loads(path.with_suffix(".json").read_text())
    assert summary["result"]["slope"] <= -2.5


def test_validate_requires_float(capsys):
    status, doc = call(capsys, "validate", "--model", "flat", "--mode", "exact")
    assert status == 2 and doc["error"]["code"] == "config"


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BERGJET_OUTPUT_DIR", str(tmp_path))
    assert run(["geometry", "--model", "fubini-study", "--n", "2"]) == 0
    doc = json.loads((tmp_path / "geometry.json").read_text())
    assert doc["result"]["scalar_curvature_at_base"] == 6


def test_twist_random_bundle(capsys):
    status, doc = call(capsys, "twist", "--model", "radial-quartic", "--order", "1", "--seed", "3")
    assert status == 0
    assert doc["result"]["b1_gap"] == 0


def test_twist_bundle_file(tmp_path, capsys):
    bundle = {
        "rank": 1,
        "entries": [
            {"i": 0, "j": 0, "terms": [{"x_exp": [0], "xbar_exp": [0], "re": 1}, {"x_exp": [1], "xbar_exp": [1], "re": 1}]}
        ],
    }
    path = tmp_path / "g.json"
    path.write_text(json.dumps(bundle))
    status, doc = call(capsys, "twist", "--model", "flat", "--bundle", str(path))
    assert status == 0
    assert doc["result"]["base_values"][1] == [[-1]]


def test_contour_check(capsys):
    status, doc = call(capsys, "contour-check", "--model", "fubini-study", "--samples", "2000")
    assert status == 0
    assert doc["result"]["violations"] == 0 and doc["result"]["seed"] == 0


def test_degree_budget_exit_code(tmp_path, capsys):
    status, doc = call(capsys, "expand", "--model", "flat", "--order", "30")
    assert status == 4 and doc["error"]["code"] == "degree_budget"
    path = tmp_path / "b.json"
    path.write_text(json.dumps({"rank": 1, "entries": [{"i": 0, "j": 0, "terms": [{"x_exp": [0], "xbar_exp": [0], "re": 1}]}]}))
    status, doc = call(capsys, "twist", "--model", "flat", "--order", "40", "--bundle", str(path))
    assert status == 4
    assert doc["error"]["required_degree"] == 84


@pytest.mark.parametrize(
    "argv, code, status",
    [
        (["expand", "--model", "torus"], "config", 2),
        (["expand", "--model", "flat", "--order", "-1"], "config", 2),
        (["expand"], "config", 2),
        (["validate", "--model", "flat", "--k-range", "9:3"], "config", 2),
        (["frobnicate"], "config", 2),
    ],
)
def test_error_paths(capsys, argv, code, status):
    got, doc = call(capsys, *argv)
    assert got == status
    assert doc["error"]["code"] == code


def test_parse_error_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dimension": 1,\n "terms": [}')
    status, doc = call(capsys, "expand", "--input", str(bad))
    assert status == 2
    assert doc["error"]["code"] == "parse" and "line 2" in doc["error"]["message"]


def test_reality_error_exit(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"dimension": 1, "terms": [{"x_exp": [1], "xbar_exp": [1], "re": 1}, {"x_exp": [2], "xbar_exp": [1], "re": 1}]}))
    status, doc = call(capsys, "expand", "--input", str(p))
    assert status == 3 and doc["error"]["code"] == "reality"


def test_missing_input_file(capsys):
    status, _doc = call(capsys, "expand", "--input", "/nonexistent/p.json")
    assert status == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bergjet.cli", "expand", "--model", "flat", "--order", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["base_values"] == [1, 0]


def test_k_range_forms():
    assert parse_k_range("10:40:10") == [10, 20, 30, 40]
    assert parse_k_range("5,7") == [5, 7]
    assert parse_k_range("1:3") == [1, 2, 3]
    with pytest.raises(ConfigError):
        parse_k_range("0:4:2")
    with pytest.raises(ConfigError):
        parse_k_range("a:b")


def test_potential_file_exact_fields():
    text = json.dumps(
        {
            "dimension": 1,
            "terms": [
                {"x_exp": [1], "xbar_exp": [1], "re": 1},
                {"x_exp": [2], "xbar_exp": [2], "re_num": 1, "re_den": 10},
                {"x_exp": [3], "xbar_exp": [0], "re": 0.25, "im": "1/3"},
                {"x_exp": [0], "xbar_exp": [3], "re": 0.25, "im": "-1/3"},
            ],
        }
    )
    phi = potential_from_json(text, 8)
    assert phi.phi[(2, 2)] == 0.1 and str(phi.phi[(3, 0)]) == "(1/4+1/3i)"


@pytest.mark.parametrize(
    "obj, where",
    [
        ({"terms": []}, "dimension"),
        ({"dimension": 1, "terms": [{"x_exp": [1], "xbar_exp": [1, 0], "re": 1}]}, "terms[0].xbar_exp"),
        ({"dimension": 1, "terms": [{"x_exp": [1], "xbar_exp": [1]}]}, "terms[0]"),
        ({"dimension": 1, "terms": [{"x_exp": [1], "xbar_exp": [1], "re": "one"}]}, "terms[0].re"),
    ],
)
def test_potential_file_errors(obj, where):
    with pytest.raises(ParseError, match=where.replace("[", r"\[").replace("]", r"\]")):
        potential_from_json(json.dumps(obj), 4)


def test_bundle_file_errors():
    with pytest.raises(ParseError, match="outside rank"):
        bundle_from_json(json.dumps({"rank": 1, "entries": [{"i": 1, "j": 0, "terms": []}]}), 1, 4)


def test_jet_json_round_trip():
    b = expand(fubini_study_potential(1, 10), 2, 2).b[1]
    assert jet_from_json(jet_to_json(b)) == b
    f = b.to_float()
    assert jet_from_json(json.loads(json.dumps(jet_to_json(f)))).allclose(f, 1e-15)


def test_sequence_json_layout():
    seq = expand(fubini_study_potential(1, 10), 2, 2)
    doc = sequence_to_json(seq, 2)
    assert doc["N"] == 2 and doc["degree"] == 2 and doc["mode"] == "exact"
    assert [b["m"] for b in doc["b"]] == [0, 1, 2]
    assert all(sum(t["exponents"]) <= 2 for b in doc["b"] for t in b["terms"])
    assert doc["base_values_exact"] == ["1", "1", "0"]
