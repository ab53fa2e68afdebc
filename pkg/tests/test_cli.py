import csv
import io
import json
import subprocess
import sys

import pytest

from weitzlab.cli import main
from weitzlab.curvature import loads, validate


def _model(tmp_path, name, *args):
    path = tmp_path / name
    assert main(["model", *args, "-o", str(path)]) == 0
    return path


@pytest.fixture
def files(tmp_path):
    return {
        "s3": _model(tmp_path, "s3.json", "--constant", "n=3", "kappa=1"),
        "s4": _model(tmp_path, "s4.json", "--constant", "n=4", "kappa=1"),
        "h3": _model(tmp_path, "h3.json", "--constant", "n=3", "kappa=-1"),
        "prod": _model(tmp_path, "prod.json", "--product", "2:1,2:1"),
        "fs": _model(tmp_path, "fs.json", "--fubini-study", "m=2"),
    }


# --- model ------------------------------------------------------------------------


def test_model_outputs_validate(files):
    for path in files.values():
        R = loads(path.read_text())
        assert validate(R).passed
    assert loads(files["prod"].read_text()).n == 4
    assert loads(files["fs"].read_text()).n == 4


def test_model_random(tmp_path):
    a = _model(tmp_path, "a.json", "--random", "n=4", "seed=3", "eps=0.05", "kappa=1")
    b = _model(tmp_path, "b.json", "--random", "n=4", "seed=3", "eps=0.05", "kappa=1")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "args",
    [
        ["model", "--constant", "n=4", "bogus=1"],
        ["model", "--constant", "kappa=1"],
        ["model", "--constant", "n=four"],
        ["model", "--product", "2-1"],
        ["model", "--fubini-study", "m=1"],
        ["model"],
        ["frobnicate"],
        [],
    ],
)
def test_model_usage_errors(args, capsys):
    assert main(args) == 2
    assert "error" in capsys.readouterr().err


# --- analyze ------------------------------------------------------------------------


def _analyze(path, capsys):
    assert main(["analyze", str(path)]) == 0
    return json.loads(capsys.readouterr().out)


def test_analyze_s4(files, capsys):
    rep = _analyze(files["s4"], capsys)
    assert rep["verdicts"]["lemma1_strict"] is True
    assert rep["validation"]["passed"] is True
    assert rep["rigidity"]["verdict"] == "rigid"
    assert rep["tolerances"]["strict_margin"] == 1e-9


def test_analyze_h3(files, capsys):
    rep = _analyze(files["h3"], capsys)
    assert rep["verdicts"]["lemma2_strict"] is True
    assert rep["second_kind_max"] == pytest.approx(-1.0)


def test_analyze_fubini_all_false(files, capsys):
    rep = _analyze(files["fs"], capsys)
    assert not any(rep["verdicts"][k] for k in ("lemma1_strict", "lemma1_nonneg", "double_pinch_strict"))
    assert rep["rigidity"]["verdict"] == "inconclusive"


def test_analyze_corrupted_exit3(files, tmp_path, capsys):
    data = json.loads(files["s3"].read_text())
    data["components"].append({"i": 2, "j": 2, "k": 1, "l": 3, "value": 1.0})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert main(["analyze", str(bad)]) == 3
    assert "validation" in capsys.readouterr().err


def test_analyze_bianchi_violation_exit3(tmp_path):
    # R_1234 alone satisfies the pair symmetries but not the first Bianchi identity
    bad = tmp_path / "bianchi.json"
    bad.write_text(json.dumps({"n": 4, "components": [{"i": 1, "j": 2, "k": 3, "l": 4, "value": 1.0}]}))
    assert main(["analyze", str(bad)]) == 3


def test_analyze_malformed_exit2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["analyze", str(bad)]) == 2
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2


# --- bounds ---------------------------------------------------------------------------


def _bounds(path, capsys, *extra, code=0):
    assert main(["bounds", str(path), *extra]) == code
    return json.loads(capsys.readouterr().out)


def test_bounds_sphere_equality(files, capsys):
    out = _bounds(files["s3"], capsys, "--p", "2", "--tags", "eq2.7")
    (chk,) = out["checks"]
    assert chk["bound_tag"] == "eq2.7"
    assert abs(chk["margin"]) <= 1e-9 and chk["satisfied"]


def test_bounds_hyperbolic_equality(files, capsys):
    out = _bounds(files["h3"], capsys, "--p", "2", "--tags", "eq3.1")
    (chk,) = out["checks"]
    assert abs(chk["margin"]) <= 1e-9 and not chk["vacuous"]


def test_bounds_product_vacuous(files, capsys):
    out = _bounds(files["prod"], capsys, "--p", "2", "--tags", "eq2.7")
    assert out["checks"][0]["vacuous"] is True


def test_bounds_forms_and_csv(files, capsys):
    assert main(["bounds", str(files["s4"]), "--p", "2,3", "--q", "1,2,3", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 3 * 2 + 3
    forms = [r for r in rows if r["bound_tag"] == "eq4.1"]
    assert [float(r["lambda_extreme"]) for r in forms] == pytest.approx([3.0, 4.0, 3.0])
    assert all(r["satisfied"] == "true" for r in rows)


def test_bounds_bad_args(files):
    assert main(["bounds", str(files["s3"]), "--p", "1"]) == 2
    assert main(["bounds", str(files["s3"]), "--q", "5"]) == 2
    assert main(["bounds", str(files["s3"]), "--tags", "eq9.9"]) == 2


def test_bounds_deterministic(files, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["bounds", str(files["fs"]), "--p", "2", "--q", "2", "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


# --- sweep ------------------------------------------------------------------------------


def test_sweep_zero_eps_reproduces_base(tmp_path, capsys):
    assert main(["sweep", "--count", "1", "--eps", "0", "--n", "4", "--p", "2", "--q", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    item = out["items"][0]
    assert item["sec_min"] == pytest.approx(1.0, abs=1e-12)
    margins = {c["check"]: c["margin"] for c in item["checks"]}
    assert margins["eq2.7:2"] == pytest.approx(0.0, abs=1e-9)
    assert margins["eq4.1:2"] == pytest.approx(0.0, abs=1e-9)
    assert margins["lemma1"] == pytest.approx(1.0)


def test_sweep_deterministic_and_workers(tmp_path):
    paths = [tmp_path / f"s{i}.json" for i in range(3)]
    args = ["sweep", "--count", "12", "--eps", "0.05", "--seed", "7"]
    assert main([*args, "-o", str(paths[0])]) == 0
    assert main([*args, "-o", str(paths[1])]) == 0
    assert main([*args, "--workers", "2", "-o", str(paths[2])]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()
    summary = json.loads(paths[0].read_text())
    assert summary["violations"] == []
    assert summary["non_vacuous"]["lemma1"] > 0


def test_sweep_hyperbolic(capsys):
    assert main(["sweep", "--base", "hyperbolic", "--count", "10", "--eps", "0.02", "--n", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["non_vacuous"]["eq3.1:2"] == 10


@pytest.mark.slow
def test_sweep_500(tmp_path):
    out = tmp_path / "sweep.json"
    assert main(["sweep", "--count", "500", "--eps", "0.02", "--n", "4", "--workers", "4", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["violations"] == []


def test_sweep_usage_errors():
    assert main(["sweep", "--count", "0"]) == 2
    assert main(["sweep", "--base", "torus"]) == 2
    assert main(["sweep", "--eps", "-1"]) == 2


# --- sphere-spectrum ------------------------------------------------------------------


def test_sphere_spectrum_level3(tmp_path, capsys):
    report = tmp_path / "r.json"
    off = tmp_path / "m.off"
    assert main(["sphere-spectrum", "--level", "3", "--k", "8", "--report", str(report), "--off", str(off)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 8
    assert float(rows[0]["eigenvalue"]) == pytest.approx(2.0, abs=0.05)
    rep = json.loads(report.read_text())
    assert rep["satisfied"] is True and rep["bound_tag"] == "sec4-eigen"
    assert off.read_text().startswith("OFF\n642 1280 0\n")


def test_sphere_spectrum_level0(capsys):
    assert main(["sphere-spectrum", "--level", "0", "--k", "4"]) == 0
    captured = capsys.readouterr()
    rows = list(csv.DictReader(io.StringIO(captured.out)))
    assert 1.5 <= float(rows[0]["eigenvalue"]) <= 2.5
    assert json.loads(captured.err)["satisfied"] is True


def test_sphere_spectrum_k0(capsys):
    assert main(["sphere-spectrum", "--level", "1", "--k", "0"]) == 0
    assert capsys.readouterr().out == "index,eigenvalue\n"


def test_sphere_spectrum_bad_level():
    assert main(["sphere-spectrum", "--level", "6"]) == 2
    assert main(["sphere-spectrum", "--level", "-1"]) == 2


def test_csv_17_digits(capsys):
    main(["sphere-spectrum", "--level", "1", "--k", "4"])
    value = capsys.readouterr().out.splitlines()[4].split(",")[1]
    assert float(value) == pytest.approx(2.18457712, abs=1e-8)
    assert len(value.replace(".", "").lstrip("0")) >= 15


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run(
        [sys.executable, "-m", "weitzlab", "model", "--constant", "n=3", "kappa=1", "-o", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert validate(loads(out.read_text())).passed
