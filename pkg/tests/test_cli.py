import csv
import io
import json

import pytest

from spectralpfr import kernels
from spectralpfr.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_prints_versioned_json(capsys):
    code, out, _ = run(capsys, "analyze", "97", "0..23")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "spectralpfr.report" and doc["version"] == 1
    assert doc["summary"]["K"] == "47/24"
    assert doc["artifacts"]["energy"]["combinatorial"] == 9224  # interval: (2n^3 + n) / 3


def test_analyze_product_group_and_tau(capsys):
    code, out, _ = run(capsys, "analyze", "3,3", "0,0;1,0;2,0", "--tau", "0.5")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["outcome"] == "NearCoset"


def test_iterate_with_gamma_and_budget(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"c": 1.0}))
    code, out, _ = run(capsys, "--config", str(cfg), "iterate", "20", "0,1,2,10,12", "--gamma", "20", "--budget", "1")
    doc = json.loads(out)
    assert doc["config"]["gamma"] == 20.0
    assert doc["summary"]["terminal"] == "budget-exhausted"


def test_gamma_below_floor_is_an_error(capsys):
    code, _, err = run(capsys, "iterate", "20", "0,1", "--gamma", "1")
    assert code == 2 and "gamma" in err


def test_presets(capsys):
    for name, c0 in (("ledger-C", 1 / 16), ("ledger-S2", 1 / 4 + 1 / 64)):
        _, out, _ = run(capsys, "--preset", name, "toy")
        assert json.loads(out)["config"]["c0"] == c0


def test_toy_variants(capsys):
    _, out, _ = run(capsys, "toy")
    s = json.loads(out)["summary"]
    assert s["K"] == "47/24" and s["rho_prime"] == 2.0
    _, out, _ = run(capsys, "toy", "--k", "5")
    assert json.loads(out)["summary"]["K"] == "41/12"


def test_polybog(capsys):
    _, out, _ = run(capsys, "polybog", "97", "0..23")
    assert json.loads(out)["summary"]["rho_prime"] == 2.0


def test_scan_output_file_and_report(capsys, tmp_path):
    path = tmp_path / "scan.json"
    code, _, _ = run(capsys, "scan", "--samples", "6", "--seed", "1", "-o", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["kind"] == "scan" and doc["summary"]["seed"] == 1
    code, out, _ = run(capsys, "report", str(path))
    assert out.startswith("scan report (schema v1)")


def test_report_csv(capsys, tmp_path):
    path = tmp_path / "it.json"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"c": 1.0}))
    run(capsys, "--config", str(cfg), "iterate", "20", "0,1,2,10,12", "-o", str(path))
    _, out, _ = run(capsys, "report", str(path), "--csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["K"] == "2/1" and rows[0]["outcome"] == "Improvement"


def test_backend_flag(capsys):
    try:
        code, _, _ = run(capsys, "--backend", "python", "analyze", "12", "0,4,8")
        assert code == 0 and kernels.BACKEND == "python"
    finally:
        kernels.set_backend("auto")


def test_bad_inputs(capsys, tmp_path):
    assert run(capsys, "analyze", "12", "")[0] == 2
    assert run(capsys, "report", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit):
        main(["toy", "--k", "4"])
