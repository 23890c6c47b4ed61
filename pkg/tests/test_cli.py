import json
import math
from pathlib import Path

import pytest

from thermoflow.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(args):
    return main([str(a) for a in args])


def _tree_bytes(root: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_pressure_golden_mean_value(tmp_path):
    code = _run(["pressure", "--config", CONFIGS / "pressure_golden_mean.json",
                 "--out", tmp_path])
    assert code == 0
    report = json.loads((tmp_path / "pressure_report.json").read_text())
    assert abs(report["pressure"] - 0.481211825) < 1e-8
    assert report["rpf_residual"] < 1e-10
    for entry in report["derivatives"]:
        tol = {1: 1e-7, 2: 1e-5, 3: 1e-3}[entry["order"]]
        assert entry["abs_err"] < tol


def test_pressure_full_two_shift(tmp_path):
    assert _run(["pressure", "--config", CONFIGS / "pressure_full2.json",
                 "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "pressure_report.json").read_text())
    assert abs(report["pressure"] - math.log(2)) < 1e-12


def test_malformed_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["pressure", "--config", bad, "--out", tmp_path]) == 2


def test_wrong_schema_exit_2(tmp_path):
    bad = tmp_path / "bad_schema.json"
    bad.write_text(json.dumps({"schema": 99, "experiment": "pressure"}))
    assert _run(["pressure", "--config", bad, "--out", tmp_path]) == 2


def test_missing_config_exit_2(tmp_path):
    assert _run(["pressure", "--config", tmp_path / "nope.json",
                 "--out", tmp_path]) == 2


def test_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert _run(["pressure", "--config", CONFIGS / "pressure_golden_mean.json",
                     "--out", out, "--seed", "99"]) == 0
    assert _tree_bytes(out1) == _tree_bytes(out2)


def test_holonomy_zero_perturbation(tmp_path):
    assert _run(["holonomy", "--config", CONFIGS / "holonomy_zero.json",
                 "--out", tmp_path]) == 0
    rows = (tmp_path / "holonomy_trace.csv").read_text().splitlines()
    header = rows[0].split(",")
    for line in rows[1:]:
        rec = dict(zip(header, line.split(",")))
        assert abs(float(rec["trace_re"])) < 1e-12
        assert abs(float(rec["fd_re"])) < 1e-8
        assert float(rec["lambda1"]) == pytest.approx(math.exp(2.0), rel=1e-12)
        assert float(rec["lambda2"]) == 1.0
        assert float(rec["lambda3"]) == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_holonomy_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert _run(["holonomy", "--config", CONFIGS / "holonomy_zero.json",
                     "--out", out, "--seed", "5"]) == 0
    assert _tree_bytes(out1) == _tree_bytes(out2)


def test_diskvanish_all_cases(tmp_path):
    assert _run(["diskvanish", "--config", CONFIGS / "diskvanish_all.json",
                 "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "diskvanish_report.json").read_text())
    by_case = {c["case"]: c for c in report["cases"]}
    for case in ("AB", "CD", "EF"):
        assert by_case[case]["verdict"] == "forced-zero"
    for case in ("GH", "IJ"):
        assert by_case[case]["verdict"] == "undetermined"
        assert by_case[case]["completed_verdict"] == "forced-zero"
    assert (tmp_path / "diskvanish_AB_relations.json").exists()


def test_diskvanish_expected_negative_mode(tmp_path):
    assert _run(["diskvanish", "--config", CONFIGS / "diskvanish_ab_single.json",
                 "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "diskvanish_report.json").read_text())
    assert report["cases"][0]["verdict"] == "undetermined"
    assert report["cases"][0]["as_expected"]


def test_diskvanish_unexpected_verdict_exit_3(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "schema": 1, "experiment": "diskvanish",
        "cases": [{"case": "AB", "N": 10, "couplings": ["s=t"],
                   "expect": "forced-zero"}]}))
    assert _run(["diskvanish", "--config", cfg, "--out", tmp_path]) == 3


def test_diskvanish_small_n_warning(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "schema": 1, "experiment": "diskvanish",
        "cases": [{"case": "AB", "N": 2, "couplings": ["s=t", "s=t/2"]}]}))
    assert _run(["diskvanish", "--config", cfg, "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "diskvanish_report.json").read_text())
    assert report["warnings"]


def test_selftest_runs_clean(tmp_path, capsys):
    assert _run(["selftest", "--out", tmp_path, "--seed", "3"]) == 0
    report = json.loads((tmp_path / "selftest_report.json").read_text())
    assert report["ok"]
    printed = capsys.readouterr().out
    assert "PASS pressure.full-2-shift" in printed


def test_suspension_cli(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "schema": 1, "experiment": "suspension", "seed": 4,
        "sft": {"transition": [[1, 1], [1, 1]]},
        "roof": {"kind": "constant", "value": 2.0}}))
    assert _run(["suspension", "--config", cfg, "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "suspension_report.json").read_text())
    assert abs(report["flow_pressure"] - math.log(2) / 2) < 1e-10
    assert report["root_residual"] < 1e-11
