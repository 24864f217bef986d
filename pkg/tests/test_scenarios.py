import csv
import io
import json
from pathlib import Path

import pytest
import yaml

from finslerforms import scenarios as S
from finslerforms.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_unknown_top_level_key():
    with pytest.raises(S.ConfigError):
        S.ScenarioConfig.from_dict({"scenario": "flatness", "colour": "red"})


def test_unknown_family_and_metric_keys():
    with pytest.raises(S.ConfigError):
        S.build_metric({"family": "Randers"}, 1)
    with pytest.raises(S.ConfigError):
        S.build_metric({"family": "HermitianDiagonal", "degrees": [1, 1], "alpha": 2}, 1)


def test_unknown_tolerance_and_base():
    with pytest.raises(S.ConfigError):
        S.ScenarioConfig.from_dict({"scenario": "flatness", "tolerances": {"vibes": 1.0}})
    with pytest.raises(S.ConfigError):
        S.ScenarioConfig.from_dict({"scenario": "flatness", "base": "CP3"})


def test_bad_quadrature_section():
    with pytest.raises(S.ConfigError):
        S.ScenarioConfig.from_dict({"scenario": "flatness", "quadrature": {"mode": "adaptive"}})
    with pytest.raises(S.ConfigError):
        S.ScenarioConfig.from_dict({"scenario": "flatness", "quadrature": {"radial": 3}})


def test_roundtrip_to_dict():
    cfg = S.ScenarioConfig.load(CONFIGS / "chern.yaml")
    again = S.ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_check_relations():
    assert S.Check("a", 1.0, 1.0 + 1e-9, 1e-8, "TRIVIAL").passed
    assert not S.Check("a", 1.0, 1.1, 1e-8, "TRIVIAL").passed
    assert S.Check("b", 0.1, 0.2, 0.0, "TRIVIAL", "le").passed
    assert S.Check("c", 0.3, 0.2, 0.0, "TRIVIAL", "gt").passed
    assert not S.Check("c", float("nan"), 0.2, 1.0, "TRIVIAL").passed


def test_cli_success_exit_code(tmp_path):
    out = tmp_path / "r.json"
    assert main(["flatness", "--config", str(CONFIGS / "flatness.yaml"), "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["schema_version"] == 1
    assert all(c["provenance"] in ("TRIVIAL", "THEOREM", "DERIVED") for c in rep["checks"])


def test_cli_failure_exit_code(tmp_path):
    # Einstein constant of O(1) + O(2) is not constant: the scenario must fail, not crash
    cfg = write(tmp_path, {"scenario": "einstein", "base": "CP1", "metric": {"family": "HermitianDiagonal", "degrees": [1, 2]}})
    assert main(["einstein", "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == EXIT_FAILED


def test_cli_config_error(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "flatness", "metric": {"family": "Nope"}})
    assert main(["flatness", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["flatness", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_cli_rejects_non_convex_metric_with_witness(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "flatness", "metric": {"family": "FinslerPerturbed", "degrees": [0, 0], "eps": -0.9}})
    assert main(["flatness", "--config", str(cfg)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "pseudo-convex" in err and "witness" in err


def test_reports_are_byte_identical(tmp_path):
    paths = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        main(["positivity-scan", "--config", str(CONFIGS / "positivity.yaml"), "--seed", "4", "--out", str(p)])
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_seed_changes_sampled_values(tmp_path):
    outs = []
    for seed in (1, 2):
        p = tmp_path / f"s{seed}.json"
        main(["verify-identities", "--config", str(CONFIGS / "verify-identities.yaml"), "--seed", str(seed), "--out", str(p)])
        outs.append(p.read_bytes())
    assert outs[0] != outs[1]


def test_csv_format(tmp_path):
    p = tmp_path / "r.csv"
    assert main(["l2-metric", "--config", str(CONFIGS / "l2-metric.yaml"), "--format", "csv", "--out", str(p)]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(p.read_text())))
    assert rows[0][0] == "name" and len(rows) > 1


def test_cli_orders_override(tmp_path):
    cfg = S.ScenarioConfig.load(CONFIGS / "l2-metric.yaml")
    p = tmp_path / "r.json"
    assert main(["l2-metric", "--config", str(CONFIGS / "l2-metric.yaml"), "--radial-order", "40",
                 "--angular-order", "3", "--out", str(p)]) == EXIT_OK
    quad = json.loads(p.read_text())["config"]["quadrature"]
    assert (quad["radial_order"], quad["angular_order"]) == (40, 3)
    assert cfg.quadrature.radial_order != 40


def test_empty_scan_is_header_only(tmp_path):
    cfg = write(tmp_path, {"scenario": "scan", "metric": {"family": "FinslerPerturbed", "degrees": [1, 1]},
                           "params": {"grid": {"param": "eps", "values": []}}})
    out = tmp_path / "scan.csv"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert out.read_text().strip().split("\n") == [",".join(S.SCAN_COLUMNS)]


def test_scan_rows(tmp_path):
    cfg = write(tmp_path, {"scenario": "scan", "metric": {"family": "FinslerPerturbed", "degrees": [1, 1]},
                           "quadrature": {"radial_order": 48, "angular_order": 1},
                           "params": {"grid": {"param": "eps", "values": [0.0, 0.1]}}})
    out = tmp_path / "scan.csv"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["value"] for r in rows] == ["0.0", "0.1"]
    assert all(float(r["min_levi_eig"]) > 0 for r in rows)
