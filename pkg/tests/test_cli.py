import csv
import json
import logging

import pytest
import yaml

from ssmp import cli
from ssmp.config import MODES, build_quintuple, parse
from ssmp.measures import cramer_value, drift_coefficient, laplace_exponent
from ssmp.validate import ReportEntry, ValidationReport

BASE = {
    "quintuple": {"psi_at_1": 1.0, "sigma2": 1.0,
                  "pi": {"atoms": [[-0.69314718, 0.5]]},
                  "v": {"atoms": [[-0.5, 0.5]]}},
    "z": 1.0,
    "sde": {"dt": 0.01, "horizon": 0.5, "n_paths": 20, "seed": 3},
    "validate": {"tests": ["cramer_two_routes"]},
}


def write(tmp_path, d, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(d))
    return str(p)


@pytest.mark.parametrize("mode", [m for m in MODES if m != "validate"])
def test_every_simulation_mode(tmp_path, mode):
    out = tmp_path / "o"
    assert cli.main([mode, "--config", write(tmp_path, BASE), "--out", str(out), "--workers", "1"]) == 0
    rows = list(csv.reader(open(out / "paths.csv")))
    assert rows[0] == ["path_id", "time", "value", "absorbed"]
    assert {r[0] for r in rows[1:]} == {str(i) for i in range(20)}
    assert (out / "summary.json").exists()
    m = json.loads((out / "manifest.json").read_text())
    assert {"config", "derived_scalars", "seeds", "versions"} <= set(m)
    assert m["config"] == BASE
    if mode in ("simulate-kiu", "simulate-sde", "simulate-approx"):
        assert open(out / "sign_changes.csv").readline().strip() == "path_id,time"


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, BASE)
    for mode in ("simulate-sde", "simulate-kiu", "simulate-levy"):
        a, b = tmp_path / f"{mode}-a", tmp_path / f"{mode}-b"
        cli.main([mode, "--config", cfg, "--out", str(a), "--workers", "1"])
        cli.main([mode, "--config", cfg, "--out", str(b), "--workers", "2"])
        for f in ("paths.csv", "manifest.json", "summary.json"):
            assert (a / f).read_bytes() == (b / f).read_bytes(), (mode, f)


def test_overrides(tmp_path):
    cfg = write(tmp_path, BASE)
    cli.main(["simulate-abs", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.main(["simulate-abs", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "9", "--paths", "7"])
    m = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m["seeds"]["seed"] == 9 and m["seeds"]["n_paths"] == 7
    rows = list(csv.reader(open(tmp_path / "b" / "paths.csv")))
    assert {r[0] for r in rows[1:]} == {str(i) for i in range(7)}


def test_manifest_scalars_full_precision(tmp_path):
    out = tmp_path / "o"
    cli.main(["simulate-abs", "--config", write(tmp_path, BASE), "--out", str(out)])
    s = json.loads((out / "manifest.json").read_text())["derived_scalars"]
    q = build_quintuple(parse(BASE).quintuple)
    assert s["psi_at_1"] == laplace_exponent(q.triplet, 1.0)
    assert s["drift_coefficient"] == drift_coefficient(q)
    assert s["cramer_value"] == cramer_value(q)
    assert s["leaves_zero_continuously"] is True


def test_manifest_cramer_with_minus_one_atom(tmp_path):
    d = dict(BASE, quintuple={"psi_at_1": 0.7, "sigma2": 1.0, "v": {"atoms": [[-1.0, 2.0]]}})
    out = tmp_path / "o"
    cli.main(["simulate-abs", "--config", write(tmp_path, d), "--out", str(out)])
    s = json.loads((out / "manifest.json").read_text())["derived_scalars"]
    assert s["cramer_value"] == pytest.approx(s["psi_at_1"], abs=1e-15)


def test_sde_from_zero_points_to_approx(tmp_path, capsys):
    d = dict(BASE, z=0.0)
    assert cli.main(["simulate-sde", "--config", write(tmp_path, d), "--out", str(tmp_path / "o")]) == 2
    assert "simulate-approx" in capsys.readouterr().err


def test_trapped_warning(tmp_path, caplog):
    d = dict(BASE, z=0.0, quintuple={"psi_at_1": -0.5, "sigma2": 1.0})
    with caplog.at_level(logging.WARNING, logger="ssmp"):
        rc = cli.main(["simulate-approx", "--config", write(tmp_path, d), "--out", str(tmp_path / "o")])
    assert rc == 0
    assert any("cramer_value" in r.message for r in caplog.records)


def test_schema_error_exit(tmp_path, capsys):
    d = dict(BASE, sde={"dt": "x"})
    assert cli.main(["simulate-sde", "--config", write(tmp_path, d)]) == 2
    assert "sde.dt" in capsys.readouterr().err
    assert cli.main(["simulate-sde", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_validate_writes_report(tmp_path, capsys):
    out = tmp_path / "o"
    assert cli.main(["validate", "--config", write(tmp_path, BASE), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["entries"][0]["test_name"] == "cramer value two routes"
    assert capsys.readouterr().out.startswith("PASS")


def test_validate_failure_exit_code(tmp_path, monkeypatch):
    def failing(*a, **k):
        r = ValidationReport()
        r.add(ReportEntry.judge("forced", 1.0, 0.0, n_samples=1))
        return r

    monkeypatch.setattr(cli, "run_validation", failing)
    assert cli.main(["validate", "--config", write(tmp_path, BASE), "--out", str(tmp_path / "o")]) == 1
