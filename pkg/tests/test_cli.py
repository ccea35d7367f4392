import csv
import json
import subprocess
import sys

import pytest

from modlab.cli import SUBCOMMANDS, load_config, main, results_json, run


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def report(out):
    return json.loads((out / "report.json").read_text())


FAST = {
    "modular-report": {"dim": 6},
    "kms-check": {"dim": 8, "pairs": 4, "tGrid": [-2, 2, 11]},
    "landau-spectrum": {"levels": 6, "degeneracy": 6},
    "landau-audit": {"dimPerAxis": 16},
    "quasi-kms": {"weightKind": "zeta", "weightParams": {"s": 2}, "dim": 8, "tGrid": [-1, 1, 7]},
    "quasi-ideal": {"sweepDims": [8, 16, 32]},
}


@pytest.mark.parametrize("cmd", sorted(FAST))
def test_subcommands_pass(cmd, tmp_path):
    cfg = write_cfg(tmp_path, FAST[cmd])
    out = tmp_path / "out"
    assert main([cmd, "--config", str(cfg), "--out", str(out)]) == 0
    rep = report(out)
    assert rep["passed"] and rep["failing"] == []
    assert rep["experiment"] == cmd and rep["schemaVersion"] == "1.0"
    assert set(rep) >= {"toolVersion", "configEcho", "startedAt", "duration", "results", "criteria"}


def test_config_echo_roundtrip(tmp_path):
    cfg = write_cfg(tmp_path, FAST["kms-check"])
    out = tmp_path / "out"
    main(["kms-check", "--config", str(cfg), "--out", str(out)])
    echo = report(out)["configEcho"]
    assert load_config(cfg, "kms-check", None).model_dump(mode="json") == echo


def test_kms_example(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "kms", "dim": 12, "beta": 1,
                               "tGrid": [-5, 5, 101], "seed": 7})
    out = tmp_path / "out"
    assert main(["kms-check", "--config", str(cfg), "--out", str(out)]) == 0
    res = report(out)["results"]["betas"]
    assert list(res) == ["1"] and res["1"]["maxResidual"] <= 1e-9


def test_landau_audit_example(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "landau-audit", "dimPerAxis": 24})
    out = tmp_path / "out"
    assert main(["landau-audit", "--config", str(cfg), "--out", str(out)]) == 0
    res = report(out)["results"]
    assert {"fittedCoefficients", "printedCoefficients", "discrepancy"} <= set(res)


def test_wigner_verify_outputs(tmp_path):
    out = tmp_path / "out"
    code = main(["wigner-verify", "--out", str(out)])
    rep = report(out)
    crit = rep["criteria"]
    assert crit["groundState"]["passed"] and crit["transformIntertwining"]["passed"]
    # exit status follows the printed-correspondence criterion
    assert code == (0 if crit["printedIntertwining"]["passed"] else 1)
    for name in ("wigner_X00.csv", "psi00_kernel.csv"):
        with open(out / name) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "y", "re", "im"] and len(rows) == 121 * 121 + 1


@pytest.mark.parametrize("data", [
    {"beta": -1},
    {"betas": [1, -1]},
    {"dim": 1},
    {"mystery": 3},
    {"grid": {"xMin": 1, "xMax": 0}},
    {"tGrid": [0, 1]},
    {"tolerances": {"nope": 1e-3}},
])
def test_bad_config_exit_2(data, tmp_path, capsys):
    cfg = write_cfg(tmp_path, data)
    assert main(["kms-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_field_path_in_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"grid": {"pointsPerAxis": 1}})
    main(["wigner-verify", "--config", str(cfg)])
    assert "grid.pointsPerAxis" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["kms-check", "--config", str(tmp_path / "none.json")]) == 2


def test_tol_scale_failure_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST["kms-check"])
    code = main(["kms-check", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--tol-scale", "1e-12"])
    assert code == 1
    assert "failing criteria" in capsys.readouterr().err


@pytest.mark.parametrize("cmd", sorted(FAST))
def test_results_deterministic(cmd, tmp_path):
    cfg = load_config(write_cfg(tmp_path, FAST[cmd]), cmd, 11)
    a = run(cmd, cfg, tmp_path / "a")
    b = run(cmd, cfg, tmp_path / "b")
    assert results_json(a["results"]) == results_json(b["results"])


def test_seed_changes_ensemble(tmp_path):
    path = write_cfg(tmp_path, FAST["kms-check"])
    a = run("kms-check", load_config(path, "kms-check", 1))
    b = run("kms-check", load_config(path, "kms-check", 2))
    assert results_json(a["results"]) != results_json(b["results"])


def test_subcommand_list():
    assert SUBCOMMANDS == ("modular-report", "kms-check", "landau-spectrum", "landau-audit",
                           "wigner-verify", "quasi-kms", "quasi-ideal")


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, FAST["landau-spectrum"])
    proc = subprocess.run([sys.executable, "-m", "modlab", "landau-spectrum", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
