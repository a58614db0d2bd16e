import json

from click.testing import CliRunner

from pharm_bm.cli import main

BM_DISKS = {"name": "d", "bodies": {"K0": {"kind": "disk", "radius": 1.0}, "K1": {"kind": "disk", "radius": 0.98},
                                    "K2": {"kind": "disk", "radius": 1.02}, "inner": {"scale": 0.8}},
            "solver": {"p": 2.5, "mesh": [64, 16]}, "experiment": {"lambdas": [0.25, 0.5, 0.75]}}


def test_oracle_command(tmp_path):
    res = CliRunner().invoke(main, ["oracle", "--p", "2.5", "--mesh", "128x64", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "max error" in res.output
    assert {"results.csv", "report.json", "config.json", "oracle_error_p2.5.svg"} <= {p.name for p in tmp_path.iterdir()}


def test_bad_mesh_option(tmp_path):
    res = CliRunner().invoke(main, ["oracle", "--mesh", "128", "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_config_error_exit(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "solver": {"p": 1.5}\n}\n')
    res = CliRunner().invoke(main, ["bm", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    assert "bad.json:2: solver/p" in res.output


def _bm(tmp_path, name):
    cfg = tmp_path / "pair.json"
    cfg.write_text(json.dumps(BM_DISKS, indent=2))
    out = tmp_path / name
    res = CliRunner().invoke(main, ["bm", "--config", str(cfg), "--out", str(out), "--serial"])
    assert res.exit_code == 0, res.output
    return out


def test_bm_table_deterministic(tmp_path):
    a, b = _bm(tmp_path, "a"), _bm(tmp_path, "b")
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert (a / "margins.svg").read_bytes() == (b / "margins.svg").read_bytes()
    header = (a / "results.csv").read_text().splitlines()[0]
    assert header.startswith("p,pair,semantics,lambda,T_lambda")


def test_suite_single_criterion(tmp_path):
    res = CliRunner().invoke(main, ["suite", "--quick", "--only", "3", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "[PASS] criterion  3" in res.output
    summary = json.loads((tmp_path / "report.json").read_text())
    assert summary["criteria"]["3"]["passed"] is True


def test_suite_exits_nonzero_on_failure(tmp_path, monkeypatch):
    from pharm_bm import acceptance

    def failing(profile):
        return acceptance.Criterion(3, "homogeneity", False, "forced")

    monkeypatch.setitem(acceptance.CRITERIA, 3, failing)
    res = CliRunner().invoke(main, ["suite", "--quick", "--only", "3", "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "[FAIL] criterion  3 homogeneity: forced" in res.output
