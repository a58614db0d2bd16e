import json

import numpy as np
import pytest

from pharm_bm import config, dumps, report
from pharm_bm import supportcoords as sc
from pharm_bm.errors import ConfigError


def test_shipped_configs_validate():
    from importlib import resources

    files = [f for f in resources.files("pharm_bm").joinpath("configs").iterdir() if f.name.endswith(".json")]
    assert len(files) >= 5
    for f in files:
        config.loads(f.read_text(), f.name)


def test_config_round_trip():
    cfg = config.loads(json.dumps({"name": "x", "solver": {"p": 2.25, "mesh": [64, 32]},
                                   "experiment": {"lambdas": [0.5]}}))
    again = config.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert again.p == 2.25 and again.mesh == (64, 32)


def test_config_errors_have_lines():
    text = '{\n  "solver": {\n    "p": 3.5\n  },\n  "bodies": {"K0": {"kind": "cube"}}\n}\n'
    with pytest.raises(ConfigError) as exc:
        config.loads(text, "bad.json")
    msg = str(exc.value)
    assert "bad.json:3: solver/p" in msg
    assert "bad.json:5: bodies/K0/kind" in msg


def test_config_syntax_error_line():
    with pytest.raises(ConfigError, match=r"bad.json:3:"):
        config.loads('{\n "name": "a",\n "solver": {,}\n}', "bad.json")


def test_inner_level_set_has_no_fixed_body():
    cfg = config.from_dict({"bodies": {"inner": {"level_set": 0.5}}})
    with pytest.raises(ConfigError):
        cfg.inner_body()


def test_make_body_origin_and_scale():
    assert config.make_body({"kind": "disk", "radius": 0.0}).is_zero()
    b = config.make_body({"kind": "random", "seed": 2, "scale": 0.5})
    assert b.c0 == 0.5


def test_field_dump_round_trip(tmp_path, annulus_small):
    _, fld = annulus_small
    txt = dumps.write_field_text(fld, tmp_path / "f.txt")
    binp = dumps.write_field_binary(fld, tmp_path / "f.npz")
    a, b = dumps.read_field(txt), dumps.read_field(binp)
    for key in ("i", "j", "x", "y", "u"):
        np.testing.assert_array_equal(a[key], b[key])
    np.testing.assert_array_equal(a["u"], fld.u)
    assert a["shape"] == b["shape"] == (fld.mesh.M_ang, fld.mesh.M_rad)
    # node index = j * M_ang + i with j = 0 on the inner boundary
    assert np.all(a["u"][a["j"] == 0] == 1.0)


def test_table_dump_deterministic(tmp_path, annulus_small):
    prob, fld = annulus_small
    p1 = dumps.write_table(sc.build_table(prob, fld), tmp_path / "a.txt")
    p2 = dumps.write_table(sc.build_table(prob, fld), tmp_path / "b.txt")
    assert p1.read_bytes() == p2.read_bytes()
    t, theta, h = dumps.read_table(p1)
    assert h.shape == (t.size, theta.size)


def test_csv_fixed_columns(tmp_path):
    path = report.write_csv(tmp_path / "r.csv", ["b", "a"], [{"a": 0.1, "b": np.float64(1 / 3), "c": 9}])
    assert path.read_text().splitlines()[0] == "b,a"
    assert report.read_csv(path)[0]["b"] == repr(1 / 3)
