import json

import jsonschema
import pytest
import yaml

from glsurf import cli, commands, records

SMALL_CORNER = {"corner_L": [6.0, 8.0, 10.0], "corner_ell": [4.0, 5.0], "corner_h": 0.2}


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path / "out"), "--cache", str(tmp_path / "cache")])


def record(tmp_path):
    d = json.loads((tmp_path / "out" / "record.json").read_text())
    jsonschema.validate(d, records.RUN_RECORD_SCHEMA)
    return d


def test_b_below_one_is_usage_error(tmp_path, capsys):
    assert run(tmp_path, "constants", "--b", "0.9") == 2
    assert "outside the surface regime" in capsys.readouterr().err
    assert record(tmp_path)["status"] == "failed"


def test_constants_table_and_artifacts(tmp_path, capsys):
    assert run(tmp_path, "constants") == 0
    d = record(tmp_path)
    vals = {r["name"]: r["value"] for r in d["result"]["constants"]}
    assert vals["E0"] == pytest.approx(-0.0076071959, abs=1e-9)
    assert vals["Theta0"] == pytest.approx(0.5901061257, abs=1e-8)
    assert vals["Ecorr"] > 0 > vals["Ecorr_literal_combination"]
    assert "constants.csv" in d["files"]
    assert "Theta0" in capsys.readouterr().out


def test_normal_regime_reports_zeros_with_note(tmp_path):
    assert run(tmp_path, "constants", "--b", "1.75") == 0
    d = record(tmp_path)
    vals = {r["name"]: r["value"] for r in d["result"]["constants"]}
    assert vals["E0"] == vals["Ecorr"] == 0.0
    assert "normal regime" in d["result"]["notes"][0]


def test_oned_writes_profile_and_svg(tmp_path):
    assert run(tmp_path, "oned", "--b", "1.25", "--h1d", "0.01") == 0
    d = record(tmp_path)
    assert {"profile.csv", "profile.svg"} <= set(d["files"])
    assert (tmp_path / "out" / "profile.svg").read_text().lstrip().startswith("<?xml")
    assert d["result"]["energy"] < 0


def test_finite_mode_needs_ell(tmp_path):
    assert run(tmp_path, "oned", "--mode", "finite") == 2


def test_mu_quick(tmp_path):
    assert run(tmp_path, "mu", "--beta", "pi/2", "--R", "5", "--h", "0.3") == 0
    d = record(tmp_path)
    assert 0.45 < d["result"]["mu"] < 0.55
    assert "mode.svg" in d["files"]


def test_bad_angle_is_usage_error(tmp_path):
    assert run(tmp_path, "mu", "--beta", "pi/", "--R", "5") == 2
    assert run(tmp_path, "mu", "--beta", "7", "--R", "5") == 2


def test_parse_angle_forms():
    assert commands.parse_angle("3pi/2") == pytest.approx(4.71238898038469)
    assert commands.parse_angle("pi - 0.2") == pytest.approx(2.941592653589793)
    assert commands.parse_angle(2) == 2.0
    with pytest.raises(commands.UsageError):
        commands.parse_angle("__import__('os')")


def test_assemble_missing_cache_then_cached_corner(tmp_path, capsys):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(yaml.safe_dump(SMALL_CORNER))
    assert run(tmp_path, "assemble", "--shape", "square", "--eps", "0.05", "--config", str(cfg)) == 2
    err = capsys.readouterr().err
    assert "glsurf corner --beta 1.5707963268" in err and "--compute-missing" in err
    assert run(tmp_path, "corner", "--beta", "pi/2", "--config", str(cfg)) == 0
    first = record(tmp_path)["result"]
    assert first["converged"] and not first["from_cache"]
    assert run(tmp_path, "assemble", "--shape", "square", "--eps", "0.05", "--config", str(cfg)) == 0
    pr = record(tmp_path)["result"]["prediction"]
    assert pr["corner_terms"][0]["count"] == 4
    assert pr["corner_terms"][0]["energy"] == pytest.approx(first["limit"])
    # a second corner run is served from the cache
    assert run(tmp_path, "corner", "--beta", "1.5707963267948966", "--config", str(cfg)) == 0
    assert record(tmp_path)["result"]["from_cache"]


def test_solve2d_disc(tmp_path):
    assert run(tmp_path, "solve2d", "--shape", "disc", "--eps", "0.15", "--h", "0.3", "--snapshot") == 0
    d = record(tmp_path)
    res = d["result"]
    assert res["energy"] < 0 and res["winding"] < 0
    assert abs(res["relative_error"]) < 0.2  # O(eps) remainder at eps = 0.15
    assert {"psi.svg", "current.svg", "agmon.csv", "psi.json", "psi.bin"} <= set(d["files"])


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("gl_hh: 0.1\n")
    assert run(tmp_path, "constants", "--config", str(cfg)) == 2


def test_sweep_empty_grid_and_small_grid(tmp_path, capsys):
    spec = tmp_path / "sweep.yaml"
    spec.write_text(yaml.safe_dump({"command": "oned", "grid": {}}))
    assert run(tmp_path, "sweep", str(spec)) == 2
    assert "no cells" in capsys.readouterr().err
    spec.write_text(yaml.safe_dump({"command": "oned", "grid": {"b": [1.25, 1.5]}, "params": {"h1d": 0.02}}))
    assert run(tmp_path, "sweep", str(spec)) == 0
    rows = records.read_csv(tmp_path / "out" / "sweep.csv")
    assert [r["status"] for r in rows] == ["ok", "ok"]
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["complete"] and manifest["cells"] == 2
    assert (tmp_path / "out" / "sweep.svg").exists()


def test_sweep_records_failed_cells(tmp_path):
    spec = tmp_path / "sweep.yaml"
    spec.write_text(yaml.safe_dump({"command": "oned", "grid": {"b": [0.5, 1.5]}, "params": {"h1d": 0.02}}))
    assert run(tmp_path, "sweep", str(spec)) == 3
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["failed"] == [0]


def test_defaults_and_version(capsys):
    assert cli.main(["defaults"]) == 0
    assert "corner_L" in capsys.readouterr().out
    assert cli.main(["--version"]) == 0
    assert cli.main([]) == 2
