import json
import math

import jsonschema
import numpy as np
import pytest
import yaml

from glsurf import config, records


def make_record():
    return records.RunRecord(command="constants", params={"b": 1.5, "arr": np.arange(3)}, version="0",
                             started=records.now(), finished=records.now(),
                             result={"x": np.float64(1.5), "bad": float("nan"), "z": 1 + 2j})


def test_jsonable_converts_numpy_and_non_finite():
    d = records.jsonable({"a": np.int64(3), "b": np.array([1.0, np.inf]), "c": np.bool_(True), "d": 2j})
    assert d == {"a": 3, "b": [1.0, None], "c": True, "d": {"re": 0.0, "im": 2.0}}
    json.dumps(d)


def test_record_roundtrip_and_schema(tmp_path):
    rec = make_record()
    path = rec.write(tmp_path / "record.json")
    d = json.loads(path.read_text())
    jsonschema.validate(d, records.RUN_RECORD_SCHEMA)
    assert d["result"]["bad"] is None and d["params"]["arr"] == [0, 1, 2]
    back = records.RunRecord.read(path)
    assert back.command == "constants" and back.result["x"] == 1.5


def test_schema_rejects_bad_status(tmp_path):
    rec = make_record()
    rec.status = "great"
    with pytest.raises(jsonschema.ValidationError):
        rec.validate()


def test_published_schema_file_matches_module():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "schema" / "run_record.schema.json"
    assert json.loads(path.read_text()) == records.RUN_RECORD_SCHEMA


def test_csv_roundtrip_union_of_columns(tmp_path):
    p = records.write_csv(tmp_path / "t.csv", [{"a": 1, "b": None}, {"a": 2, "c": math.nan}])
    rows = records.read_csv(p)
    assert rows == [{"a": "1", "b": "", "c": ""}, {"a": "2", "b": "", "c": ""}]


def test_cache_roundtrip_and_key_sensitivity(tmp_path):
    cache = records.ResultCache(tmp_path)
    params = {"beta": 1.0, "h": 0.1}
    assert cache.get("corner", params, "1") is None
    cache.put("corner", params, "1", {"limit": -0.1})
    assert cache.get("corner", params, "1")["payload"] == {"limit": -0.1}
    assert cache.get("corner", {"beta": 1.0, "h": 0.05}, "1") is None
    assert cache.get("corner", params, "2") is None
    assert records.cache_key("corner", params, "1") == records.cache_key("corner", dict(reversed(params.items())), "1")


def test_config_layers(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"b": 1.25, "gl_h": 0.2}))
    out = config.resolve(p, b=1.3, gl_h=None)
    assert out["b"] == 1.3 and out["gl_h"] == 0.2 and out["T"] == 15.0
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"seed": 5}))
    assert config.resolve(j)["seed"] == 5


def test_config_rejects_unknown_keys_and_non_mapping(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("bee: 1.5\n")
    with pytest.raises(ValueError, match="unknown config keys"):
        config.load_config(p)
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError, match="mapping"):
        config.load_config(p)


def test_defaults_are_copies():
    d = config.defaults()
    d["corner_L"].append(99.0)
    assert config.defaults()["corner_L"] == [8.0, 12.0, 16.0]
    assert "corner_tol" in config.defaults_table()
