"""Run records, JSON/CSV emission and the on-disk result cache."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import platform
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

SCHEMA_VERSION = 1

RUN_RECORD_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "glsurf run record",
    "type": "object",
    "required": ["schema_version", "command", "params", "version", "started", "finished", "status", "result",
                 "input_hashes", "files"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string", "minLength": 1},
        "params": {"type": "object"},
        "version": {"type": "string"},
        "started": {"type": "string"},
        "finished": {"type": "string"},
        "status": {"enum": ["ok", "failed", "incomplete"]},
        "result": {"type": "object"},
        "input_hashes": {"type": "object", "additionalProperties": {"type": "string"}},
        "files": {"type": "array", "items": {"type": "string"}},
        "environment": {"type": "object"},
        "error": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}


def jsonable(obj):
    """Convert numpy scalars/arrays, dataclasses and paths to plain JSON; non-finite floats become None."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclasses.dataclass
class RunRecord:
    command: str
    params: dict
    version: str
    started: str
    finished: str = ""
    status: str = "ok"
    result: dict = dataclasses.field(default_factory=dict)
    input_hashes: dict = dataclasses.field(default_factory=dict)
    files: list = dataclasses.field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION, **dataclasses.asdict(self)}
        d["environment"] = {"python": platform.python_version(), "numpy": np.__version__,
                            "threads": os.environ.get("OMP_NUM_THREADS", "default")}
        return jsonable(d)

    def validate(self) -> dict:
        d = self.to_dict()
        jsonschema.validate(d, RUN_RECORD_SCHEMA)
        return d

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.validate(), indent=2, sort_keys=True))
        return path

    @classmethod
    def read(cls, path) -> "RunRecord":
        d = json.loads(Path(path).read_text())
        jsonschema.validate(d, RUN_RECORD_SCHEMA)
        d.pop("schema_version")
        d.pop("environment", None)
        return cls(**d)


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True))
    return path


def write_csv(path, rows, columns=None) -> Path:
    """Write a list of flat dicts; columns default to the union of keys in first-seen order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [jsonable(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- cache -----------------------------------------------------------------------------------

def cache_key(command: str, params: dict, version: str) -> str:
    blob = json.dumps({"command": command, "params": jsonable(params), "version": version}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


class ResultCache:
    """Append-only JSON cache keyed by (command, parameters incl. resolution, code version)."""

    def __init__(self, root):
        self.root = Path(root)

    def path(self, command: str, params: dict, version: str) -> Path:
        return self.root / command / f"{cache_key(command, params, version)}.json"

    def get(self, command: str, params: dict, version: str):
        p = self.path(command, params, version)
        if not p.exists():
            return None
        return json.loads(p.read_text())

    def put(self, command: str, params: dict, version: str, payload: dict) -> Path:
        p = self.path(command, params, version)
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_suffix(".tmp")
        tmp.write_text(json.dumps(jsonable({"params": params, "payload": payload}), indent=2, sort_keys=True))
        os.replace(tmp, p)
        return p
