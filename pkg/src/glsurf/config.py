"""Run defaults and config-file loading.

Every default used by the command line lives in ``DEFAULTS``; a YAML or
JSON file may override any subset, and explicit flags override the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import yaml


@dataclass(frozen=True)
class Default:
    value: object
    doc: str


DEFAULTS: dict[str, Default] = {
    "b": Default(1.5, "field-strength parameter, surface regime is 1 < b < 1/Theta0"),
    "T": Default(15.0, "half-line truncation length of the 1D problem (units of eps)"),
    "h1d": Default(0.005, "grid spacing of the 1D problem"),
    "theta0_h": Default(0.02, "coarse spacing of the two-grid Theta0 eigensolve"),
    "theta0_T": Default(12.0, "truncation of the Theta0 eigensolve"),
    "mu_R": Default(12.0, "sector truncation radius (a second solve uses 2R)"),
    "mu_h": Default(0.12, "sector mesh spacing away from the vertex"),
    "corner_L": Default([8.0, 12.0, 16.0], "corner ladder side lengths"),
    "corner_ell": Default([6.0, 8.0, 10.0], "corner ladder layer depths"),
    "corner_h": Default(0.1, "corner mesh spacing (blown-up units)"),
    "corner_tol": Default(1e-8, "relative Euler-Lagrange tolerance of corner solves"),
    "corner_random_starts": Default(0, "extra random starts per corner solve"),
    "deltas": Default([0.1, 0.2, 0.3], "flat-angle offsets for the conjecture table"),
    "eps_list": Default([0.08, 0.04, 0.02, 0.01], "eps values of the curvature expansion check"),
    "gl_h": Default(0.1, "2D mesh spacing in units of eps"),
    "gl_depth": Default(8.0, "depth of boundary-layer meshes in units of eps"),
    "gl_tol": Default(1e-6, "relative Euler-Lagrange tolerance of 2D solves"),
    "gl_max_iter": Default(5000, "iteration cap of 2D solves"),
    "seed": Default(0, "seed for random initial data"),
    "workers": Default(1, "worker processes for sweeps"),
}


def defaults() -> dict:
    return {k: (list(v.value) if isinstance(v.value, list) else v.value) for k, v in DEFAULTS.items()}


def load_config(path) -> dict:
    """Read a YAML (.yaml/.yml) or JSON file of overrides; unknown keys are rejected."""
    path = Path(path)
    text = path.read_text()
    data = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
    data = data or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at the top level")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"{path}: unknown config keys {unknown}")
    return data


def resolve(config_path=None, **overrides) -> dict:
    """Defaults, then the config file, then non-None overrides."""
    out = defaults()
    if config_path:
        out.update(load_config(config_path))
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def defaults_table() -> str:
    rows = [f"{k:22s} {v.value!s:24s} {v.doc}" for k, v in DEFAULTS.items()]
    return "\n".join(rows)
