"""Command runners shared by the command line and the sweep driver.

Each ``run_<name>(params, out, cache)`` takes a resolved parameter dict,
writes its CSV/SVG/JSON artifacts under ``out`` and returns
``(result, files, status)`` with ``status`` in {"ok", "incomplete"}.
"""

from __future__ import annotations

import ast
import itertools
import json
import math
import operator
import time
from pathlib import Path

import numpy as np

from . import __version__, assemble, config, corner, geometry, gl2d, oned, plotting, records, spectral


class UsageError(ValueError):
    """Bad input: exit status 2."""


class NumericalFailure(RuntimeError):
    """A solver did not converge: exit status 3."""


# -- parsing helpers ----------------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_angle(text) -> float:
    """Angle from a number or an arithmetic expression in ``pi`` ("pi/2", "3*pi/2", "pi-0.2")."""
    if isinstance(text, (int, float)):
        return float(text)
    src = str(text).strip().replace("π", "pi")
    src = "".join(f"{c}*" if c.isdigit() and nxt == "p" else c for c, nxt in zip(src, src[1:] + " "))

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise UsageError(f"cannot read angle {text!r}")

    try:
        return ev(ast.parse(src, mode="eval"))
    except SyntaxError as err:
        raise UsageError(f"cannot read angle {text!r}") from err


def check_b(b: float) -> bool:
    """Reject b <= 1; return True when b is at or above the normal-state threshold 1/Theta0."""
    upper = 1.0 / spectral.THETA0
    if not (isinstance(b, (int, float)) and math.isfinite(b)) or b <= 1.0:
        raise UsageError(f"b = {b} is outside the surface regime (1, 1/Theta0) = (1, {upper:.5f})")
    return b >= upper


def load_domain(p: dict):
    if p.get("polygon"):
        return geometry.load_polygon(p["polygon"])
    name = p.get("shape") or "disc"
    if name not in geometry.BUILTIN_SHAPES:
        raise UsageError(f"unknown shape {name!r}; choose from {sorted(geometry.BUILTIN_SHAPES)}")
    kwargs = p.get("shape_args") or {}
    return geometry.BUILTIN_SHAPES[name](**kwargs)


def _eps(p):
    eps = p.get("eps")
    if eps is None or not eps > 0:
        raise UsageError("eps must be given and positive")
    return float(eps)


# -- constants ----------------------------------------------------------------------------

def run_constants(p, out: Path, cache=None):
    b = float(p["b"])
    check_b(b)
    th = spectral.compute_theta0(p["theta0_h"], p["theta0_T"])
    rows = [{"name": "Theta0", "value": th.value, "error": th.error},
            {"name": "Theta0_shooting", "value": th.shooting, "error": abs(th.shooting - th.value)}]
    notes = []
    if b >= 1.0 / th.value:
        notes.append(f"normal regime: b >= 1/Theta0 = {1 / th.value:.6f}; every surface constant is zero")
        for name in ("E0", "alpha0", "f0(0)", "Ecorr"):
            rows.append({"name": name, "value": 0.0, "error": 0.0})
    else:
        T, h = p["T"], p["h1d"]
        r = oned.solve_1d(b, oned.half_line(T, h))
        r2 = oned.solve_1d(b, oned.half_line(T, h / 2))
        e1, e2 = oned.ecorr_from(r), oned.ecorr_from(r2)
        for name, a, c in (("E0", r.energy, r2.energy), ("alpha0", r.alpha_opt, r2.alpha_opt),
                           ("f0(0)", r.boundary_value, r2.boundary_value), ("Ecorr", e1, e2)):
            # second-order scheme: Richardson value and error estimate
            rows.append({"name": name, "value": (4 * c - a) / 3, "error": abs(c - a) / 3})
        rows.append({"name": "Ecorr_literal_combination", "value": oned.ecorr_as_printed(r2), "error": None})
        rows.append({"name": "alpha_moment", "value": r2.alpha_moment, "error": None})
    files = [records.write_csv(out / "constants.csv", rows, ["name", "value", "error"])]
    table = "\n".join(f"{r['name']:28s} {r['value']: .10f}" + ("" if r["error"] is None else f"  +- {r['error']:.1e}")
                      for r in rows)
    return {"b": b, "constants": rows, "notes": notes, "table": table}, files, "ok"


# -- 1D ----------------------------------------------------------------------------------

def _mode(p):
    kind = p.get("mode", "half-line")
    if kind == "half-line":
        return oned.half_line(p["T"], p["h1d"])
    if kind == "finite":
        if p.get("ell") is None:
            raise UsageError("finite mode needs --ell")
        return oned.finite(float(p["ell"]), p["h1d"])
    if kind == "curved":
        k, eps = float(p.get("k", 1.0)), _eps(p)
        return oned.curved(k, eps, oned.curved_truncation(k, eps, p["T"]), p["h1d"])
    raise UsageError(f"unknown 1D mode {kind!r}")


def run_oned(p, out: Path, cache=None):
    b = float(p["b"])
    check_b(b)
    try:
        res = oned.optimize_alpha(b, _mode(p))
    except oned.FocalSingularity as err:
        raise UsageError(str(err)) from err
    except oned.ConvergenceError as err:
        raise NumericalFailure(str(err)) from err
    result = res.to_dict()
    result["tail_rate"] = oned.profile_tail_rate(res.profile)
    if not res.normal and res.mode.kind == "half-line":
        result["ecorr"] = oned.ecorr_from(res)
    files = [records.write_csv(out / "profile.csv", [{"t": t, "f": f} for t, f in zip(res.profile.t, res.profile.f)]),
             plotting.profile_plot(res.profile.t, res.profile.f, out / "profile.svg",
                                   title=f"b = {b:g}, alpha = {res.alpha_opt:.5f}")]
    status = "ok"
    if p.get("expansion"):
        rep = oned.expansion_check(b, float(p.get("k", 1.0)), p["eps_list"], p["T"], p["h1d"])
        result["expansion"] = rep.to_dict()
        rows = [{"eps": e, "E_k": E, "residual": r} for e, E, r in zip(rep.eps, rep.energies, rep.residuals)]
        files.append(records.write_csv(out / "expansion.csv", rows))
        if rep.k != 0:
            files.append(plotting.loglog_fit(rep.eps, rep.residuals, out / "expansion.svg", rep.exponent,
                                             rep.prefactor, title=f"k = {rep.k:g}: remainder"))
        if rep.flagged:
            status = "incomplete"
    return result, files, status


def run_theta0(p, out: Path, cache=None):
    th = spectral.compute_theta0(p["theta0_h"], p["theta0_T"])
    result = th.to_dict()
    result["alpha_squared_minus_theta0"] = th.alpha ** 2 - th.value
    files = [records.write_csv(out / "theta0.csv", [result])]
    return result, files, "ok"


def run_mu(p, out: Path, cache=None):
    betas = [parse_angle(x) for x in (p.get("beta") or [])]
    if not betas:
        raise UsageError("give at least one --beta")
    rows, files = [], []
    for i, beta in enumerate(betas):
        if not 0 < beta < 2 * math.pi:
            raise UsageError(f"beta = {beta} is outside (0, 2 pi)")
        r = spectral.compute_mu(beta, p["mu_R"], p["mu_h"], extrapolate=not p.get("no_extrapolate"))
        rows.append(r.to_dict())
        if len(betas) == 1:
            files.append(plotting.field_heatmap(r.mesh, np.abs(r.vector) / np.abs(r.vector).max(), out / "mode.svg",
                                                title=f"beta = {beta:.4f}", label="|u| / max"))
    files.append(records.write_csv(out / "mu.csv", rows, ["beta", "mu", "sensitivity", "mu_truncated",
                                                           "truncation_sensitivity", "mesh_sensitivity",
                                                           "residual", "wall_time"]))
    if len(betas) > 1:
        files.append(plotting.mu_curve([r["beta"] for r in rows], [r["mu"] for r in rows], spectral.THETA0,
                                       out / "mu.svg", [r["sensitivity"] for r in rows]))
    result = {"rows": rows, "theta0_reference": spectral.THETA0}
    if len(rows) == 1:
        result.update({k: rows[0][k] for k in ("beta", "mu", "sensitivity")})
    return result, files, "ok"


# -- corner --------------------------------------------------------------------------------

def corner_key(beta: float, p: dict) -> dict:
    """Cache parameters of a corner ladder (angle rounded so text and float inputs agree)."""
    return {"beta": round(float(beta), 10), "b": float(p["b"]), "L": [float(x) for x in p["corner_L"]],
            "ell": [float(x) for x in p["corner_ell"]], "h": float(p["corner_h"]), "tol": float(p["corner_tol"]),
            "random_starts": int(p["corner_random_starts"]), "seed": int(p["seed"])}


def corner_command(beta: float, p: dict) -> str:
    parts = [f"glsurf corner --beta {beta:.10f} --b {p['b']}"]
    if list(p["corner_L"]) != config.DEFAULTS["corner_L"].value:
        parts.append("--L " + " ".join(f"{x:g}" for x in p["corner_L"]))
    if list(p["corner_ell"]) != config.DEFAULTS["corner_ell"].value:
        parts.append("--ell " + " ".join(f"{x:g}" for x in p["corner_ell"]))
    if p["corner_h"] != config.DEFAULTS["corner_h"].value:
        parts.append(f"--h {p['corner_h']}")
    return " ".join(parts)


def corner_ladder_cached(beta: float, p: dict, cache, out: Path | None = None, progress=None):
    """Ladder report as a dict, from the cache when available; returns (payload, from_cache, ladder)."""
    key = corner_key(beta, p)
    if cache is not None and not p.get("force"):
        hit = cache.get("corner", key, __version__)
        if hit is not None:
            return hit["payload"], True, None
    try:
        rep = corner.corner_ladder(beta, float(p["b"]), Ls=tuple(p["corner_L"]), ells=tuple(p["corner_ell"]),
                                   h=float(p["corner_h"]), progress=progress, tol=float(p["corner_tol"]),
                                   random_starts=int(p["corner_random_starts"]), seed=int(p["seed"]))
    except corner.CornerSpecError as err:
        raise UsageError(str(err)) from err
    except gl2d.SolverError as err:
        raise NumericalFailure(str(err)) from err
    payload = rep.to_dict()
    payload["solves"] = [s.to_dict() for s in rep.solves]
    if cache is not None and rep.converged:
        cache.put("corner", key, __version__, payload)
    return payload, False, rep


def run_corner(p, out: Path, cache=None):
    beta = parse_angle(p.get("beta"))
    check_b(float(p["b"]))
    if not 0 < beta < 2 * math.pi:
        raise UsageError(f"beta = {beta} is outside (0, 2 pi)")

    def progress(cs):
        if p.get("verbose"):
            print(f"  L = {cs.L:g}, ell = {cs.ell:g}: E = {cs.value:.10f} ({cs.report.iterations} it)")

    payload, hit, rep = corner_ladder_cached(beta, p, cache, out, progress)
    rows = [{k: s[k] for k in ("L", "ell", "value", "gl_energy", "subtraction", "energy_error", "mismatch",
                               "layer_deviation")} | {"iterations": s["report"]["iterations"]}
            for s in payload["solves"]]
    files = [records.write_csv(out / "ladder.csv", rows)]
    if rep is not None and rep.solves:
        last = rep.solves[-1]
        files.append(plotting.field_heatmap(last.cmesh.mesh, np.abs(last.psi), out / "corner_psi.svg",
                                            title=f"beta = {beta:.4f}, L = {last.L:g}, ell = {last.ell:g}"))
    result = {k: payload[k] for k in ("beta", "b", "limit", "error", "converged", "diagonal_limit", "ecorr",
                                      "conjecture", "difference", "notes", "ell_limits")}
    result["from_cache"] = hit
    return result, files, "ok" if payload["converged"] else "incomplete"


def flat_angle_summary(rows):
    """Fitted C over the near-flat rows and the log-log exponent of |difference| vs |delta| per side."""
    crow = [corner.ConjectureRow(r["beta"], r["delta"], r["e_corner"], r["error"], r["conjecture"],
                                 r["difference"], r["delta_43"]) for r in rows
            if abs(r["delta"]) > 1e-9 and r["e_corner"] is not None]
    out = {"C": corner.flat_angle_fit(crow) if crow else None}
    for side, sgn in (("below_pi", 1), ("above_pi", -1)):
        pts = [(abs(r.delta), abs(r.difference)) for r in crow if np.sign(r.delta) == sgn and r.difference != 0]
        if len(pts) >= 2:
            x, y = np.log(np.array(pts)).T
            out[f"exponent_{side}"] = float(np.polyfit(x, y, 1)[0])
    return out


def run_conjecture(p, out: Path, cache=None):
    b = float(p["b"])
    check_b(b)
    betas = [math.pi] + [math.pi + s * d for d in p["deltas"] for s in (-1, 1)]
    betas += [parse_angle(x) for x in (p.get("beta") or [])]
    ecorr = oned.compute_ecorr(b) if not oned.solve_1d(b).normal else 0.0
    limits, complete = {}, True
    unique = []
    for x in sorted(betas):
        if not any(math.isclose(x, u, abs_tol=1e-12) for u in unique):
            unique.append(x)
    for beta in unique:
        payload, _, _ = corner_ladder_cached(beta, p, cache)
        if not payload["converged"]:
            complete = False
        limits[beta] = (payload["limit"], payload["error"])
    rows = [r.to_dict() for r in corner.conjecture_check(limits, ecorr)]
    for r in rows:
        r["e_corner"] = None if not math.isfinite(r["e_corner"]) else r["e_corner"]
    summary = flat_angle_summary([r for r in rows if abs(r["delta"]) <= max(p["deltas"]) + 1e-12])
    files = [records.write_csv(out / "conjecture.csv", rows),
             plotting.conjecture_plot(rows, ecorr, out / "conjecture.svg")]
    return {"b": b, "ecorr": ecorr, "rows": rows, "flat_angle": summary}, files, "ok" if complete else "incomplete"


# -- 2D ------------------------------------------------------------------------------------

def run_solve2d(p, out: Path, cache=None):
    b = float(p["b"])
    check_b(b)
    eps = _eps(p)
    poly = load_domain(p)
    res = oned.solve_1d(b, oned.half_line(p["T"], p["h1d"]))
    starts = tuple(p.get("starts") or ("ansatz",))
    try:
        ds = gl2d.solve_domain(poly, eps, b, res.profile, res.alpha_opt, h=p["gl_h"], depth=p["gl_depth"],
                               starts=starts, seed=p["seed"], tol=p["gl_tol"], max_iter=p["gl_max_iter"])
    except gl2d.SolverError as err:
        raise NumericalFailure(str(err)) from err
    except gl2d.ParameterError as err:
        raise UsageError(str(err)) from err
    psi, mesh = ds.psi, ds.mesh
    corners_xy = [poly.point(s) for s, _ in poly.corners]
    diag = {"solve": ds.to_dict(), "energy": ds.report.energy, "max_abs": float(np.abs(psi).max())}
    diag["agmon"] = gl2d.agmon_profile(psi, mesh, eps).to_dict()
    diag["profile_deviation"] = None if res.normal else gl2d.surface_profile_deviation(
        psi, mesh, eps, res.profile, corners=corners_xy)
    try:
        diag["winding"] = gl2d.winding_number(psi, mesh, eps, eps, poly)
    except (gl2d.VanishingOnContour, ValueError) as err:
        diag["winding"] = None
        diag["winding_note"] = str(err)
    if poly.n_corners == 0 and not res.normal:
        pred = assemble.predict_energy(poly, eps, b, result=res)
        diag["prediction"] = pred.total
        diag["relative_error"] = (ds.report.energy - pred.total) / abs(pred.total)
    files = [plotting.field_heatmap(mesh, np.abs(psi), out / "psi.svg", title=f"|psi|, eps = {eps:g}, b = {b:g}")]
    _, jn = gl2d.supercurrent(psi, mesh, eps)
    files.append(plotting.field_heatmap(mesh, np.linalg.norm(jn, axis=1), out / "current.svg",
                                        title="current magnitude", label="|j|", cmap="magma"))
    files.append(records.write_csv(out / "agmon.csv", [{"d_over_eps": d, "mass": m} for d, m in
                                                       zip(diag["agmon"]["d_over_eps"], diag["agmon"]["mass"])]))
    if p.get("snapshot"):
        head = gl2d.save_snapshot(out / "psi", psi, mesh, {"eps": eps, "b": b, "shape": poly.name})
        files += [head, head.with_suffix(".bin")]
    return diag, files, "ok"


def run_assemble(p, out: Path, cache=None):
    b = float(p["b"])
    check_b(b)
    eps = _eps(p)
    poly = load_domain(p)
    found = {}
    missing = []
    for beta in assemble.distinct_angles(poly):
        hit = None if cache is None else cache.get("corner", corner_key(beta, p), __version__)
        if hit is not None:
            found[beta] = (hit["payload"]["limit"], hit["payload"]["error"])
        elif p.get("compute_missing"):
            payload, _, _ = corner_ladder_cached(beta, p, cache)
            if not payload["converged"]:
                raise NumericalFailure(f"corner ladder at beta = {beta:.6f} did not converge")
            found[beta] = (payload["limit"], payload["error"])
        else:
            missing.append(beta)
    if missing:
        hint = "run first:\n" + "\n".join("  " + corner_command(x, p) for x in missing)
        hint += "\nor pass --compute-missing"
        raise UsageError(str(assemble.MissingCornerEnergy(missing, hint)))
    pred = assemble.predict_energy(poly, eps, b, found, result=oned.solve_1d(b, oned.half_line(p["T"], p["h1d"])))
    result = {"prediction": pred.to_dict(), "shape": poly.name}
    files = [records.write_csv(out / "terms.csv",
                               [{"term": "surface", "value": pred.surface_term},
                                {"term": "curvature", "value": pred.curvature_term}]
                               + [{"term": f"corner beta={t['beta']:.6f} x{t['count']}",
                                   "value": t["count"] * t["energy"], "error": t["count"] * t["error"]}
                                  for t in pred.corner_terms]
                               + [{"term": "total", "value": pred.total, "error": pred.corner_error}])]
    if p.get("solve"):
        sub, f2, _ = run_solve2d(p, out, cache)
        result["solve_energy"] = sub["energy"]
        result["relative_error"] = (sub["energy"] - pred.total) / abs(pred.total)
        files += f2
    return result, files, "ok"


def run_fields(p, out: Path, cache=None):
    eps = _eps(p)
    poly = load_domain(p)
    th = spectral.compute_theta0(p["theta0_h"], p["theta0_T"]).value
    lad = spectral.critical_fields(eps, poly, theta0=th,
                                   mu_fn=lambda beta: spectral.compute_mu(beta, p["mu_R"], p["mu_h"]).value)
    rows = [{"name": "H_c2", "field": lad.hc2}, {"name": "H_star", "field": lad.h_star}]
    rows += [{"name": f"H_corner[{r['index']}]", "field": r["field"], "beta": r["beta"], "mu": r["mu"],
              "mu_clamped": r["mu_clamped"]} for r in lad.corners]
    files = [records.write_csv(out / "fields.csv", rows, ["name", "field", "beta", "mu", "mu_clamped"])]
    return {"ladder": lad.to_dict(), "hc3": lad.hc3}, files, "ok"


RUNNERS = {
    "constants": run_constants,
    "oned": run_oned,
    "theta0": run_theta0,
    "mu": run_mu,
    "corner": run_corner,
    "conjecture": run_conjecture,
    "solve2d": run_solve2d,
    "assemble": run_assemble,
    "fields": run_fields,
}


def execute(command: str, params: dict, out: Path, cache=None, input_hashes=None) -> records.RunRecord:
    """Run one command and write ``record.json``; errors are recorded and re-raised."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rec = records.RunRecord(command=command, params=records.jsonable(params), version=__version__,
                            started=records.now(), input_hashes=dict(input_hashes or {}))
    t0 = time.perf_counter()
    try:
        result, files, status = RUNNERS[command](params, out, cache)
    except Exception as err:
        rec.status, rec.error, rec.finished = "failed", f"{type(err).__name__}: {err}", records.now()
        rec.write(out / "record.json")
        raise
    result = dict(result)
    result["wall_time"] = time.perf_counter() - t0
    rec.result, rec.status, rec.finished = records.jsonable(result), status, records.now()
    rec.files = [str(Path(f).relative_to(out)) if Path(f).is_relative_to(out) else str(f) for f in files]
    rec.write(out / "record.json")
    return rec


# -- sweep ---------------------------------------------------------------------------------

def load_sweep(path) -> dict:
    path = Path(path)
    import yaml

    spec = yaml.safe_load(path.read_text()) if path.suffix in (".yaml", ".yml") else json.loads(path.read_text())
    if not isinstance(spec, dict) or "command" not in spec:
        raise UsageError(f"{path}: a sweep needs 'command', 'grid' and optionally 'params', 'output'")
    if spec["command"] not in RUNNERS:
        raise UsageError(f"{path}: unknown command {spec['command']!r}")
    return spec


def sweep_cells(grid: dict) -> list[dict]:
    grid = grid or {}
    if any(not isinstance(v, list) for v in grid.values()):
        raise UsageError("every grid entry must be a list of values")
    names = sorted(grid)
    cells = [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))] if names else []
    if not cells:
        raise UsageError("no cells")
    return cells


def _run_cell(command, params, out, cache_root):
    cache = records.ResultCache(cache_root) if cache_root else None
    try:
        rec = execute(command, params, out, cache)
        return {"status": rec.status, "result": rec.result, "error": None}
    except Exception as err:  # recorded per cell
        return {"status": "failed", "result": {}, "error": f"{type(err).__name__}: {err}"}


def _scalars(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, bool) or v is None:
            out[prefix + k] = v
        elif isinstance(v, (int, float, str)):
            out[prefix + k] = v
    return out


def run_sweep(spec: dict, base: dict, out: Path, cache_root=None, workers: int = 1):
    """Run every grid cell; write per-cell records, a merged CSV, a manifest and summary plots."""
    command = spec["command"]
    cells = sweep_cells(spec.get("grid"))
    out = Path(spec.get("output") or out)
    params = dict(base)
    params.update(spec.get("params") or {})
    jobs = []
    for i, cell in enumerate(cells):
        cp = dict(params)
        cp.update(cell)
        if command in ("mu",) and "beta" in cell and not isinstance(cell["beta"], list):
            cp["beta"] = [cell["beta"]]
        jobs.append((command, cp, out / f"cell_{i:03d}", cache_root))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, *zip(*jobs)))
    else:
        outcomes = [_run_cell(*j) for j in jobs]
    rows, failed = [], []
    for i, (cell, oc) in enumerate(zip(cells, outcomes)):
        row = {"cell": i, **{f"param.{k}": v for k, v in cell.items()}, "status": oc["status"], "error": oc["error"]}
        row.update(_scalars(oc["result"]))
        rows.append(row)
        if oc["status"] != "ok":
            failed.append(i)
    files = [records.write_csv(out / "sweep.csv", rows)]
    files += _sweep_plots(command, cells, outcomes, out)
    manifest = {"command": command, "cells": len(cells), "failed": failed, "complete": not failed,
                "version": __version__, "finished": records.now()}
    records.write_json(out / "manifest.json", manifest)
    return manifest, files


def _sweep_plots(command, cells, outcomes, out: Path):
    ok = [(c, o["result"]) for c, o in zip(cells, outcomes) if o["status"] != "failed"]
    if not ok:
        return []
    if command == "mu":
        pts = sorted((r["beta"], r["mu"], r["sensitivity"]) for _, res in ok for r in res.get("rows", []))
        if pts:
            b_, m_, s_ = zip(*pts)
            return [plotting.mu_curve(b_, m_, spectral.THETA0, out / "mu.svg", s_)]
    if command == "corner":
        rows = [{"delta": math.pi - res["beta"], "e_corner": res["limit"], "error": res["error"]} for _, res in ok]
        return [plotting.conjecture_plot(rows, ok[0][1]["ecorr"], out / "conjecture.svg")]
    if command == "oned":
        figs = []
        for i, (_, res) in enumerate(ok):
            ex = res.get("expansion")
            if ex and ex["k"] != 0:
                figs.append(plotting.loglog_fit(ex["eps"], ex["residuals"], out / f"expansion_{i:03d}.svg",
                                                ex["exponent"], ex["prefactor"], title=f"k = {ex['k']:g}"))
        if figs:
            return figs
    keys = sorted(ok[0][0])
    num = [k for k, v in _scalars(ok[0][1]).items() if isinstance(v, float)]
    if len(keys) == 1 and num and all(isinstance(c[keys[0]], (int, float)) for c, _ in ok):
        x = [c[keys[0]] for c, _ in ok]
        return [plotting.line_plot(x, {num[0]: [r.get(num[0]) for _, r in ok]}, out / "sweep.svg",
                                   xlabel=keys[0], ylabel=num[0])]
    return []
