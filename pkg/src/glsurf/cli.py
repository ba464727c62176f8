"""Command line: ``glsurf <command> [options]``.

Exit status: 0 success, 2 usage error, 3 numerical failure (including
ladders without a plateau and flagged expansion fits).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, commands, config, records

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def _common(p: argparse.ArgumentParser, b=True):
    p.add_argument("--config", help="YAML/JSON file overriding the defaults table")
    p.add_argument("--out", help="output directory (default glsurf-out/<command>)")
    p.add_argument("--cache", default=None, help="result cache directory (default glsurf-out/cache)")
    p.add_argument("--json", action="store_true", help="print the run record instead of a summary")
    if b:
        p.add_argument("--b", type=float, help="field-strength parameter in (1, 1/Theta0)")


def _domain(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--shape", help="built-in shape: disc, square, rectangle, stadium, reflex_pentagon, "
                                   "circular_sector")
    g.add_argument("--polygon", help="polygon description file (JSON)")
    p.add_argument("--eps", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glsurf", description="Surface-superconductivity numerics for the "
                                 "fixed-field Ginzburg-Landau functional.")
    ap.add_argument("--version", action="version", version=f"glsurf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="Theta0, E0, alpha0, f0(0), Ecorr at one b")
    _common(p)

    p = sub.add_parser("oned", help="1D boundary-layer problem (and the curvature expansion check)")
    _common(p)
    p.add_argument("--mode", choices=["half-line", "finite", "curved"], default="half-line")
    p.add_argument("--ell", type=float, help="interval length for --mode finite")
    p.add_argument("--k", type=float, default=1.0, help="curvature for --mode curved / --expansion")
    p.add_argument("--eps", type=float, help="eps for --mode curved")
    p.add_argument("--T", type=float)
    p.add_argument("--h1d", type=float)
    p.add_argument("--expansion", action="store_true", help="fit E_k - E0 + eps k Ecorr over --eps-list")
    p.add_argument("--eps-list", type=float, nargs="+", dest="eps_list")

    p = sub.add_parser("theta0", help="half-plane constant Theta0 (two routes)")
    _common(p, b=False)
    p.add_argument("--theta0-h", type=float, dest="theta0_h")

    p = sub.add_parser("mu", help="sector ground-state energy mu(beta)")
    _common(p, b=False)
    p.add_argument("--beta", nargs="+", required=True, help="angles, e.g. pi/2 2.0 3pi/4")
    p.add_argument("--R", type=float, dest="mu_R")
    p.add_argument("--h", type=float, dest="mu_h")
    p.add_argument("--no-extrapolate", action="store_true", help="report the 2R value without R-extrapolation")

    p = sub.add_parser("corner", help="corner energy ladder and its limit")
    _common(p)
    p.add_argument("--beta", required=True)
    p.add_argument("--L", type=float, nargs="+", dest="corner_L")
    p.add_argument("--ell", type=float, nargs="+", dest="corner_ell")
    p.add_argument("--h", type=float, dest="corner_h")
    p.add_argument("--random-starts", type=int, dest="corner_random_starts")
    p.add_argument("--force", action="store_true", help="ignore cached ladders")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("conjecture", help="corner energies near pi against -(pi - beta) Ecorr")
    _common(p)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--beta", nargs="*", help="extra angles for the table")
    p.add_argument("--L", type=float, nargs="+", dest="corner_L")
    p.add_argument("--ell", type=float, nargs="+", dest="corner_ell")
    p.add_argument("--h", type=float, dest="corner_h")

    p = sub.add_parser("solve2d", help="fixed-field minimizer on a whole domain")
    _common(p)
    _domain(p)
    p.add_argument("--h", type=float, dest="gl_h", help="mesh spacing in units of eps")
    p.add_argument("--starts", nargs="+", choices=["ansatz", "random", "zero"])
    p.add_argument("--seed", type=int)
    p.add_argument("--snapshot", action="store_true", help="write a binary field snapshot")

    p = sub.add_parser("assemble", help="three-term energy prediction (surface, curvature, corners)")
    _common(p)
    _domain(p)
    p.add_argument("--compute-missing", action="store_true", help="run missing corner ladders")
    p.add_argument("--solve", action="store_true", help="also run solve2d on the same domain")
    p.add_argument("--h", type=float, dest="gl_h")

    p = sub.add_parser("fields", help="critical-field ladder of a polygon")
    _common(p, b=False)
    _domain(p)

    p = sub.add_parser("sweep", help="run a command over a parameter grid")
    _common(p, b=False)
    p.add_argument("spec", help="sweep file (YAML/JSON): command, grid, params, output")
    p.add_argument("--workers", type=int)

    sub.add_parser("defaults", help="print the defaults table")
    return ap


def _params(args) -> dict:
    skip = {"command", "config", "out", "cache", "json", "spec", "workers"}
    over = {k: v for k, v in vars(args).items() if k not in skip}
    return config.resolve(getattr(args, "config", None), **over)


def _summary(command: str, rec: records.RunRecord) -> str:
    r = rec.result
    if command == "constants":
        return r["table"] + "".join(f"\n{n}" for n in r["notes"])
    if command == "corner":
        lim = r["limit"]
        text = "not converged (no plateau)" if lim is None else f"{lim:.8f} +- {r['error']:.2e}"
        return f"E_corner(beta = {r['beta']:.6f}) = {text}; conjecture {r['conjecture']:.8f}"
    if command == "assemble":
        pr = r["prediction"]
        lines = [f"surface   {pr['surface_term']: .8f}", f"curvature {pr['curvature_term']: .8f}"]
        lines += [f"corner    {t['count']} x {t['energy']: .8f} (beta = {t['beta']:.6f})" for t in pr["corner_terms"]]
        lines.append(f"total     {pr['total']: .8f}")
        if "solve_energy" in r:
            lines.append(f"solve2d   {r['solve_energy']: .8f} (relative difference {r['relative_error']:.2e})")
        return "\n".join(lines)
    if command == "mu":
        return "\n".join(f"mu({row['beta']:.6f}) = {row['mu']:.6f} +- {row['sensitivity']:.1e}" for row in r["rows"])
    if command == "conjecture":
        lines = [f"{'beta':>10s} {'E_corner':>12s} {'-(pi-beta)Ecorr':>16s} {'difference':>12s}"]
        for row in r["rows"]:
            e = "n/a" if row["e_corner"] is None else f"{row['e_corner']:.8f}"
            d = "n/a" if row["e_corner"] is None else f"{row['difference']:.2e}"
            lines.append(f"{row['beta']:10.6f} {e:>12s} {row['conjecture']:16.8f} {d:>12s}")
        lines.append("flat-angle fit: " + ", ".join(f"{k} = {v:.4g}" for k, v in r["flat_angle"].items()
                                                    if v is not None))
        return "\n".join(lines)
    if command == "fields":
        lad = r["ladder"]
        lines = [f"H_c2   {lad['hc2']:.6g}", f"H_star {lad['h_star']:.6g}"]
        lines += [f"corner {c['index']} (beta = {c['beta']:.4f}): {c['field']:.6g}" for c in lad["corners"]]
        return "\n".join(lines)
    if command == "oned" and "expansion" in r:
        ex = r["expansion"]
        return (f"E0 = {ex['e0']:.10f}, Ecorr = {ex['ecorr']:.8f} (slope route {ex['slope_ecorr']:.8f})\n"
                f"remainder exponent {ex['exponent']:.3f}" + (" [flagged]" if ex["flagged"] else ""))
    keys = [k for k, v in r.items() if isinstance(v, (int, float, str)) and not isinstance(v, bool)]
    return "\n".join(f"{k}: {r[k]}" for k in keys)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "defaults":
        print(config.defaults_table())
        return EXIT_OK
    out = Path(args.out) if args.out else Path("glsurf-out") / args.command
    cache = records.ResultCache(args.cache or Path("glsurf-out") / "cache")
    try:
        params = _params(args)
        if args.command == "sweep":
            spec = commands.load_sweep(args.spec)
            manifest, _ = commands.run_sweep(spec, params, out, cache.root, workers=int(args.workers or
                                                                                        params["workers"]))
            print(json.dumps(manifest, indent=2))
            return EXIT_OK if manifest["complete"] else EXIT_NUMERIC
        hashes = {"polygon": records.file_hash(params["polygon"])} if params.get("polygon") else {}
        if args.config:
            hashes["config"] = records.file_hash(args.config)
        rec = commands.execute(args.command, params, out, cache, hashes)
    except (commands.UsageError, ValueError, FileNotFoundError) as err:
        print(f"glsurf {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (commands.NumericalFailure, RuntimeError, ArithmeticError) as err:
        print(f"glsurf {args.command}: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(rec.to_dict(), indent=2) if args.json else _summary(args.command, rec))
    print(f"[{rec.status}] record: {out / 'record.json'}", file=sys.stderr)
    return EXIT_OK if rec.status == "ok" else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
