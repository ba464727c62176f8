"""SVG figures: field heatmaps, mu(beta), the corner-energy table and log-log fits."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({"font.size": 9, "axes.grid": True, "grid.alpha": 0.3, "svg.fonttype": "none",
                     "figure.dpi": 100})


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def field_heatmap(mesh, values, path, title: str = "", label: str = "|psi|", cmap: str = "viridis",
                  max_triangles: int = 60000) -> Path:
    """Nodal values on a triangle mesh (tripcolor, gouraud shading).

    Very large meshes are thinned to at most ``max_triangles`` cells so the
    SVG stays a manageable size.
    """
    values = np.asarray(values, dtype=float)
    tri = mesh.triangles
    if len(tri) > max_triangles:
        keep = np.linspace(0, len(tri) - 1, max_triangles).astype(int)
        tri = tri[keep]
    T = mtri.Triangulation(mesh.points[:, 0], mesh.points[:, 1], tri)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    pc = ax.tripcolor(T, values, shading="gouraud", cmap=cmap, rasterized=True)
    fig.colorbar(pc, ax=ax, label=label)
    ax.set_aspect("equal")
    ax.grid(False)
    ax.set_title(title)
    return _save(fig, path)


def profile_plot(t, f, path, title: str = "", extra=None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(t, f, lw=1.5, label="f")
    for name, (tt, ff) in (extra or {}).items():
        ax.plot(tt, ff, lw=1, ls="--", label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("f(t)")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def mu_curve(betas, mus, theta0, path, errors=None) -> Path:
    betas = np.asarray(betas, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.errorbar(betas / math.pi, mus, yerr=errors, marker="o", ms=3, lw=1.2, capsize=2, label="mu(beta)")
    ax.axhline(theta0, color="k", ls=":", lw=1, label=f"Theta0 = {theta0:.5f}")
    ax.set_xlabel("beta / pi")
    ax.set_ylabel("lowest eigenvalue")
    ax.legend()
    return _save(fig, path)


def conjecture_plot(rows, ecorr: float, path) -> Path:
    """E_corner against pi - beta, with the straight line -(pi - beta) Ecorr."""
    d = np.array([r["delta"] for r in rows], dtype=float)
    e = np.array([np.nan if r["e_corner"] is None else r["e_corner"] for r in rows], dtype=float)
    err = np.array([0.0 if r.get("error") is None else r["error"] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.6))
    span = max(0.3, float(np.nanmax(np.abs(d))) * 1.1) if len(d) else 0.3
    xs = np.linspace(-span, span, 3)
    ax.plot(xs, -xs * ecorr, color="k", ls="--", lw=1, label="-(pi - beta) Ecorr")
    ax.errorbar(d, e, yerr=err, ls="none", marker="o", ms=4, capsize=2, label="E_corner")
    ax.set_xlabel("pi - beta")
    ax.set_ylabel("corner energy")
    ax.legend()
    return _save(fig, path)


def loglog_fit(x, y, path, slope=None, prefactor=None, xlabel: str = "eps", ylabel: str = "|residual|",
               title: str = "") -> Path:
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(x, y, "o", ms=4, label="data")
    if slope is not None and prefactor is not None and np.isfinite(slope):
        xs = np.geomspace(x.min(), x.max(), 20)
        ax.loglog(xs, prefactor * xs ** slope, "--", lw=1, label=f"fit, slope {slope:.3f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def line_plot(x, ys: dict, path, xlabel: str = "", ylabel: str = "", title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for name, y in ys.items():
        ax.plot(x, y, marker="o", ms=3, lw=1.2, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(ys) > 1:
        ax.legend()
    return _save(fig, path)
