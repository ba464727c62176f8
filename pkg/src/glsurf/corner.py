"""Corner effective energy on the blown-up corner region.

Coordinates are centred at the vertex V: the outer boundary is the pair of
segments {theta = 0, rho <= L} (boundary coordinate s = rho > 0) and
{theta = beta, rho <= L} (s = -rho < 0).  The region holds the points of the
sector within distance ell of the outer boundary.  For beta < pi the two
halves meet along the bisectrix at D; for beta > pi the vertex is surrounded
by a fan of radius ell.

Meshes are built for one half (the theta = 0 side) and reflected across the
bisectrix, so every mesh is exactly mirror symmetric.  Away from the vertex
the half is a uniform (h_s, h_t) grid in tubular coordinates, which makes the
discrete energy of a separable state there equal to the lattice version of
the finite-interval 1D energy.  That lattice 1D energy is the one
subtracted, so straight-boundary discretization error cancels exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import gl2d, oned
from .mesh import Mesh2D, MeshError


class CornerSpecError(ValueError):
    pass


FLAT_TOL = 1e-9  # angles this close to pi are treated as exactly flat


@dataclass(frozen=True)
class CornerDomainSpec:
    beta: float
    L: float
    ell: float

    def __post_init__(self):
        if not 0 < self.beta < 2 * math.pi:
            raise CornerSpecError("beta must lie in (0, 2 pi)")
        if abs(self.beta - math.pi) <= FLAT_TOL:
            object.__setattr__(self, "beta", math.pi)
        if self.L <= 0 or self.ell <= 0:
            raise CornerSpecError("L and ell must be positive")
        if self.beta < math.pi and self.ell > math.tan(self.beta / 2) * self.L * (1 + 1e-12):
            raise CornerSpecError(f"ell = {self.ell} exceeds tan(beta/2) L = {math.tan(self.beta / 2) * self.L:.4g}")

    @property
    def convex(self) -> bool:
        return self.beta < math.pi

    def vertices(self) -> dict:
        """Named points of the region boundary (D only for convex corners)."""
        b, L, l = self.beta, self.L, self.ell
        e_b = np.array([math.cos(b), math.sin(b)])
        nu2 = np.array([math.sin(b), -math.cos(b)])
        pts = {"V": np.zeros(2), "B": np.array([L, 0.0]), "E": np.array([L, l]), "A": L * e_b, "C": L * e_b + l * nu2}
        if self.convex:
            pts["D"] = l / math.sin(b / 2) * np.array([math.cos(b / 2), math.sin(b / 2)])
        return pts

    def partition(self) -> dict:
        """Boundary pieces: outer (natural), inner and cut (Dirichlet)."""
        v = self.vertices()
        inner = ["E", "D", "C"] if self.convex else ["E", "arc(V, ell)", "C"]
        return {"outer": ["A", "V", "B"], "cut": [["B", "E"], ["A", "C"]], "inner": inner,
                "points": {k: list(map(float, p)) for k, p in v.items()}}

    def to_dict(self):
        return {"beta": self.beta, "L": self.L, "ell": self.ell, "partition": self.partition()}


def reflection(beta: float) -> np.ndarray:
    """Reflection across the bisectrix of the corner."""
    return np.array([[math.cos(beta), math.sin(beta)], [math.sin(beta), -math.cos(beta)]])


def zipper(lower, upper, coords, prefer_lower: bool = True, rtol: float = 1e-9):
    """Triangulate the band between two polylines (lists of node indices).

    Advances along whichever row closes the shorter diagonal; exact ties
    (rectangular cells) follow ``prefer_lower`` so structured parts get a
    consistent diagonal.
    """
    tris = []
    i = j = 0
    p, q = len(lower) - 1, len(upper) - 1
    while i < p or j < q:
        if i == p:
            adv_lower = False
        elif j == q:
            adv_lower = True
        else:
            d_low = np.linalg.norm(coords[lower[i + 1]] - coords[upper[j]])
            d_up = np.linalg.norm(coords[lower[i]] - coords[upper[j + 1]])
            if abs(d_low - d_up) <= rtol * max(d_low, d_up):
                adv_lower = prefer_lower
            else:
                adv_lower = d_low < d_up
        if adv_lower:
            tris.append((lower[i], lower[i + 1], upper[j]))
            i += 1
        else:
            tris.append((lower[i], upper[j + 1], upper[j]))
            j += 1
    return tris


@dataclass
class CornerMesh:
    spec: CornerDomainSpec
    mesh: Mesh2D
    s: np.ndarray
    t: np.ndarray
    side: np.ndarray  # +1 theta = 0 half, -1 reflected half, 0 fan / bisectrix
    h_s: float
    h_t: float
    outer: np.ndarray
    inner: np.ndarray
    cut: np.ndarray

    @property
    def dirichlet(self):
        return self.inner | self.cut


def build_corner_mesh(spec: CornerDomainSpec, h: float = 0.1, min_layers: int = 10) -> CornerMesh:
    """Mirror-symmetric triangulation of the corner region.

    Tangential spacing is exactly ``h`` (columns at s = i h, so L is rounded
    to a multiple of h); normal spacing is ell / round(ell / h).
    """
    n_t = int(round(spec.ell / h))
    if n_t < min_layers:
        raise MeshError(f"resolution too coarse: {n_t} layers across ell (need >= {min_layers}); try h <= {spec.ell / min_layers:g}")
    h_s = h
    n_s = int(round(spec.L / h_s))
    L = n_s * h_s
    h_t = spec.ell / n_t
    ys = np.arange(n_t + 1) * h_t
    beta = spec.beta

    coords = []
    on_bis = []
    st = []  # (s, t, side) for the half

    def add(x, y, bis, s, t, side):
        coords.append((x, y))
        on_bis.append(bis)
        st.append((s, t, side))
        return len(coords) - 1

    rows = []
    if spec.convex:
        tb = math.tan(beta / 2)
        if ys[-1] / tb > L * (1 + 1e-9):
            raise MeshError("ell too large for L at this resolution (bisectrix reaches the cut)")
        for y in ys:
            xb = y / tb
            row = [add(xb, y, True, xb, y, 0)]
            i0 = int(math.ceil((xb + 0.5 * h_s) / h_s - 1e-9))
            row += [add(i * h_s, y, False, i * h_s, y, 1) for i in range(i0, n_s + 1)]
            rows.append(row)
        tris = []
        for a, b_ in zip(rows[:-1], rows[1:]):
            tris += zipper(a, b_, np.array(coords))
    else:
        flat = beta == math.pi
        fan_rings = []
        for j, y in enumerate(ys):
            row = [add(0.0, y, flat, 0.0, y, 0 if flat else 1)]
            row += [add(i * h_s, y, False, i * h_s, y, 1) for i in range(1, n_s + 1)]
            rows.append(row)
            if not flat:
                half = beta / 2 - math.pi / 2
                if y == 0:
                    fan_rings.append([row[0]])
                    on_bis[row[0]] = True
                    st[row[0]] = (0.0, 0.0, 0)
                    continue
                m = max(1, int(math.ceil(half * y / h_s)))
                ring = [row[0]]
                for k in range(1, m + 1):
                    th = math.pi / 2 + half * k / m
                    ring.append(add(y * math.cos(th), y * math.sin(th), k == m, 0.0, y, 0))
                fan_rings.append(ring)
        tris = []
        for a, b_ in zip(rows[:-1], rows[1:]):
            tris += zipper(a, b_, np.array(coords))
        if not flat:
            arr = np.array(coords)
            for a, b_ in zip(fan_rings[:-1], fan_rings[1:]):
                tris += zipper(a, b_, arr)
    coords = np.array(coords)
    on_bis = np.array(on_bis)
    st = np.array(st)
    n_half = len(coords)
    # reflect the half across the bisectrix
    Rm = reflection(beta)
    mirror_idx = np.arange(n_half)
    extra = np.flatnonzero(~on_bis)
    mirror_idx[extra] = n_half + np.arange(len(extra))
    pts = np.concatenate([coords, coords[extra] @ Rm.T])
    tri = np.array(tris, dtype=np.int64)
    tri = np.concatenate([tri, mirror_idx[tri]])
    s = np.concatenate([st[:, 0], -st[extra, 0]])
    t = np.concatenate([st[:, 1], st[extra, 1]])
    side = np.concatenate([st[:, 2], -st[extra, 2]]).astype(int)
    tol = 1e-9 * max(L, spec.ell)
    outer = np.abs(t) < tol
    inner = np.abs(t - spec.ell) < tol
    cut = np.abs(np.abs(s) - L) < tol
    mesh = Mesh2D(pts, tri, tags={"outer": outer, "inner": inner, "cut": cut, "dirichlet": inner | cut},
                  dist=t, meta={"kind": "corner", "beta": beta, "L": L, "ell": spec.ell, "h_s": h_s, "h_t": h_t,
                                "n_half": n_half})
    return CornerMesh(CornerDomainSpec(beta, L, spec.ell), mesh, s, t, side, h_s, h_t, outer, inner, cut)


# -- boundary data -------------------------------------------------------------------------

@dataclass
class Trace:
    profile: oned.Profile1D
    alpha: float
    e1d: float
    lattice: bool
    result: object = field(default=None, repr=False)


def trace_data(b: float, ell: float, h_t: float, h_s: float, kind: str = "lattice") -> Trace:
    """(f, alpha, E1D(ell)) used for psi_star and the subtraction.

    ``kind="lattice"`` solves the finite-interval problem on the corner
    mesh's normal grid with the lattice tangential factor; ``kind="half-line"``
    uses the continuum half-line pair (f0, alpha0) and E1D(ell) without
    lattice correction.
    """
    if kind == "lattice":
        res = oned.solve_1d(b, oned.finite(ell, h_t, lattice=h_s))
        return Trace(res.profile, res.alpha_opt, res.energy, True, res)
    if kind == "half-line":
        r0 = oned.solve_1d(b)
        rl = oned.solve_1d(b, oned.finite(ell, h_t))
        return Trace(r0.profile, r0.alpha_opt, rl.energy, False, r0)
    raise ValueError(f"unknown trace kind {kind!r}")


def psi_star(s, t, profile, alpha: float):
    """f(t) exp(-i alpha s - i s t / 2) in the vertex-centred gauge F = r_perp / 2."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return profile(t) * np.exp(-1j * alpha * s - 0.5j * s * t)


def psi_star_trace(cm: CornerMesh, trace: Trace):
    """Dirichlet values on the inner and cut boundaries (zero elsewhere) and the mismatch at D.

    Nodes on the bisectrix take the theta = 0 side (s >= 0); the value the
    reflected side would assign there differs by the returned mismatch.
    """
    mask = cm.dirichlet
    vals = np.zeros(cm.mesh.n_nodes, dtype=complex)
    vals[mask] = psi_star(cm.s[mask], cm.t[mask], trace.profile, trace.alpha)
    if cm.spec.convex:
        sd = cm.spec.ell / math.tan(cm.spec.beta / 2)
        mismatch = float(abs(psi_star(sd, cm.spec.ell, trace.profile, trace.alpha)
                             - psi_star(-sd, cm.spec.ell, trace.profile, trace.alpha)))
    else:
        mismatch = 0.0
    return mask, vals, mismatch


def extended_ansatz(cm: CornerMesh, trace: Trace):
    return psi_star(cm.s, cm.t, trace.profile, trace.alpha)


# -- energy --------------------------------------------------------------------------------

@dataclass
class CornerSolve:
    beta: float
    L: float
    ell: float
    h: float
    value: float
    gl_energy: float
    subtraction: float
    energy_error: float
    mismatch: float
    report: gl2d.SolveReport
    starts: list = field(default_factory=list)
    layer_deviation: float = float("nan")

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("report", "starts")}
        d["report"] = self.report.to_dict()
        d["starts"] = self.starts
        return d


def energy_error_estimate(psi, mesh, b, free):
    """<G, P^-1 G> with P = K + M / b: energy still available to a preconditioned Newton-like step."""
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve

    K = mesh.kinetic_matrix(1.0)
    m = mesh.masses
    G = (K @ psi + m * (np.abs(psi) ** 2 - 1) * psi / b)[free]
    P = (K[free][:, free] + sp.diags(m[free] / b)).tocsc()
    return float(abs(np.real(np.vdot(G, spsolve(P, G)))))


def compute_corner_energy(spec: CornerDomainSpec, b: float = 1.5, h: float = 0.1, trace_kind: str = "lattice",
                          random_starts: int = 0, seed: int = 0, tol: float = 1e-8, max_iter: int = 20000,
                          subtract: bool = True):
    """E_corner(L, ell) = GL_1 minimum on the region with psi_star data minus 2 L E1D(ell).

    Starts from the extended psi_star ansatz (plus ``random_starts`` random
    interiors); the lowest converged energy wins.
    """
    cm = build_corner_mesh(spec, h)
    trace = trace_data(b, spec.ell, cm.h_t, cm.h_s, trace_kind)
    mask, vals, mismatch = psi_star_trace(cm, trace)
    runs, starts = [], []
    inits = [("ansatz", extended_ansatz(cm, trace))]
    rng = np.random.default_rng(seed)
    for k in range(random_starts):
        z = 0.5 * rng.random(cm.mesh.n_nodes) * np.exp(2j * math.pi * rng.random(cm.mesh.n_nodes))
        inits.append((f"random{k}", z))
    for name, init in inits:
        try:
            psi, rep = gl2d.minimize(cm.mesh, 1.0, b, init=init, dirichlet=mask, dirichlet_values=vals, tol=tol,
                                     max_iter=max_iter)
            runs.append((psi, rep))
            starts.append({"start": name, "energy": rep.energy, "iterations": rep.iterations, "converged": True})
        except gl2d.SolverError as exc:
            starts.append({"start": name, "energy": None, "converged": False, "error": str(exc)})
    psi, rep = gl2d.best_of(runs)
    sub = 2 * cm.spec.L * trace.e1d if subtract else 0.0
    err = energy_error_estimate(psi, cm.mesh, b, ~mask)
    out = CornerSolve(beta=spec.beta, L=cm.spec.L, ell=spec.ell, h=h, value=rep.energy - sub, gl_energy=rep.energy,
                      subtraction=sub, energy_error=err, mismatch=mismatch, report=rep, starts=starts,
                      layer_deviation=layer_deviation(cm, psi, trace))
    out.psi = psi
    out.cmesh = cm
    return out


def layer_deviation(cm: CornerMesh, psi, trace: Trace, core_margin: float = 2.0) -> float:
    """sup of ||psi| - f(t)| over the straight strips farther than ``core_margin`` from the core."""
    beta = cm.spec.beta
    core = cm.spec.ell / math.tan(beta / 2) if cm.spec.convex else 0.0
    sel = (np.abs(cm.s) >= core + core_margin) & (cm.side != 0) & ~cm.cut & ~cm.inner
    if not np.any(sel):
        return float("nan")
    return float(np.max(np.abs(np.abs(psi[sel]) - trace.profile(cm.t[sel]))))


# -- limits --------------------------------------------------------------------------------

NOISE_FLOOR = 1e-7


def _power_tail(xs, vals):
    """Fit v = v_inf + c x^(-p) through the last three points; returns (v_inf, p) or None."""
    (x0, x1, x2), (v0, v1, v2) = xs[-3:], vals[-3:]
    d1, d2 = v1 - v0, v2 - v1
    if d1 == 0 or d2 / d1 <= 0:
        return None
    ratio = d2 / d1

    def g(p):
        return (x1 ** -p - x2 ** -p) / (x0 ** -p - x1 ** -p) - ratio

    lo, hi = 1e-3, 40.0
    if g(lo) <= 0 or g(hi) >= 0:
        return None  # slower than any power (or faster than x^-40)
    p = brentq(g, lo, hi, xtol=1e-12)
    c = d2 / (x2 ** -p - x1 ** -p)
    return float(v2 - c * x2 ** -p), float(p)


def _limit_1d(xs, vals, floor: float, model: str = "geometric"):
    """Extrapolate a sequence; returns (limit, error, plateau, diffs, info).

    ``model="geometric"`` assumes differences shrinking by a constant ratio
    (exponential convergence, used in ell); ``model="power"`` fits
    v_inf + c x^(-p) to the last three points (algebraic convergence, used in
    L).  A plateau means the absolute differences (below ``floor`` counted as
    zero) never grow.  The error bar is max(last difference, extrapolated tail).
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    d = np.diff(vals)
    dm = np.where(np.abs(d) < floor, 0.0, np.abs(d))
    plateau = bool(len(d) == 0 or (np.all(np.diff(dm) <= 0) and (len(d) < 2 or dm[-1] < dm[0] or dm[-1] == 0)))
    last = float(vals[-1])
    err = float(abs(d[-1])) if len(d) else floor
    info = {"model": None}
    if len(d) >= 2 and dm[-1] > 0 and dm[-2] > 0 and plateau:
        if model == "power":
            fit = _power_tail(xs, vals)
            if fit is not None:
                lim, p = fit
                info = {"model": "power", "exponent": p}
                return lim, max(err, abs(lim - last)), plateau, d.tolist(), info
        r = d[-1] / d[-2]
        if 0 < r < 1:
            tail = d[-1] * r / (1 - r)
            info = {"model": "geometric", "ratio": float(r)}
            return float(last + tail), max(err, abs(tail)), plateau, d.tolist(), info
    return last, max(err, floor), plateau, d.tolist(), info


@dataclass
class CornerEnergyReport:
    beta: float
    b: float
    grid: list
    limit: float
    error: float
    converged: bool
    ell_limits: dict
    diagonal_limit: float
    ecorr: float
    conjecture: float
    difference: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def extrapolate_limit(entries, beta: float = float("nan"), b: float = float("nan"), ecorr: float = float("nan"),
                      floor: float = NOISE_FLOOR) -> CornerEnergyReport:
    """Iterated limit: extrapolate in ell for each L, then in L.

    ``entries`` is a list of dicts (or CornerSolve) with keys L, ell, value.
    Differences smaller than ``floor`` count as converged.  When successive
    differences do not decrease the report is flagged "not converged".
    """
    rows = []
    for e in entries:
        d = e.to_dict() if hasattr(e, "to_dict") else dict(e)
        rows.append({"L": float(d["L"]), "ell": float(d["ell"]), "value": float(d["value"]),
                     "energy_error": float(d.get("energy_error", 0.0) or 0.0)})
    Ls = sorted({r["L"] for r in rows})
    notes = []
    if len(Ls) < 3:
        notes.append("fewer than 3 L values")
    ell_limits = {}
    ok = True
    ell_errs = []
    for L in Ls:
        sub = sorted((r for r in rows if r["L"] == L), key=lambda r: r["ell"])
        if len(sub) < 3:
            notes.append(f"fewer than 3 ell values at L={L:g}")
        lim, err, plateau, diffs, _ = _limit_1d([r["ell"] for r in sub], [r["value"] for r in sub], floor)
        ell_limits[L] = {"limit": lim, "error": err, "plateau": plateau, "differences": diffs}
        ell_errs.append(err)
        ok &= plateau
    lim, err, plateau, diffs, info = _limit_1d(Ls, [ell_limits[L]["limit"] for L in Ls], floor, model="power")
    ok &= plateau
    err = math.hypot(err, max(ell_errs) if ell_errs else 0.0)
    if not ok:
        notes.append("not converged: successive differences do not decrease")
    diag = sorted(rows, key=lambda r: (r["L"], r["ell"]))
    diag_pts = [max((r for r in rows if r["L"] == L), key=lambda r: r["ell"])["value"] for L in Ls]
    dlim = _limit_1d(Ls, diag_pts, floor, model="power")[0] if len(diag_pts) >= 2 else float("nan")
    conj = -(math.pi - beta) * ecorr
    return CornerEnergyReport(beta=beta, b=b, grid=diag, limit=lim if ok else float("nan"), error=err,
                              converged=ok, ell_limits={str(k): v for k, v in ell_limits.items()}, diagonal_limit=dlim,
                              ecorr=ecorr, conjecture=conj, difference=(lim - conj) if ok else float("nan"),
                              notes=notes + ([f"L-differences {diffs}"] if diffs else [])
                              + ([f"L-fit {info}"] if info.get("model") else []))


DEFAULT_LS = (8.0, 12.0, 16.0)
DEFAULT_ELLS = (6.0, 8.0, 10.0)


def corner_ladder(beta: float, b: float = 1.5, Ls=DEFAULT_LS, ells=DEFAULT_ELLS, h: float = 0.1, progress=None,
                  **kw) -> CornerEnergyReport:
    """Solve the (L, ell) ladder and extrapolate; pairs violating ell <= tan(beta/2) L are skipped."""
    t0 = time.perf_counter()
    solves = []
    for L in Ls:
        for ell in ells:
            try:
                spec = CornerDomainSpec(beta, L, ell)
            except CornerSpecError:
                continue
            cs = compute_corner_energy(spec, b, h, **kw)
            solves.append(cs)
            if progress:
                progress(cs)
    ecorr = oned.compute_ecorr(b)
    rep = extrapolate_limit(solves, beta, b, ecorr)
    rep.notes.append(f"wall time {time.perf_counter() - t0:.1f}s")
    rep.solves = solves
    return rep


@dataclass
class ConjectureRow:
    beta: float
    delta: float
    e_corner: float
    error: float
    conjecture: float
    difference: float
    delta_43: float

    def to_dict(self):
        return asdict(self)


def conjecture_check(limits, ecorr: float):
    """Table of (beta, E_corner, -(pi - beta) Ecorr, difference, |pi - beta|^(4/3)).

    ``limits`` maps beta to (value, error) or to a CornerEnergyReport.
    """
    rows = []
    for beta, v in sorted(limits.items()):
        if isinstance(v, CornerEnergyReport):
            val, err = v.limit, v.error
        else:
            val, err = v
        delta = math.pi - beta
        conj = -delta * ecorr + 0.0
        rows.append(ConjectureRow(beta, delta, val, err, conj, val - conj, abs(delta) ** (4.0 / 3.0)))
    return rows


def flat_angle_fit(rows):
    """Single constant C with |E_corner - conjecture| <= C |delta|^(4/3) over the near-flat rows."""
    ratios = [abs(r.difference) / r.delta_43 for r in rows if r.delta != 0]
    return max(ratios) if ratios else 0.0


def quick_value(beta: float, L: float, ell: float, b: float = 1.5, h: float = 0.1) -> float:
    return compute_corner_energy(CornerDomainSpec(beta, L, ell), b, h).value
