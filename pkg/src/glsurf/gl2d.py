"""Fixed-field Ginzburg-Landau minimization on triangle meshes.

Energy (field frozen to F = r_perp / 2, so curl A = 1 exactly):

    G[psi] = sum_e w_e |U_e psi_j - psi_i|^2 + sum_i m_i (|psi_i|^4 - 2 |psi_i|^2) / (2 b eps^2)
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import Mesh2D, MeshError, layer_mesh, polygon_mesh


class ParameterError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message, residual=float("nan"), report=None):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual
        self.report = report


def _check(eps, b):
    if not eps > 0 or not b > 0:
        raise ParameterError(f"eps and b must be positive (got eps={eps}, b={b})")


def gl_energy(psi, mesh: Mesh2D, eps: float, b: float) -> float:
    _check(eps, b)
    psi = np.asarray(psi, dtype=complex)
    q = np.abs(psi) ** 2
    pot = np.sum(mesh.masses * (q * q - 2 * q)) / (2 * b * eps ** 2)
    return mesh.kinetic_energy(psi, eps) + float(pot)


def _half_gradient(psi, K, m, eps, b):
    """G with dE = 2 Re <G, dpsi>."""
    return K @ psi + m * (np.abs(psi) ** 2 - 1.0) * psi / (b * eps ** 2)


def el_residual(psi, mesh: Mesh2D, eps: float, b: float, free=None) -> float:
    """Relative residual of -(grad + iF/eps^2)^2 psi - (1 - |psi|^2) psi / (b eps^2).

    Pointwise residual (lumped mass) in an m-weighted RMS norm, measured in
    units of 1 / (b eps^2) and normalized by the domain area; zero for psi = 0.
    """
    _check(eps, b)
    psi = np.asarray(psi, dtype=complex)
    m = mesh.masses
    r = _half_gradient(psi, mesh.kinetic_matrix(eps), m, eps, b) / m
    if free is not None:
        r = r[free]
        m = m[free]
    return float(np.sqrt(np.sum(m * np.abs(r) ** 2) / mesh.masses.sum()) * b * eps ** 2)


@dataclass
class SolveReport:
    energy: float
    iterations: int
    residual: float
    wall_time: float
    converged: bool
    energies: list = field(default_factory=list, repr=False)
    rejected: int = 0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, history: bool = False):
        d = {"energy": self.energy, "iterations": self.iterations, "residual": self.residual,
             "wall_time": self.wall_time, "converged": self.converged, "rejected_steps": self.rejected,
             "diagnostics": self.diagnostics}
        if history:
            d["energies"] = list(self.energies)
        return d


def _quartic_step(psi, d, Kpsi, Kd, m, eps, b):
    """Exact minimizer over tau >= 0 of E(psi + tau d) (a quartic polynomial)."""
    k1 = 2 * np.real(np.vdot(d, Kpsi))
    k2 = np.real(np.vdot(d, Kd))
    q0 = np.abs(psi) ** 2
    q1 = 2 * np.real(np.conj(psi) * d)
    q2 = np.abs(d) ** 2
    s = 1.0 / (2 * b * eps ** 2)
    # sum m (q^2 - 2 q) s with q = q0 + q1 tau + q2 tau^2
    c1 = k1 + s * np.sum(m * (2 * q0 * q1 - 2 * q1))
    c2 = k2 + s * np.sum(m * (q1 * q1 + 2 * q0 * q2 - 2 * q2))
    c3 = s * np.sum(m * 2 * q1 * q2)
    c4 = s * np.sum(m * q2 * q2)
    roots = np.roots([4 * c4, 3 * c3, 2 * c2, c1])
    cands = [0.0] + [r.real for r in roots if abs(r.imag) <= 1e-12 * max(1.0, abs(r)) and r.real > 0]
    vals = [((c4 * t + c3) * t + c2) * t * t + c1 * t for t in cands]
    i = int(np.argmin(vals))
    return cands[i], vals[i]


def minimize(mesh: Mesh2D, eps: float, b: float, init=None, dirichlet=None, dirichlet_values=None,
             tol: float = 1e-6, max_iter: int = 5000, precondition: bool = True, record: bool = True):
    """Minimize the energy with Dirichlet data on ``dirichlet`` nodes (natural elsewhere).

    Preconditioned nonlinear conjugate gradients: directions use the
    H^1-type operator K + M / (b eps^2) (factored once); the step along each
    direction minimizes the quartic restriction of the energy exactly, so
    the energy never increases.  A step whose recomputed energy rises above
    roundoff is rejected and the iteration restarts from steepest descent.
    Stops when :func:`el_residual` on free nodes is below ``tol``.
    """
    _check(eps, b)
    t0 = time.perf_counter()
    n = mesh.n_nodes
    psi = np.zeros(n, dtype=complex) if init is None else np.array(init, dtype=complex)
    if psi.shape != (n,):
        raise ValueError("init has the wrong length")
    fixed = np.zeros(n, dtype=bool) if dirichlet is None else np.asarray(dirichlet, dtype=bool)
    if dirichlet_values is not None:
        psi[fixed] = np.asarray(dirichlet_values, dtype=complex)[fixed] if np.size(dirichlet_values) == n \
            else np.asarray(dirichlet_values, dtype=complex)
    free = ~fixed
    K = mesh.kinetic_matrix(eps)
    m = mesh.masses
    Kf = K[free][:, free]
    if precondition:
        P = (Kf + sp.diags(m[free] / (b * eps ** 2))).tocsc()
        lu = splu(P, permc_spec="COLAMD")
        apply_p = lu.solve
    else:
        apply_p = lambda g: g / m[free]  # noqa: E731
    energies = []
    E = gl_energy(psi, mesh, eps, b)
    energies.append(E)
    d = None
    g_old = z_old = None
    rejected = 0
    res = el_residual(psi, mesh, eps, b, free)
    it = 0
    scale = max(1.0, abs(E))
    mf, mtot = m[free], m.sum()
    for it in range(1, max_iter + 1):
        Kpsi = K @ psi
        G = (Kpsi + m * (np.abs(psi) ** 2 - 1.0) * psi / (b * eps ** 2))[free]
        res = float(np.sqrt(np.sum(np.abs(G) ** 2 / mf) / mtot) * b * eps ** 2)
        if res < tol:
            it -= 1
            break
        z = apply_p(G)
        sd = d is None or g_old is None
        if sd:
            d_f = -z
        else:
            beta = max(0.0, np.real(np.vdot(z, G - g_old)) / np.real(np.vdot(z_old, g_old)))
            d_f = -z + beta * d[free]
            if np.real(np.vdot(G, d_f)) >= 0:
                d_f = -z
                sd = True
        d = np.zeros(n, dtype=complex)
        d[free] = d_f
        tau, dE = _quartic_step(psi, d, Kpsi, K @ d, m, eps, b)
        if tau == 0.0:
            if not sd:
                g_old = None
                d = None
                continue
            break
        trial = psi + tau * d
        Et = gl_energy(trial, mesh, eps, b)
        if Et > E + 1e-13 * scale:
            rejected += 1
            g_old = None
            d = None
            if rejected > 20:
                break
            continue
        psi, E = trial, Et
        energies.append(E)
        g_old, z_old = G, z
    res = el_residual(psi, mesh, eps, b, free)
    report = SolveReport(energy=E, iterations=it, residual=res, wall_time=time.perf_counter() - t0,
                         converged=res < tol, energies=energies if record else [], rejected=rejected,
                         diagnostics={"n_nodes": n, "n_free": int(free.sum()), "max_abs": float(np.abs(psi).max())})
    if not report.converged:
        raise SolverError("2D minimization did not converge", res, report)
    return psi, report


def best_of(runs):
    """Pick the lowest-energy (psi, report) pair from several starts."""
    runs = [r for r in runs if r is not None]
    if not runs:
        raise SolverError("all starts failed")
    return min(runs, key=lambda r: r[1].energy)


# -- initial data -------------------------------------------------------------------------

def _tree_phase(mesh: Mesh2D, edge_increment):
    """Integrate per-edge phase increments (i -> j for i < j) along a BFS spanning tree."""
    n = mesh.n_nodes
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    adj = sp.csr_matrix((np.arange(1, len(i) + 1), (i, j)), shape=(n, n))
    adj = adj + adj.T
    chi = np.full(n, np.nan)
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    for root in range(n):
        if not np.isnan(chi[root]):
            continue
        chi[root] = 0.0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if np.isnan(chi[v]):
                    e = data[k] - 1
                    inc = edge_increment[e]
                    chi[v] = chi[u] + (inc if u < v else -inc)
                    queue.append(v)
    return chi


def boundary_ansatz(mesh: Mesh2D, eps: float, profile, alpha: float, tangent, t=None, ring=None,
                    curvature=None):
    """psi = f(t) exp(i chi) with superfluid velocity -(t + alpha - eps k t^2 / 2) tau / (eps (1 - eps k t)).

    ``tangent`` is the unit counterclockwise tangent of the nearest boundary
    point at each node and ``t`` the scaled distance (defaults to
    ``mesh.dist / eps``).  The phase chi solves grad chi = v - F / eps^2 edge
    by edge along a spanning tree.  When ``ring`` (an ordered closed list of
    boundary nodes) is given, alpha is nudged so the circulation around it is
    an integer multiple of 2 pi; the adjusted alpha and the winding are
    returned with psi.
    """
    t = mesh.dist / eps if t is None else np.asarray(t)
    tau = np.asarray(tangent, dtype=float)
    p = mesh.points
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    dx = p[j] - p[i]
    tmid = 0.5 * (t[i] + t[j])
    tau_mid = 0.5 * (tau[i] + tau[j])
    ek = np.zeros(len(i)) if curvature is None else eps * 0.5 * (curvature[i] + curvature[j])
    jac = np.maximum(1.0 - ek * tmid, 0.05)  # deep nodes carry f = 0; keep their phase finite
    proj = (tau_mid * dx).sum(1) / jac
    shift = -0.5 * ek * tmid ** 2
    links = mesh.links(eps)

    def increments(a):
        return -(tmid + shift + a) / eps * proj - links

    winding = None
    if ring is not None:
        ring = np.asarray(ring)
        a_, b_ = ring, np.roll(ring, -1)
        sgn = np.where(a_ < b_, 1.0, -1.0)
        key = {(int(x), int(y)): k for k, (x, y) in enumerate(mesh.edges)}
        eidx = np.array([key[(int(min(x, y)), int(max(x, y)))] for x, y in zip(a_, b_)])
        circ0 = np.sum(sgn * increments(alpha)[eidx])
        slope = -np.sum(sgn * proj[eidx]) / eps
        winding = int(round(circ0 / (2 * math.pi)))
        alpha = alpha + (2 * math.pi * winding - circ0) / slope
    chi = _tree_phase(mesh, increments(alpha))
    psi = profile(t) * np.exp(1j * chi)
    return psi, alpha, winding


def disc_ring(mesh: Mesh2D, level: int = 0):
    """Ordered nodes of ring ``level`` (t index) of a layer mesh."""
    n_t = mesh.meta["n_t"]
    return np.arange(mesh.meta["n_s"]) * n_t + level


def layer_tangents(mesh: Mesh2D, poly):
    s = mesh.meta["s"]
    nu = np.array([poly.normal(si) for si in s])
    tau = np.stack([nu[:, 1], -nu[:, 0]], axis=1)
    return np.repeat(tau, mesh.meta["n_t"], axis=0)


def layer_curvature(mesh: Mesh2D, poly):
    k = np.array([poly.curvature(si) for si in mesh.meta["s"]])
    return np.repeat(k, mesh.meta["n_t"])


def rectangle_tangents(mesh: Mesh2D):
    x0, x1, y0, y1 = mesh.meta["box"]
    p = mesh.points
    d = np.stack([p[:, 1] - y0, x1 - p[:, 0], y1 - p[:, 1], p[:, 0] - x0], axis=1)
    side = np.argmin(d, axis=1)
    table = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return table[side]


def random_init(mesh: Mesh2D, seed: int = 0, amplitude: float = 0.5):
    rng = np.random.default_rng(seed)
    return amplitude * (rng.random(mesh.n_nodes) * np.exp(2j * math.pi * rng.random(mesh.n_nodes)))


def domain_mesh(poly, eps: float, h: float = 0.1, depth: float = 8.0) -> Mesh2D:
    """Boundary-layer mesh for smooth domains, unstructured mesh otherwise; ``h`` in units of eps."""
    if poly.n_corners == 0:
        try:
            return layer_mesh(poly, eps, depth=depth, h=h)
        except MeshError:
            pass
    return polygon_mesh(poly, h * eps)


def mesh_tangents(mesh: Mesh2D, poly):
    """Counterclockwise tangent and curvature of the nearest boundary point of every node."""
    if mesh.meta.get("kind") == "layer":
        return layer_tangents(mesh, poly), layer_curvature(mesh, poly)
    s = mesh.meta["s_near"]
    nu = np.array([poly.normal(x) for x in s])
    k = np.array([poly.curvature(x) for x in s])
    return np.stack([nu[:, 1], -nu[:, 0]], axis=1), k


@dataclass
class DomainSolve:
    psi: np.ndarray = field(repr=False)
    mesh: Mesh2D = field(repr=False)
    report: SolveReport
    starts: list
    alpha: float
    winding_hint: int | None

    def to_dict(self):
        return {"report": self.report.to_dict(), "starts": self.starts, "alpha": self.alpha,
                "winding_hint": self.winding_hint, "n_nodes": self.mesh.n_nodes}


def solve_domain(poly, eps: float, b: float, profile=None, alpha: float = 0.0, h: float = 0.1, depth: float = 8.0,
                 starts=("ansatz",), seed: int = 0, tol: float = 1e-6, max_iter: int = 5000) -> DomainSolve:
    """Fixed-field minimizer on a whole domain, best of the requested starts.

    ``starts`` draws from "ansatz" (f(t) with the boundary phase; needs
    ``profile`` and ``alpha``), "random" and "zero".  Layer meshes hold the
    inner artificial curve at zero; unstructured meshes are natural everywhere.
    """
    _check(eps, b)
    if not starts:
        raise ParameterError("at least one start is needed")
    mesh = domain_mesh(poly, eps, h, depth)
    fixed = mesh.tag("artificial") if "artificial" in mesh.tags else None
    zeros = np.zeros(mesh.n_nodes, dtype=complex)
    runs, table = [], []
    a_used, wind = alpha, None
    for k, name in enumerate(starts):
        if name == "ansatz":
            if profile is None:
                raise ParameterError("the ansatz start needs a 1D profile")
            tau, curv = mesh_tangents(mesh, poly)
            ring = disc_ring(mesh, 0) if mesh.meta.get("kind") == "layer" else None
            init, a_used, wind = boundary_ansatz(mesh, eps, profile, alpha, tau, ring=ring, curvature=curv)
        elif name == "random":
            init = random_init(mesh, seed + k)
        elif name == "zero":
            init = zeros.copy()
        else:
            raise ParameterError(f"unknown start {name!r}")
        try:
            psi, rep = minimize(mesh, eps, b, init=init, dirichlet=fixed, dirichlet_values=zeros, tol=tol,
                                max_iter=max_iter)
        except SolverError as err:
            table.append({"start": name, "energy": None, "converged": False, "error": str(err)})
            continue
        table.append({"start": name, "energy": rep.energy, "iterations": rep.iterations, "converged": True})
        runs.append((psi, rep))
    psi, rep = best_of(runs)
    return DomainSolve(psi, mesh, rep, table, a_used, wind)


# -- diagnostics ---------------------------------------------------------------------------

@dataclass
class AgmonReport:
    d_over_eps: list
    mass: list
    rate: float
    no_mass: bool

    def to_dict(self):
        return dict(self.__dict__)


def agmon_profile(psi, mesh: Mesh2D, eps: float, n: int = 10) -> AgmonReport:
    """Fraction of |psi|^2 beyond distance d = eps, 2 eps, ..., n eps from the boundary."""
    w = mesh.masses * np.abs(psi) ** 2
    total = w.sum()
    ds = list(range(1, n + 1))
    if total <= 1e-20 * mesh.area:
        return AgmonReport(ds, [0.0] * n, float("nan"), True)
    mass = [float(w[mesh.dist > k * eps].sum() / total) for k in ds]
    x = np.array(ds, dtype=float)
    y = np.array(mass)
    ok = y > 1e-300
    rate = float(-np.polyfit(x[ok], np.log(y[ok]), 1)[0]) if ok.sum() >= 2 else float("inf")
    return AgmonReport(ds, mass, rate, False)


def surface_profile_deviation(psi, mesh: Mesh2D, eps: float, profile, corners=(), c2: float = 1.0,
                              depth: float = 3.0) -> float:
    """sup over nodes with dist <= depth eps of ||psi| - f0(dist / eps)|.

    Nodes within c2 eps |log eps| of any point in ``corners`` are skipped.
    """
    sel = mesh.dist <= depth * eps
    if len(corners):
        c = np.asarray(corners, dtype=float).reshape(-1, 2)
        dc = np.min(np.linalg.norm(mesh.points[:, None, :] - c[None], axis=2), axis=1)
        sel &= dc >= c2 * eps * abs(math.log(eps))
    return float(np.max(np.abs(np.abs(psi[sel]) - profile(mesh.dist[sel] / eps))))


class VanishingOnContour(ValueError):
    pass


def winding_number(psi, mesh: Mesh2D, contour_offset: float, eps: float | None = None, poly=None,
                   n_samples: int | None = None, floor: float = 1e-3) -> int:
    """Degree of psi along the closed curve at distance ``contour_offset`` inside the boundary.

    Layer meshes use the node ring closest to the offset; otherwise the curve
    is sampled from ``poly`` and psi is interpolated linearly.
    """
    psi = np.asarray(psi, dtype=complex)
    if mesh.meta.get("kind") == "layer":
        t = np.asarray(mesh.meta["t"])
        level = int(np.argmin(np.abs(t * mesh.meta["eps"] - contour_offset)))
        vals = psi[disc_ring(mesh, level)]
    else:
        if poly is None:
            raise ValueError("a polygon is needed to place the contour")
        from matplotlib.tri import LinearTriInterpolator, Triangulation

        n_samples = n_samples or 8 * int(np.ceil(poly.perimeter / max(contour_offset, 1e-3))) + 4000
        s = np.linspace(0, poly.perimeter, n_samples, endpoint=False)
        pts = np.array([poly.point(si) + contour_offset * poly.normal(si) for si in s])
        tr = Triangulation(mesh.points[:, 0], mesh.points[:, 1], mesh.triangles)
        re = LinearTriInterpolator(tr, psi.real)(pts[:, 0], pts[:, 1])
        im = LinearTriInterpolator(tr, psi.imag)(pts[:, 0], pts[:, 1])
        if np.ma.is_masked(re) and np.any(re.mask):
            raise ValueError("contour leaves the mesh")
        vals = np.asarray(re) + 1j * np.asarray(im)
    scale = max(np.abs(psi).max(), 1e-300)
    if np.min(np.abs(vals)) < floor * scale:
        raise VanishingOnContour(f"vanishing on contour (min |psi| = {np.min(np.abs(vals)):.2e})")
    dphi = np.angle(np.roll(vals, -1) / vals)
    return int(round(dphi.sum() / (2 * math.pi)))


def supercurrent(psi, mesh: Mesh2D, eps: float):
    """Edge currents Im(conj(psi_i) U_ij psi_j) / |e| and a least-squares nodal vector field."""
    psi = np.asarray(psi, dtype=complex)
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    U = np.exp(1j * mesh.links(eps))
    dx = mesh.points[j] - mesh.points[i]
    length = np.linalg.norm(dx, axis=1)
    je = np.imag(np.conj(psi[i]) * U * psi[j]) / length
    e = dx / length[:, None]
    n = mesh.n_nodes
    A = np.zeros((n, 2, 2))
    rhs = np.zeros((n, 2))
    outer = e[:, :, None] * e[:, None, :]
    for node in (i, j):
        np.add.at(A, node, outer)
        np.add.at(rhs, node, e * je[:, None])
    J = np.linalg.solve(A + 1e-14 * np.eye(2), rhs[..., None])[..., 0]
    return je, J


@dataclass
class DensityRow:
    name: str
    s0: float
    s1: float
    quartic_mass: float
    leading: float
    curvature_term: float
    prediction: float
    residual: float


def density_vs_curvature(psi, mesh: Mesh2D, eps: float, b: float, sectors, poly, e0: float, ecorr: float,
                         node_s=None):
    """Quartic mass (1/2b) int_D |psi|^4 per boundary patch against
    -eps E0 |patch| + eps^2 Ecorr int_patch k ds.

    ``sectors`` is a list of (name, s0, s1) physical arclength intervals;
    ``node_s`` gives each node's boundary coordinate (layer meshes supply it).
    """
    if node_s is None:
        node_s = np.repeat(mesh.meta["s"], mesh.meta["n_t"])
    q = mesh.masses * np.abs(psi) ** 4 / (2 * b)
    P = poly.perimeter
    rows = []
    for name, s0, s1 in sectors:
        ss = np.mod(node_s - s0, P)
        width = (s1 - s0) % P or P
        # half-weight nodes exactly on the cuts so adjacent patches partition the mass
        tol = 1e-12 * P
        on_cut = (ss <= tol) | (np.abs(ss - width) <= tol) | (ss >= P - tol)
        wts = np.where(on_cut, 0.5, (ss < width).astype(float))
        if width >= P - tol:
            wts = np.ones_like(ss)
        mass = float(np.sum(q * wts))
        kint = _curv_int(poly, s0, s0 + width)
        lead = -eps * e0 * width
        corr = eps ** 2 * ecorr * kint
        rows.append(DensityRow(name, s0, s0 + width, mass, lead, corr, lead + corr, mass - lead - corr))
    return rows


def _curv_int(poly, a, b, n: int = 4001):
    s = np.linspace(a, b, n)
    k = np.array([poly.curvature(si % poly.perimeter) for si in s])
    return float(np.trapezoid(k, s))


# -- snapshots ------------------------------------------------------------------------------

def save_snapshot(path, psi, mesh: Mesh2D, params: dict):
    """Write ``path.bin`` (points, triangles, psi as raw little-endian arrays) and ``path.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"format": "glsurf-field-1", "params": params, "mesh": mesh.header(),
              "layout": [["points", "<f8", list(mesh.points.shape)],
                         ["triangles", "<i8", list(mesh.triangles.shape)],
                         ["psi", "<c16", [mesh.n_nodes]]]}
    with open(path.with_suffix(".bin"), "wb") as fh:
        fh.write(mesh.points.astype("<f8").tobytes())
        fh.write(mesh.triangles.astype("<i8").tobytes())
        fh.write(np.asarray(psi).astype("<c16").tobytes())
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, default=float))
    return path.with_suffix(".json")


def load_snapshot(path):
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    raw = path.with_suffix(".bin").read_bytes()
    out, off = {}, 0
    for name, dtype, shape in header["layout"]:
        count = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=off).reshape(shape)
        off += arr.nbytes
        out[name] = arr.copy()
    return header, out
