"""Linear spectral constants: Theta0 (half-plane) and mu(beta) (sectors)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.linalg import eigsh

from . import oned
from .mesh import graded_radii, polar_sector_mesh


@dataclass
class Theta0Result:
    value: float
    alpha: float
    error: float
    coarse: float
    fine: float
    shooting: float
    shooting_alpha: float

    def to_dict(self):
        return dict(self.__dict__)


def _fd_min(h, T):
    mode = oned.half_line(T, h)
    res = minimize_scalar(lambda a: oned.lowest_eigenvalue(a, mode), bounds=(-2.0, 0.0), method="bounded",
                          options={"xatol": 1e-9})
    return float(res.fun), float(res.x)


def shooting_eigenvalue(alpha: float, T: float = 10.0) -> float:
    """Lowest eigenvalue of -u'' + (t + alpha)^2 u with u'(0) = 0, by shooting.

    Integrates from t = 0 and locates the first eigenvalue at which the
    solution changes sign at t = T (a Dirichlet cut far in the tail).
    """

    def end(mu):
        sol = solve_ivp(lambda t, y: [y[1], ((t + alpha) ** 2 - mu) * y[0]], (0.0, T), [1.0, 0.0],
                        method="DOP853", rtol=1e-11, atol=1e-14)
        return sol.y[0, -1]

    lo = 0.0
    f_lo = end(lo)
    mu = lo
    while True:
        mu += 0.05
        f_mu = end(mu)
        if np.sign(f_mu) != np.sign(f_lo):
            return brentq(end, mu - 0.05, mu, xtol=1e-13)
        if mu > 5 + (T + abs(alpha)) ** 2:
            raise RuntimeError("shooting found no eigenvalue")


def compute_theta0(h: float = 0.02, T: float = 12.0) -> Theta0Result:
    """Theta0 = min over alpha of the lowest half-line eigenvalue.

    Finite differences at spacings h and h/2 are combined by Richardson
    extrapolation (second order); the shooting route is reported alongside.
    """
    coarse, _ = _fd_min(h, T)
    fine, a_f = _fd_min(h / 2, T)
    value = (4 * fine - coarse) / 3
    res = minimize_scalar(shooting_eigenvalue, bounds=(-1.2, -0.4), method="bounded", options={"xatol": 1e-6})
    return Theta0Result(value=value, alpha=a_f, error=abs(fine - coarse) / 3, coarse=coarse, fine=fine,
                        shooting=float(res.fun), shooting_alpha=float(res.x))


THETA0 = 0.5901061249  # reference value used only for defaults and range messages


@dataclass(frozen=True)
class SectorSpec:
    beta: float
    R: float = 10.0
    h: float = 0.1
    h_vertex: float = 0.05

    def __post_init__(self):
        if not 0 < self.beta < 2 * math.pi:
            raise ValueError("beta must lie in (0, 2 pi)")
        if self.R <= 0 or self.h <= 0:
            raise ValueError("R and h must be positive")

    def mesh(self):
        radii = graded_radii(self.R, self.h_vertex, self.h, focus=(), width=2.0)
        n_theta = max(9, int(math.ceil(self.beta * self.R / self.h)) + 1)
        return polar_sector_mesh(self.beta, self.R, radii, n_theta)


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray = field(repr=False)
    residual: float
    sensitivity: float
    value_truncated: float = float("nan")
    truncation_sensitivity: float = float("nan")
    mesh_sensitivity: float = float("nan")
    spec: SectorSpec | None = None
    mesh: object = field(default=None, repr=False)
    wall_time: float = 0.0

    def to_dict(self):
        return {"beta": None if self.spec is None else self.spec.beta, "mu": self.value,
                "mu_truncated": self.value_truncated, "residual": self.residual,
                "sensitivity": self.sensitivity, "truncation_sensitivity": self.truncation_sensitivity,
                "mesh_sensitivity": self.mesh_sensitivity, "wall_time": self.wall_time}


def sector_eigen(spec: SectorSpec):
    """Lowest eigenpair on one truncated sector mesh."""
    mesh = spec.mesh()
    free = ~mesh.tag("dirichlet")
    K = mesh.kinetic_matrix(1.0)[free][:, free].tocsc()
    m = mesh.masses[free]
    # symmetric scaling: M^{-1/2} K M^{-1/2}
    s = sp.diags(1 / np.sqrt(m))
    A = (s @ K @ s).tocsc()
    vals, vecs = eigsh(A, k=2, sigma=0.0, which="LM", tol=1e-13)
    i = int(np.argmin(vals))
    mu = float(vals[i])
    y = vecs[:, i]
    u = y / np.sqrt(m)
    res = np.linalg.norm(A @ y - mu * y) / np.linalg.norm(y)
    full = np.zeros(mesh.n_nodes, dtype=complex)
    full[free] = u
    return mu, full, float(res), mesh


def compute_mu(beta: float, R: float = 12.0, h: float = 0.12, extrapolate: bool = True) -> EigenResult:
    """mu(beta) on the sector with magnetic Neumann sides and a Dirichlet arc.

    Solved at radius R and 2R; when ``extrapolate`` the two are combined
    assuming a c / R^2 truncation shift (relevant when the ground state is
    not localized at the vertex, e.g. beta >= pi).  A third solve at spacing
    1.5 h gives the mesh sensitivity.
    """
    t0 = time.perf_counter()
    mu1, _, _, _ = sector_eigen(SectorSpec(beta, R, h))
    mu2, vec, res, mesh = sector_eigen(SectorSpec(beta, 2 * R, h))
    mu_c, _, _, _ = sector_eigen(SectorSpec(beta, R, 1.5 * h))
    trunc = abs(mu1 - mu2)
    value = (4 * mu2 - mu1) / 3 if extrapolate else mu2
    mesh_sens = abs(mu_c - mu1) / (1.5 ** 2 - 1)
    return EigenResult(value=float(value), vector=vec, residual=res, sensitivity=trunc / 3 + mesh_sens,
                       value_truncated=mu2, truncation_sensitivity=trunc, mesh_sensitivity=mesh_sens,
                       spec=SectorSpec(beta, 2 * R, h), mesh=mesh, wall_time=time.perf_counter() - t0)


def rayleigh_quotient(psi, mesh, eps: float = 1.0) -> float:
    K = mesh.kinetic_matrix(eps)
    return float(np.real(np.vdot(psi, K @ psi)) / np.sum(mesh.masses * np.abs(psi) ** 2))


# -- critical fields ------------------------------------------------------------------------

@dataclass
class FieldLadder:
    eps: float
    theta0: float
    hc2: float
    h_star: float
    corners: list  # (index, beta, mu, clamped mu, field), sorted by field
    hc3: float

    def to_dict(self):
        return dict(self.__dict__)


def critical_fields(eps: float, polygon=None, betas=None, theta0: float | None = None, mu_fn=None) -> FieldLadder:
    """H_c2 = 1/eps^2 <= H* = 1/(Theta0 eps^2) <= H_corner,j = 1/(mu(beta_j) eps^2)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if theta0 is None:
        theta0 = compute_theta0().value
    if betas is None:
        betas = [] if polygon is None else [b for _, b in polygon.corners]
    mu_fn = mu_fn or (lambda b: compute_mu(b).value)
    cache = {}
    rows = []
    for j, beta in enumerate(betas):
        key = round(float(beta), 12)
        if key not in cache:
            cache[key] = mu_fn(beta) if beta < math.pi else theta0
        mu = cache[key]
        mc = min(mu, theta0)
        rows.append({"index": j, "beta": float(beta), "mu": float(mu), "mu_clamped": float(mc),
                     "field": 1.0 / (mc * eps ** 2)})
    rows.sort(key=lambda r: (r["field"], r["index"]))
    h_star = 1.0 / (theta0 * eps ** 2)
    hc3 = rows[-1]["field"] if rows else h_star
    return FieldLadder(eps=eps, theta0=theta0, hc2=1.0 / eps ** 2, h_star=h_star, corners=rows, hc3=hc3)
