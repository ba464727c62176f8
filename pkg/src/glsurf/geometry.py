"""Curvilinear polygons, boundary parametrization and tubular coordinates.

Boundaries are stored in physical units and traversed counterclockwise, so the
inward normal is the tangent rotated by +90 degrees and a convex arc has
positive curvature.  Tubular coordinates ``(s, t)`` are rescaled by ``eps``:
``r(s, t) = gamma(eps * s) + eps * t * nu(eps * s)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

CLOSURE_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid boundary description."""


class AmbiguousProjection(GeometryError):
    """Point has more than one nearest boundary point."""

    def __init__(self, point, candidates):
        self.point = np.asarray(point, dtype=float)
        self.candidates = candidates
        desc = ", ".join(f"s={c[0]:.6g} at ({c[1][0]:.6g}, {c[1][1]:.6g})" for c in candidates)
        super().__init__(f"ambiguous projection of {tuple(self.point)}: {desc}")


def _rot90(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class Arc:
    """Smooth boundary piece parametrized by arclength ``u in [0, length]``."""

    kind = "arc"
    length: float

    def point(self, u):
        raise NotImplementedError

    def tangent(self, u):
        raise NotImplementedError

    def curvature(self, u):
        raise NotImplementedError

    def normal(self, u):
        return _rot90(self.tangent(u))

    def closest(self, p) -> tuple[float, float]:
        """Return ``(u, distance)`` of the nearest point of the arc to ``p``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def area_term(self) -> float:
        """Contribution of the arc to the boundary integral of (x dy - y dx) / 2."""
        f = lambda u: float(np.cross(self.point(u), self.tangent(u)))
        return 0.5 * quad(f, 0.0, self.length, limit=200, epsabs=1e-11, epsrel=1e-10)[0]

    def total_curvature(self) -> float:
        val, _ = quad(lambda u: float(self.curvature(u)), 0.0, self.length, limit=400, epsabs=1e-13, epsrel=1e-12)
        return val


@dataclass
class Segment(Arc):
    start: tuple[float, float]
    end: tuple[float, float]
    kind = "segment"

    def __post_init__(self):
        self.p0 = np.asarray(self.start, dtype=float)
        self.p1 = np.asarray(self.end, dtype=float)
        d = self.p1 - self.p0
        self.length = float(np.hypot(*d))
        if self.length == 0:
            raise GeometryError("degenerate segment")
        self._tau = d / self.length

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return self.p0 + u[..., None] * self._tau

    def tangent(self, u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self._tau, u.shape + (2,)).copy()

    def curvature(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def closest(self, p):
        u = float(np.clip(np.dot(np.asarray(p) - self.p0, self._tau), 0.0, self.length))
        return u, float(np.hypot(*(np.asarray(p) - self.point(u))))

    def area_term(self):
        return 0.5 * float(self.p0[0] * self.p1[1] - self.p0[1] * self.p1[0])

    def total_curvature(self):
        return 0.0

    def to_dict(self):
        return {"type": "segment", "start": list(map(float, self.p0)), "end": list(map(float, self.p1))}


@dataclass
class CircularArc(Arc):
    """Arc of a circle; ``sweep > 0`` runs counterclockwise (convex)."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    sweep: float
    kind = "circle"

    def __post_init__(self):
        if self.radius <= 0 or self.sweep == 0:
            raise GeometryError("circular arc needs radius > 0 and nonzero sweep")
        self.c = np.asarray(self.center, dtype=float)
        self.length = float(self.radius * abs(self.sweep))
        self._sign = 1.0 if self.sweep > 0 else -1.0

    def _angle(self, u):
        return self.start_angle + self._sign * np.asarray(u, dtype=float) / self.radius

    def point(self, u):
        th = self._angle(u)
        return self.c + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def tangent(self, u):
        th = self._angle(u)
        return self._sign * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def curvature(self, u):
        return np.full_like(np.asarray(u, dtype=float), self._sign / self.radius)

    def closest(self, p):
        d = np.asarray(p, dtype=float) - self.c
        phi = math.atan2(d[1], d[0])
        rel = self._sign * (phi - self.start_angle)
        rel = rel % (2 * math.pi)
        span = abs(self.sweep)
        if rel <= span:
            u = rel * self.radius
        else:
            # outside the angular range: nearest endpoint
            u = 0.0 if (2 * math.pi - rel) < (rel - span) else self.length
        return u, float(np.hypot(*(np.asarray(p) - self.point(u))))

    def area_term(self):
        t0 = self.start_angle
        t1 = t0 + self.sweep
        r, (cx, cy) = self.radius, self.c
        return 0.5 * (r * (cx * (math.sin(t1) - math.sin(t0)) - cy * (math.cos(t1) - math.cos(t0)))
                      + r * r * self.sweep)

    def total_curvature(self):
        return float(self.sweep)

    def to_dict(self):
        return {
            "type": "circle",
            "center": list(map(float, self.c)),
            "radius": float(self.radius),
            "start_angle": float(self.start_angle),
            "sweep": float(self.sweep),
        }


class SplineArc(Arc):
    """Cubic spline through sample points, reparametrized by arclength.

    Curvature comes from the spline derivatives.  With ``periodic=True`` the
    samples describe a closed smooth curve (first point not repeated).
    """

    kind = "spline"

    def __init__(self, points: Sequence[Sequence[float]], periodic: bool = False):
        pts = np.asarray(points, dtype=float)
        if periodic:
            pts = np.vstack([pts, pts[:1]])
        if len(pts) < 4:
            raise GeometryError("spline arc needs at least 4 points")
        self.points = pts
        self.periodic = periodic
        chord = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        bc = "periodic" if periodic else "not-a-knot"
        self._sp = CubicSpline(chord, pts, bc_type=bc)
        self._d1 = self._sp.derivative(1)
        self._d2 = self._sp.derivative(2)
        knots = chord
        # arclength table on a fine grid of the chord parameter
        fine = np.unique(np.concatenate([np.linspace(knots[0], knots[-1], 40 * len(knots)), knots]))
        cum = np.concatenate(
            [[0.0], np.cumsum([quad(lambda x: np.hypot(*self._d1(x)), a, b)[0] for a, b in zip(fine[:-1], fine[1:])])]
        )
        self._u_of_c = CubicSpline(fine, cum)
        self._c_of_u = CubicSpline(cum, fine)
        self.length = float(cum[-1])
        self._cmax = float(knots[-1])

    def _c(self, u):
        u = np.asarray(u, dtype=float)
        c = self._c_of_u(u)
        # one Newton correction keeps the arclength map exact to quadrature tolerance
        speed = np.hypot(*np.moveaxis(self._d1(c), -1, 0))
        return np.clip(c - (self._u_of_c(c) - u) / speed, 0.0, self._cmax)

    def point(self, u):
        return self._sp(self._c(u))

    def tangent(self, u):
        d = self._d1(self._c(u))
        return d / np.hypot(d[..., 0], d[..., 1])[..., None]

    def curvature(self, u):
        c = self._c(u)
        d1, d2 = self._d1(c), self._d2(c)
        num = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        return num / np.hypot(d1[..., 0], d1[..., 1]) ** 3

    def area_term(self):
        def integrand(c):
            p, d = self._sp(c), self._d1(c)
            return float(p[0] * d[1] - p[1] * d[0])

        x = self._sp.x
        return 0.5 * float(sum(quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(x[:-1], x[1:])))

    def total_curvature(self):
        # turning of the tangent, integrated in the native spline parameter per knot interval
        def dtheta(c):
            d1, d2 = self._d1(c), self._d2(c)
            return float((d1[0] * d2[1] - d1[1] * d2[0]) / (d1[0] ** 2 + d1[1] ** 2))

        x = self._sp.x
        return float(sum(quad(dtheta, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(x[:-1], x[1:])))

    def closest(self, p):
        p = np.asarray(p, dtype=float)
        us = np.linspace(0, self.length, 8 * len(self.points))
        dd = np.hypot(*(self.point(us) - p).T)
        i = int(np.argmin(dd))
        lo, hi = us[max(i - 1, 0)], us[min(i + 1, len(us) - 1)]
        res = minimize_scalar(lambda u: float(np.hypot(*(self.point(u) - p))), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        return float(res.x), float(res.fun)

    def to_dict(self):
        pts = self.points[:-1] if self.periodic else self.points
        return {"type": "spline", "points": pts.tolist(), "periodic": self.periodic}


def _turning_angle(t_in, t_out) -> float:
    cross = t_in[0] * t_out[1] - t_in[1] * t_out[0]
    return math.atan2(cross, float(np.dot(t_in, t_out)))


@dataclass
class TubularPoint:
    s: float
    t: float
    arc: int


@dataclass
class CurvilinearPolygon:
    """Closed counterclockwise boundary made of smooth arcs.

    Corners ``(s_j, beta_j)`` are derived from tangent jumps between
    consecutive arcs; ``s_j`` is the physical arclength of the corner.
    """

    arcs: list[Arc]
    name: str = "polygon"
    corners: list[tuple[float, float]] = field(init=False)

    def __post_init__(self):
        if not self.arcs:
            raise GeometryError("polygon needs at least one arc")
        self.offsets = np.concatenate([[0.0], np.cumsum([a.length for a in self.arcs])])
        scale = max(1.0, float(self.offsets[-1]))
        corners = []
        n = len(self.arcs)
        for j in range(n):
            a, nxt = self.arcs[j], self.arcs[(j + 1) % n]
            gap = np.hypot(*(a.point(a.length) - nxt.point(0.0)))
            if gap > CLOSURE_TOL * scale:
                raise GeometryError(f"arcs {j} and {(j + 1) % n} do not close up (gap {gap:.3e})")
            turn = _turning_angle(a.tangent(a.length), nxt.tangent(0.0))
            if abs(turn) > 1e-9:
                beta = math.pi - turn
                if not 0.0 < beta < 2 * math.pi or abs(abs(turn) - math.pi) < 1e-12:
                    raise GeometryError(f"cusp at junction {j}: interior angle {beta}")
                corners.append((float(self.offsets[(j + 1) % n]), float(beta)))
        corners.sort()
        self.corners = corners

    # -- bookkeeping -------------------------------------------------------
    @property
    def perimeter(self) -> float:
        return float(self.offsets[-1])

    @property
    def n_corners(self) -> int:
        return len(self.corners)

    @property
    def area(self) -> float:
        """Enclosed area from the boundary integral of ``x dy - y dx``."""
        return float(sum(a.area_term() for a in self.arcs))

    def locate(self, s):
        """Map physical arclength ``s`` (mod perimeter) to ``(arc index, local u)``."""
        s = float(s) % self.perimeter
        j = int(np.searchsorted(self.offsets, s, side="right") - 1)
        j = min(j, len(self.arcs) - 1)
        return j, s - self.offsets[j]

    def point(self, s):
        j, u = self.locate(s)
        return self.arcs[j].point(u)

    def normal(self, s):
        j, u = self.locate(s)
        return self.arcs[j].normal(u)

    def curvature(self, s):
        j, u = self.locate(s)
        return float(self.arcs[j].curvature(u))

    def sample(self, n: int):
        """Points, inward normals and curvatures at ``n`` equispaced arclengths."""
        s = np.linspace(0.0, self.perimeter, n, endpoint=False)
        pts = np.array([self.point(x) for x in s])
        nrm = np.array([self.normal(x) for x in s])
        k = np.array([self.curvature(x) for x in s])
        return s, pts, nrm, k

    def to_dict(self) -> dict:
        return {"name": self.name, "arcs": [a.to_dict() for a in self.arcs],
                "corners": [[s, b] for s, b in self.corners]}


# -- operations --------------------------------------------------------------

def curvature_integral(poly: CurvilinearPolygon) -> float:
    """Integral of the curvature over the smooth part of the boundary."""
    total = 0.0
    for j, a in enumerate(poly.arcs):
        probe = a.curvature(np.linspace(0.0, a.length, 33))
        if not np.all(np.isfinite(probe)):
            bad = np.flatnonzero(~np.isfinite(probe))
            raise GeometryError(f"non-finite curvature on arc {j} ({a.kind}) at samples {bad.tolist()}")
        total += a.total_curvature()
    return total


def gauss_bonnet_defect(poly: CurvilinearPolygon) -> float:
    return curvature_integral(poly) + sum(math.pi - b for _, b in poly.corners) - 2 * math.pi


def tubular_map(poly: CurvilinearPolygon, s, t, eps: float):
    """Point at rescaled boundary coordinate ``s`` and scaled depth ``t``."""
    sp = eps * float(s)
    return poly.point(sp) + eps * float(t) * poly.normal(sp)


def inverse_tubular(poly: CurvilinearPolygon, point, eps: float, rtol: float = 1e-9) -> TubularPoint:
    """Nearest-boundary-point coordinates of ``point``.

    Raises :class:`AmbiguousProjection` when two boundary points separated
    along the boundary are (numerically) equidistant.
    """
    p = np.asarray(point, dtype=float)
    cands = []
    for j, a in enumerate(poly.arcs):
        u, d = a.closest(p)
        cands.append((d, float(poly.offsets[j] + u), j, u))
    cands.sort(key=lambda c: (c[0], c[1]))
    dmin = cands[0][0]
    L = poly.perimeter
    close = [c for c in cands if c[0] <= dmin + rtol * max(L, 1.0)]
    distinct = [close[0]]
    for c in close[1:]:
        sep = min(abs(c[1] - distinct[0][1]), L - abs(c[1] - distinct[0][1]))
        if sep > 1e-9 * L:
            distinct.append(c)
    if len(distinct) > 1 and dmin > 1e-12 * L:
        raise AmbiguousProjection(p, [(c[1] / eps, poly.arcs[c[2]].point(c[3])) for c in distinct])
    d, s, j, u = close[0]
    a = poly.arcs[j]
    if d > 0 and np.dot(p - a.point(u), a.normal(u)) < -1e-12 * L:
        raise GeometryError("point lies outside the domain")
    if d > 0.0 and (u == 0.0 or u == a.length):
        # nearest point is an arc endpoint: the offset must still be along the normal
        off = p - a.point(u)
        if d > 0 and abs(np.dot(off / d, a.normal(u))) < 1 - 1e-9:
            other = cands[1]
            raise AmbiguousProjection(p, [(s / eps, a.point(u)), (other[1] / eps, poly.arcs[other[2]].point(other[3]))])
    return TubularPoint(s=(s % L) / eps, t=d / eps, arc=j)


def rescale_length(x: float, eps: float) -> float:
    """Physical length to rescaled (units of eps)."""
    return x / eps


def physical_length(x: float, eps: float) -> float:
    return x * eps


# -- built-in shapes -----------------------------------------------------------

def disc(radius: float = 1.0, center=(0.0, 0.0)) -> CurvilinearPolygon:
    return CurvilinearPolygon([CircularArc(center, radius, 0.0, 2 * math.pi)], name="disc")


def polygon(vertices, name: str = "polygon") -> CurvilinearPolygon:
    v = [tuple(map(float, p)) for p in vertices]
    arcs = [Segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]
    return CurvilinearPolygon(arcs, name=name)


def rectangle(width: float = 1.0, height: float = 1.0, origin=(0.0, 0.0)) -> CurvilinearPolygon:
    x0, y0 = origin
    return polygon([(x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height)], name="rectangle")


def square(side: float = 1.0, center=(0.0, 0.0)) -> CurvilinearPolygon:
    h = side / 2
    p = polygon([(center[0] - h, center[1] - h), (center[0] + h, center[1] - h),
                 (center[0] + h, center[1] + h), (center[0] - h, center[1] + h)], name="square")
    return p


def stadium(radius: float = 0.5, straight: float = 1.0) -> CurvilinearPolygon:
    """Two half discs joined by straight segments, centred at the origin."""
    a = straight / 2
    arcs = [
        Segment((-a, -radius), (a, -radius)),
        CircularArc((a, 0.0), radius, -math.pi / 2, math.pi),
        Segment((a, radius), (-a, radius)),
        CircularArc((-a, 0.0), radius, math.pi / 2, math.pi),
    ]
    return CurvilinearPolygon(arcs, name="stadium")


def reflex_pentagon() -> CurvilinearPolygon:
    """Pentagon with a single reflex corner of angle 3*pi/2 at (1, 1)."""
    return polygon([(0, 0), (2, 0), (2, 2), (1, 1), (0, 2)], name="reflex_pentagon")


def circular_sector(beta: float, radius: float = 1.0) -> CurvilinearPolygon:
    """Sector of opening ``beta`` with apex at the origin (a 'sector cap')."""
    end = (radius * math.cos(beta), radius * math.sin(beta))
    arcs = [Segment((0.0, 0.0), (radius, 0.0)), CircularArc((0.0, 0.0), radius, 0.0, beta),
            Segment(end, (0.0, 0.0))]
    return CurvilinearPolygon(arcs, name="circular_sector")


BUILTIN_SHAPES = {
    "disc": disc,
    "square": square,
    "rectangle": rectangle,
    "stadium": stadium,
    "reflex_pentagon": reflex_pentagon,
    "circular_sector": circular_sector,
}


# -- polygon description files ------------------------------------------------

def _arc_from_dict(d: dict) -> Arc:
    kind = d.get("type")
    if kind == "segment":
        return Segment(tuple(d["start"]), tuple(d["end"]))
    if kind == "circle":
        return CircularArc(tuple(d["center"]), float(d["radius"]), float(d["start_angle"]), float(d["sweep"]))
    if kind == "spline":
        return SplineArc(d["points"], periodic=bool(d.get("periodic", False)))
    raise GeometryError(f"unknown arc type {kind!r}")


def polygon_from_dict(d: dict) -> CurvilinearPolygon:
    if "shape" in d:
        name = d["shape"]
        if name not in BUILTIN_SHAPES:
            raise GeometryError(f"unknown built-in shape {name!r}; choose from {sorted(BUILTIN_SHAPES)}")
        kwargs = {k: v for k, v in d.items() if k != "shape"}
        if "vertices" in kwargs:
            return polygon(kwargs["vertices"])
        return BUILTIN_SHAPES[name](**kwargs)
    if "vertices" in d:
        poly = polygon(d["vertices"], name=d.get("name", "polygon"))
    else:
        poly = CurvilinearPolygon([_arc_from_dict(a) for a in d["arcs"]], name=d.get("name", "polygon"))
    validate_polygon(poly, expected_corners=d.get("corners"))
    return poly


def validate_polygon(poly: CurvilinearPolygon, expected_corners=None, tol: float = 1e-8) -> None:
    defect = gauss_bonnet_defect(poly)
    if abs(defect) > tol:
        raise GeometryError(
            f"Gauss-Bonnet defect {defect:.3e}: boundary is not a simple counterclockwise curve")
    if expected_corners is not None:
        got = sorted(poly.corners)
        exp = sorted((float(s), float(b)) for s, b in expected_corners)
        if len(got) != len(exp) or any(abs(a[1] - b[1]) > 1e-8 for a, b in zip(got, exp)):
            raise GeometryError(f"declared corners {exp} do not match the arcs ({got})")


def load_polygon(path) -> CurvilinearPolygon:
    return polygon_from_dict(json.loads(Path(path).read_text()))


def save_polygon(poly: CurvilinearPolygon, path) -> None:
    Path(path).write_text(json.dumps(poly.to_dict(), indent=2))
