"""Triangle meshes carrying gauge links for the reference potential F = r_perp / 2.

The kinetic form is the cotangent discretization

    sum_edges w_ij |U_ij psi_j - psi_i|^2,   U_ij = exp(i theta_ij / eps^2),

where ``theta_ij`` is the exact line integral of F along the straight edge,
``(x_i y_j - y_i x_j) / 2``.  Because F is linear the links of every
triangle add up to its area, so the discrete field is exactly 1.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class MeshError(ValueError):
    pass


class Mesh2D:
    """Nodes, triangles, boundary tags and link phases.

    ``tags`` maps names ("outer", "dirichlet", "artificial", ...) to boolean
    node masks.  ``dist`` optionally holds the distance of each node to the
    physical boundary (used by diagnostics).
    """

    def __init__(self, points, triangles, tags=None, dist=None, meta=None):
        self.points = np.ascontiguousarray(points, dtype=float)
        tri = np.array(triangles, dtype=np.int64)
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise MeshError("triangles must be an (M, 3) array")
        if tri.min() < 0 or tri.max() >= len(self.points):
            raise MeshError("triangle index out of range")
        p = self.points
        a = _signed_area(p[tri[:, 0]], p[tri[:, 1]], p[tri[:, 2]])
        flip = a < 0
        tri[flip] = tri[flip][:, [0, 2, 1]]
        self.triangles = tri
        self.areas = np.abs(a)
        if np.any(self.areas <= 1e-14 * max(1.0, np.ptp(p) ** 2)):
            raise MeshError("degenerate triangle")
        self.tags = {k: np.asarray(v, dtype=bool) for k, v in (tags or {}).items()}
        self.dist = None if dist is None else np.asarray(dist, dtype=float)
        self.meta = dict(meta or {})
        self._build_edges()
        self.gauge_shift = np.zeros(len(self.edges))
        self._cache = {}

    # -- construction ---------------------------------------------------------------
    def _build_edges(self):
        tri = self.triangles
        p = self.points
        # local edge k is opposite vertex k
        pairs = np.stack([tri[:, [1, 2]], tri[:, [2, 0]], tri[:, [0, 1]]], axis=1).reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        key = lo * len(p) + hi
        uniq, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
        self.edges = np.stack([uniq // len(p), uniq % len(p)], axis=1)
        self.tri_edges = inv.reshape(-1, 3)
        self.tri_edge_sign = np.where(pairs[:, 0] < pairs[:, 1], 1.0, -1.0).reshape(-1, 3)
        self.edge_boundary = counts == 1
        # cotangent of the angle at vertex k
        cots = np.empty((len(tri), 3))
        for k in range(3):
            o = p[tri[:, k]]
            u = p[tri[:, (k + 1) % 3]] - o
            v = p[tri[:, (k + 2) % 3]] - o
            cots[:, k] = (u * v).sum(axis=1) / np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        self.weights = 0.5 * np.bincount(inv, weights=cots.reshape(-1), minlength=len(uniq))
        self.masses = np.bincount(tri.reshape(-1), weights=self._mixed_areas(cots).reshape(-1), minlength=len(p))
        i, j = self.edges[:, 0], self.edges[:, 1]
        self.phase0 = 0.5 * (p[i, 0] * p[j, 1] - p[i, 1] * p[j, 0])
        if np.any(self.masses <= 0):
            raise MeshError("mesh has isolated nodes")

    def _mixed_areas(self, cots):
        """Per-corner dual areas: circumcentric (Voronoi) cells, with the usual
        area/2, area/4 split in obtuse triangles so every share stays positive.
        On rectangular grids this gives every node its exact h_x h_y cell,
        independent of the diagonal pattern."""
        p, tri = self.points, self.triangles
        sq = np.empty((len(tri), 3))  # squared length of the edge opposite vertex k
        for k in range(3):
            d = p[tri[:, (k + 1) % 3]] - p[tri[:, (k + 2) % 3]]
            sq[:, k] = (d * d).sum(1)
        # vertex k touches edges opposite k+1 and k+2
        share = np.empty_like(sq)
        for k in range(3):
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            share[:, k] = (sq[:, k1] * cots[:, k1] + sq[:, k2] * cots[:, k2]) / 8
        obtuse = cots < -1e-12
        bad = obtuse.any(axis=1)
        if np.any(bad):
            a = self.areas[bad][:, None]
            share[bad] = np.where(obtuse[bad], a / 2, a / 4)
        return share

    # -- basic properties --------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    def tag(self, name):
        return self.tags.get(name, np.zeros(self.n_nodes, dtype=bool))

    @property
    def boundary_nodes(self):
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.edges[self.edge_boundary].ravel()] = True
        return mask

    def links(self, eps: float) -> np.ndarray:
        """Edge phases theta_ij / eps^2 (plus any gauge shift), oriented i < j."""
        return self.phase0 / eps ** 2 + self.gauge_shift

    def gauge_transformed(self, phi):
        """Copy whose links are shifted by phi_i - phi_j.

        ``gl_energy(psi * exp(i phi), new_mesh)`` equals ``gl_energy(psi, self)``.
        """
        m = object.__new__(Mesh2D)
        m.__dict__.update(self.__dict__)
        phi = np.asarray(phi, dtype=float)
        i, j = self.edges[:, 0], self.edges[:, 1]
        m.gauge_shift = self.gauge_shift - (phi[j] - phi[i])
        m._cache = {}
        return m

    def kinetic_matrix(self, eps: float):
        """Hermitian K with psi^H K psi = sum_e w_e |U_e psi_j - psi_i|^2."""
        key = ("K", float(eps))
        if key not in self._cache:
            n = self.n_nodes
            i, j = self.edges[:, 0], self.edges[:, 1]
            w = self.weights
            U = np.exp(1j * self.links(eps))
            diag = np.bincount(i, weights=w, minlength=n) + np.bincount(j, weights=w, minlength=n)
            rows = np.concatenate([i, j, np.arange(n)])
            cols = np.concatenate([j, i, np.arange(n)])
            vals = np.concatenate([-w * U, -w * np.conj(U), diag.astype(complex)])
            self._cache[key] = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return self._cache[key]

    def kinetic_energy(self, psi, eps: float) -> float:
        i, j = self.edges[:, 0], self.edges[:, 1]
        U = np.exp(1j * self.links(eps))
        return float(np.sum(self.weights * np.abs(U * psi[j] - psi[i]) ** 2))

    # -- checks --------------------------------------------------------------------------
    def curl_defect(self, eps: float = 1.0) -> float:
        """max over triangles of |circulation of links - area / eps^2| (no gauge shift)."""
        circ = (self.phase0[self.tri_edges] * self.tri_edge_sign).sum(axis=1) / eps ** 2
        return float(np.max(np.abs(circ - self.areas / eps ** 2)))

    def quality(self) -> dict:
        p, tri = self.points, self.triangles
        angles = []
        for k in range(3):
            u = p[tri[:, (k + 1) % 3]] - p[tri[:, k]]
            v = p[tri[:, (k + 2) % 3]] - p[tri[:, k]]
            c = (u * v).sum(1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(c, -1, 1)))
        angles = np.array(angles)
        return {"min_angle": float(angles.min()), "max_angle": float(angles.max()),
                "n_nodes": self.n_nodes, "n_triangles": len(tri), "inverted": 0}

    def header(self) -> dict:
        return {"n_nodes": self.n_nodes, "n_triangles": int(len(self.triangles)),
                "area": self.area, "tags": {k: int(v.sum()) for k, v in self.tags.items()},
                "meta": {k: v for k, v in self.meta.items() if _jsonable(v)}}


def _jsonable(v):
    return isinstance(v, (int, float, str, bool, type(None), list, dict))


def _signed_area(a, b, c):
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


# -- structured builders -------------------------------------------------------------------

def grid_triangles(nu: int, nv: int, periodic_u: bool = False, flip=None):
    """Triangles of an nu x nv tensor grid with node index u * nv + v.

    Each quad is split along one diagonal; ``flip`` (bool array over quads,
    shape (nu_q, nv - 1)) selects the other diagonal.
    """
    nu_q = nu if periodic_u else nu - 1
    uu, vv = np.meshgrid(np.arange(nu_q), np.arange(nv - 1), indexing="ij")
    a = uu * nv + vv
    b = ((uu + 1) % nu) * nv + vv
    c = b + 1
    d = a + 1
    if flip is None:
        flip = np.zeros(uu.shape, dtype=bool)
    t1 = np.where(flip[..., None], np.stack([a, b, d], -1), np.stack([a, b, c], -1))
    t2 = np.where(flip[..., None], np.stack([b, c, d], -1), np.stack([a, c, d], -1))
    return np.concatenate([t1.reshape(-1, 3), t2.reshape(-1, 3)])


def layer_mesh(poly, eps: float, depth: float = 8.0, h: float = 0.1, n_s: int | None = None):
    """Boundary-layer mesh of a smooth closed domain in tubular coordinates.

    Nodes sit at (s, t) on a tensor grid, s along the boundary (periodic) and
    t in [0, depth] in units of eps; spacing ``h`` is also in units of eps.
    The inner curve t = depth is tagged "artificial" (held at zero).
    """
    if poly.n_corners:
        raise MeshError("layer meshes need a boundary without corners")
    perimeter = poly.perimeter
    if n_s is None:
        n_s = int(np.ceil(perimeter / (eps * h)))
    n_t = int(np.ceil(depth / h)) + 1
    s = np.arange(n_s) * perimeter / n_s
    t = np.linspace(0.0, depth, n_t)
    gamma = np.array([poly.point(si) for si in s])
    nu = np.array([poly.normal(si) for si in s])
    kmax = max(abs(poly.curvature(si)) for si in s)
    if kmax * depth * eps >= 0.9:
        raise MeshError("layer depth reaches the focal distance of the boundary")
    pts = gamma[:, None, :] + eps * t[None, :, None] * nu[:, None, :]
    pts = pts.reshape(-1, 2)
    tri = grid_triangles(n_s, n_t, periodic_u=True)
    tt = np.tile(t, n_s)
    tags = {"outer": tt == 0, "artificial": tt == depth}
    return Mesh2D(pts, tri, tags=tags, dist=eps * tt,
                  meta={"kind": "layer", "n_s": n_s, "n_t": n_t, "depth": depth, "h": h, "eps": eps,
                        "s": s, "t": t})


def rectangle_mesh(x0, x1, y0, y1, nx: int, ny: int):
    """Right-triangle mesh of an axis-parallel rectangle (alternating diagonals)."""
    x = np.linspace(x0, x1, nx)
    y = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    uu, vv = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    tri = grid_triangles(nx, ny, flip=(uu + vv) % 2 == 1)
    dist = np.minimum.reduce([pts[:, 0] - x0, x1 - pts[:, 0], pts[:, 1] - y0, y1 - pts[:, 1]])
    outer = np.isclose(dist, 0.0, atol=1e-12 * max(1.0, x1 - x0))
    return Mesh2D(pts, tri, tags={"outer": outer}, dist=dist,
                  meta={"kind": "rectangle", "nx": nx, "ny": ny, "box": [x0, x1, y0, y1]})


def polar_sector_mesh(beta: float, R: float, radii, n_theta: int):
    """Sector {0 < theta < beta, rho < R} on a polar tensor grid with a vertex fan.

    ``radii`` is an increasing array starting above 0 and ending at R.  The
    arc rho = R is tagged "dirichlet".
    """
    radii = np.asarray(radii, dtype=float)
    if radii[0] <= 0 or not np.all(np.diff(radii) > 0) or not np.isclose(radii[-1], R):
        raise MeshError("radii must increase from a positive value to R")
    th = np.linspace(0.0, beta, n_theta)
    P, T = np.meshgrid(radii, th, indexing="ij")
    pts = np.concatenate([[[0.0, 0.0]], np.stack([P * np.cos(T), P * np.sin(T)], -1).reshape(-1, 2)])
    nr = len(radii)
    body = grid_triangles(nr, n_theta) + 1
    fan = np.stack([np.zeros(n_theta - 1, dtype=np.int64), 1 + np.arange(n_theta - 1),
                    2 + np.arange(n_theta - 1)], axis=1)
    tri = np.concatenate([fan, body])
    rho = np.concatenate([[0.0], P.ravel()])
    return Mesh2D(pts, tri, tags={"dirichlet": np.isclose(rho, R)},
                  meta={"kind": "sector", "beta": beta, "R": R, "n_r": nr, "n_theta": n_theta})


def graded_radii(R: float, h_min: float, h_max: float, focus=(1.0,), width: float = 1.5):
    """Radii in (0, R] with spacing ~h_min near 0 and near each focus radius."""
    r = [h_min]
    while r[-1] < R:
        x = r[-1]
        near = min([x] + [abs(x - f) for f in focus])
        step = h_min + (h_max - h_min) * min(1.0, near / width)
        r.append(x + step)
    r = np.array(r)
    r = r * (R / r[-1])
    return r


def boundary_distance(points, poly, n_samples: int = 20000, return_s: bool = False):
    """Distance from each point to the polygon boundary (dense sampling + refinement).

    With ``return_s`` the arclength of the nearest boundary point is returned too.
    """
    from scipy.spatial import cKDTree

    points = np.asarray(points, dtype=float)
    s = np.linspace(0.0, poly.perimeter, n_samples, endpoint=False)
    ds = poly.perimeter / n_samples
    pts = np.array([poly.point(si) for si in s])
    seg = np.roll(pts, -1, axis=0) - pts
    tree = cKDTree(pts)
    _, idx = tree.query(points, k=2)
    best = np.full(len(points), np.inf)
    best_s = np.zeros(len(points))
    for col in range(2):
        for shift in (0, -1):
            k = (idx[:, col] + shift) % n_samples
            a, d = pts[k], seg[k]
            u = np.clip(((points - a) * d).sum(1) / (d * d).sum(1), 0.0, 1.0)
            dist = np.linalg.norm(points - a - u[:, None] * d, axis=1)
            better = dist < best
            best = np.where(better, dist, best)
            best_s = np.where(better, (s[k] + u * ds) % poly.perimeter, best_s)
    return (best, best_s) if return_s else best


def polygon_mesh(poly, h: float, n_samples: int = 20000):
    """Unstructured mesh of a curvilinear polygon with spacing ``h``.

    Boundary samples (corners included) plus a triangular lattice inside,
    triangulated by Delaunay; triangles with centroids outside are dropped.
    ``meta["s_near"]`` holds the arclength of each node's nearest boundary point.
    """
    from matplotlib.path import Path
    from scipy.spatial import Delaunay

    bpts, bs = [], []
    for j, arc in enumerate(poly.arcs):
        n = max(2, int(np.ceil(arc.length / h)))
        u = np.arange(n) * arc.length / n
        bpts += [arc.point(x) for x in u]
        bs += list(poly.offsets[j] + u)
    bpts = np.array(bpts)
    lo, hi = bpts.min(0), bpts.max(0)
    dy = h * np.sqrt(3) / 2
    ys = np.arange(lo[1], hi[1] + dy, dy)
    xs = np.arange(lo[0] - h, hi[0] + h, h)
    X, Y = np.meshgrid(xs, ys)
    X = X + 0.5 * h * (np.arange(len(ys)) % 2)[:, None]
    lat = np.stack([X.ravel(), Y.ravel()], 1)
    path = Path(np.vstack([bpts, bpts[:1]]), closed=True)
    lat = lat[path.contains_points(lat)]
    d_lat, s_lat = boundary_distance(lat, poly, n_samples, return_s=True)
    keep = d_lat > 0.55 * h
    pts = np.vstack([bpts, lat[keep]])
    tri = Delaunay(pts).simplices
    cen = pts[tri].mean(1)
    tri = tri[path.contains_points(cen)]
    used = np.zeros(len(pts), dtype=bool)
    used[tri.ravel()] = True
    if not used[: len(bpts)].all():
        raise MeshError("boundary sample dropped from the triangulation; refine h")
    renum = np.cumsum(used) - 1
    pts, tri = pts[used], renum[tri]
    nb = len(bpts)
    dist = np.concatenate([np.zeros(nb), d_lat[keep]])[used]
    s_near = np.concatenate([np.array(bs), s_lat[keep]])[used]
    outer = np.arange(len(used))[used] < nb
    return Mesh2D(pts, tri, tags={"outer": outer}, dist=dist,
                  meta={"kind": "polygon", "h": h, "s_near": s_near, "n_boundary": nb})
