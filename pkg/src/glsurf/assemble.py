"""Energy prediction for a curvilinear polygon from 1D and corner data.

    E_GL ~ |dOmega| E0 / eps - Ecorr * int_smooth k ds + sum_j E_corner(beta_j)

The curvature integral is taken over the smooth part only, so by
Gauss-Bonnet it equals 2 pi - sum_j (pi - beta_j); for smooth domains the
prediction reduces to |dOmega| E0 / eps - 2 pi Ecorr.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geometry, oned

ANGLE_DIGITS = 9


class MissingCornerEnergy(LookupError):
    """Raised when some corner angle has no energy; ``betas`` lists the angles to compute."""

    def __init__(self, betas, hint: str = ""):
        self.betas = list(betas)
        lines = [f"no corner energy for beta = {b:.{ANGLE_DIGITS}f}" for b in self.betas]
        super().__init__("; ".join(lines) + (f"\n{hint}" if hint else ""))


def distinct_angles(poly) -> list[float]:
    seen = []
    for _, beta in poly.corners:
        if not any(math.isclose(beta, s, abs_tol=10.0 ** -ANGLE_DIGITS) for s in seen):
            seen.append(beta)
    return sorted(seen)


@dataclass
class Prediction:
    eps: float
    b: float
    perimeter: float
    e0: float
    ecorr: float
    curvature_integral: float
    gauss_bonnet_defect: float
    surface_term: float
    curvature_term: float
    corner_terms: list = field(default_factory=list)  # dicts: beta, count, energy, error
    total: float = 0.0
    corner_error: float = 0.0

    def to_dict(self):
        return dict(self.__dict__)


def predict_energy(poly, eps: float, b: float, corner_energy=None, result=None) -> Prediction:
    """Three-term prediction.

    ``corner_energy`` maps an angle to ``(value, error)``; it may be a dict
    keyed by angle or a callable.  Missing angles raise MissingCornerEnergy.
    ``result`` is an optional precomputed half-line OneDResult at this b.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    res = result or oned.solve_1d(b)
    e0 = res.energy
    ecorr = 0.0 if res.normal else oned.ecorr_from(res)
    kint = geometry.curvature_integral(poly)
    surface = poly.perimeter * e0 / eps
    curv = -ecorr * kint + 0.0  # no negative zero for straight sides
    terms, missing = [], []
    for beta in distinct_angles(poly):
        count = sum(1 for _, bj in poly.corners if math.isclose(bj, beta, abs_tol=10.0 ** -ANGLE_DIGITS))
        val = _lookup(corner_energy, beta)
        if val is None:
            missing.append(beta)
            continue
        v, err = val
        terms.append({"beta": beta, "count": count, "energy": v, "error": err})
    if missing:
        raise MissingCornerEnergy(missing)
    corners = sum(t["count"] * t["energy"] for t in terms)
    cerr = sum(t["count"] * (t["error"] or 0.0) for t in terms)
    return Prediction(eps=eps, b=b, perimeter=poly.perimeter, e0=e0, ecorr=ecorr, curvature_integral=kint,
                      gauss_bonnet_defect=geometry.gauss_bonnet_defect(poly), surface_term=surface,
                      curvature_term=curv, corner_terms=terms, total=surface + curv + corners, corner_error=cerr)


def _lookup(source, beta):
    if source is None:
        return None
    if callable(source):
        return source(beta)
    for k, v in source.items():
        if math.isclose(float(k), beta, abs_tol=10.0 ** -ANGLE_DIGITS):
            return v if isinstance(v, (tuple, list)) else (v, 0.0)
    return None
