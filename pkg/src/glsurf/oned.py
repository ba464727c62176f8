"""One-dimensional boundary-layer problems.

The functional (per unit boundary length, rescaled units) is

    F[f] = int_0^T (1 - eps k t) { f'^2 + V(t) f^2 - (2 f^2 - f^4) / (2 b) } dt

with ``V = (t + alpha)^2`` on a flat boundary and
``V = (t + alpha - eps k t^2 / 2)^2 / (1 - eps k t)^2`` on a curved one.
It is discretized with central differences on a uniform grid and the
trapezoidal rule; the gradient used by the minimizer is the exact derivative
of the discrete energy.
"""

from __future__ import annotations

import math

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, solveh_banded
from scipy.optimize import minimize_scalar

DEFAULT_T = 15.0
DEFAULT_H = 0.005
ALPHA_BRACKET = (-10.0, 2.0)
ROUNDOFF = 1e-13
WARM_FLOOR = 1e-3


class FocalSingularity(ValueError):
    """The curved-mode Jacobian 1 - eps k t vanishes on the interval."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class OneDMode:
    """Integration interval and boundary model.

    ``kind`` is ``"half-line"`` (truncated at ``length``), ``"finite"`` (the
    interval ``[0, length]`` itself) or ``"curved"``.  ``lattice`` > 0 replaces
    ``(t + alpha)^2`` by ``(2 sin((t + alpha) a / 2) / a)^2``, the tangential
    factor produced by a gauge-covariant 2D grid of spacing ``a``.
    """

    kind: str = "half-line"
    length: float = DEFAULT_T
    h: float = DEFAULT_H
    k: float = 0.0
    eps: float = 0.0
    lattice: float = 0.0

    def __post_init__(self):
        if self.kind not in ("half-line", "finite", "curved"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.length <= 0 or self.h <= 0:
            raise ValueError("length and h must be positive")
        if self.kind == "curved" and self.lattice:
            raise ValueError("lattice potential is only defined for flat modes")

    @property
    def n(self) -> int:
        return max(2, int(round(self.length / self.h)) + 1)

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n)

    @property
    def curvature_scale(self) -> float:
        return self.eps * self.k if self.kind == "curved" else 0.0

    def describe(self) -> str:
        if self.kind == "curved":
            return f"curved(k={self.k:g}, eps={self.eps:g}, T={self.length:g})"
        if self.kind == "finite":
            return f"finite(l={self.length:g})"
        return f"half-line(T={self.length:g})"


def half_line(T: float = DEFAULT_T, h: float = DEFAULT_H, lattice: float = 0.0) -> OneDMode:
    return OneDMode("half-line", T, h, lattice=lattice)


def finite(ell: float, h: float = DEFAULT_H, lattice: float = 0.0) -> OneDMode:
    return OneDMode("finite", ell, h, lattice=lattice)


def curved(k: float, eps: float, T: float = DEFAULT_T, h: float = DEFAULT_H) -> OneDMode:
    return OneDMode("curved", T, h, k=k, eps=eps)


@dataclass
class Profile1D:
    t: np.ndarray
    f: np.ndarray
    energy_history: list = field(default_factory=list, repr=False)

    @property
    def h(self) -> float:
        return float(self.t[1] - self.t[0])

    def __call__(self, t):
        """Linear interpolation, zero beyond the grid."""
        return np.interp(t, self.t, self.f, right=0.0)

    def norm2(self) -> float:
        w = _trap_weights(len(self.t), self.h)
        return float(np.sum(w * self.f ** 2))


@dataclass
class OneDResult:
    b: float
    mode: OneDMode
    energy: float
    alpha_opt: float
    profile: Profile1D
    boundary_value: float
    el_residual: float
    alpha_moment: float
    normal: bool = False
    flags: list = field(default_factory=list)

    def to_dict(self, with_profile: bool = False) -> dict:
        d = {
            "b": self.b,
            "mode": asdict(self.mode),
            "energy": self.energy,
            "alpha_opt": self.alpha_opt,
            "boundary_value": self.boundary_value,
            "stationarity_residuals": {"euler_lagrange_sup": self.el_residual, "alpha_moment": self.alpha_moment},
            "normal": self.normal,
            "flags": list(self.flags),
        }
        if with_profile:
            d["profile"] = {"t": self.profile.t.tolist(), "f": self.profile.f.tolist()}
        return d


# -- discrete functional -------------------------------------------------------

def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


class _Discretization:
    """Grid quantities for a fixed (alpha, mode)."""

    def __init__(self, alpha: float, mode: OneDMode):
        self.mode = mode
        self.alpha = alpha
        t = mode.grid()
        self.t = t
        self.h = h = float(t[1] - t[0])
        self.w = _trap_weights(len(t), h)
        ek = mode.curvature_scale
        self.g = 1.0 - ek * t
        self.gm = 1.0 - ek * (t[:-1] + h / 2)
        if np.any(self.g <= 0) or np.any(self.gm <= 0):
            raise FocalSingularity(
                f"1 - eps k t <= 0 on [0, {mode.length}] (eps k = {ek}); shorten the interval")
        self.V = potential(t, alpha, mode)
        self.W = self.w * self.g  # weighted nodal measure

    def energy(self, f, b):
        fp = np.diff(f) / self.h
        kin = np.sum(self.h * self.gm * fp ** 2)
        f2 = f * f
        return float(kin + np.sum(self.W * (self.V * f2 - (2 * f2 - f2 * f2) / (2 * b))))

    def gradient(self, f, b):
        fp = np.diff(f) / self.h
        g = self.W * (2 * self.V * f - (2 * f - 2 * f ** 3) / b)
        flux = 2 * self.gm * fp
        g[:-1] -= flux
        g[1:] += flux
        return g

    def residual(self, f, b):
        """Nodal Euler-Lagrange residual -(g f')'/g + V f - (1 - f^2) f / b."""
        return self.gradient(f, b) / (2 * self.W)

    def hessian_bands(self, f, b, shift=0.0):
        """Upper-banded storage of the (symmetric tridiagonal) Hessian."""
        n = len(f)
        c = 2 * self.gm / self.h
        diag = self.W * (2 * self.V - (2 - 6 * f ** 2) / b) + shift * self.W
        diag[:-1] += c
        diag[1:] += c
        ab = np.zeros((2, n))
        ab[0, 1:] = -c
        ab[1] = diag
        return ab


def potential(t, alpha: float, mode: OneDMode):
    t = np.asarray(t, dtype=float)
    if mode.kind == "curved":
        ek = mode.eps * mode.k
        return (t + alpha - 0.5 * ek * t ** 2) ** 2 / (1 - ek * t) ** 2
    if mode.lattice:
        a = mode.lattice
        return (2 * np.sin((t + alpha) * a / 2) / a) ** 2
    return (t + alpha) ** 2


def potential_alpha_derivative(t, alpha: float, mode: OneDMode):
    t = np.asarray(t, dtype=float)
    if mode.kind == "curved":
        ek = mode.eps * mode.k
        return 2 * (t + alpha - 0.5 * ek * t ** 2) / (1 - ek * t) ** 2
    if mode.lattice:
        a = mode.lattice
        return 2 * np.sin((t + alpha) * a) / a
    return 2 * (t + alpha)


def f1d_energy(profile, alpha: float, b: float, mode: OneDMode = half_line()) -> float:
    """Discrete value of the one-dimensional functional."""
    f = profile.f if isinstance(profile, Profile1D) else np.asarray(profile, dtype=float)
    disc = _Discretization(alpha, mode)
    if len(f) != len(disc.t):
        raise ValueError(f"profile has {len(f)} nodes, mode grid has {len(disc.t)}")
    return disc.energy(f, b)


def alpha_derivative(profile, alpha: float, b: float, mode: OneDMode = half_line()) -> float:
    """d/dalpha of the discrete energy at fixed profile (the weighted moment)."""
    f = profile.f if isinstance(profile, Profile1D) else np.asarray(profile, dtype=float)
    disc = _Discretization(alpha, mode)
    return float(np.sum(disc.W * potential_alpha_derivative(disc.t, alpha, mode) * f ** 2))


def _ground_state(disc):
    c = disc.gm / disc.h
    diag = disc.W * disc.V
    diag[:-1] += c
    diag[1:] += c
    s = 1.0 / np.sqrt(disc.W)
    vals, vecs = eigh_tridiagonal(diag * s * s, -c * s[:-1] * s[1:], select="i", select_range=(0, 0))
    return float(vals[0]), np.abs(vecs[:, 0] * s)


def lowest_eigenvalue(alpha: float, mode: OneDMode = half_line()) -> float:
    """Lowest eigenvalue of -d^2/dt^2 + V with natural boundary conditions.

    Uses the same stiffness and lumped mass as the energy, so the zero profile
    loses stability exactly when this drops below 1/b.
    """
    return _ground_state(_Discretization(alpha, mode))[0]


# -- minimization in f -----------------------------------------------------------

def minimize_profile(alpha: float, b: float, mode: OneDMode = half_line(), init=None, tol: float = 1e-9,
                     max_iter: int = 200, _restart: bool = True) -> Profile1D:
    """Minimize the discrete functional over f >= 0 at fixed alpha.

    Projected descent: Newton directions (regularized when the Hessian is
    indefinite) with backtracking so every accepted step lowers the energy
    (up to ``ROUNDOFF`` relative, the accuracy of the discrete sum),
    and projection onto f >= 0.  Stops when the sup norm of the discrete
    Euler-Lagrange residual is below ``tol``.
    """
    disc = _Discretization(alpha, mode)
    n = len(disc.t)
    if init is None:
        f = np.full(n, 0.5)
    else:
        f = np.array(init.f if isinstance(init, Profile1D) else init, dtype=float)
        if f.shape != (n,):
            raise ValueError("init does not match the mode grid")
        if np.any(f < 0):
            raise ValueError("init must be nonnegative")
    E = disc.energy(f, b)
    history = [E]
    res = float("inf")
    escaped = False
    for _ in range(max_iter):
        g = disc.gradient(f, b)
        r = g / (2 * disc.W)
        # components pinned at the bound f = 0 with outward gradient are not residual
        active = (f <= 0) & (g > 0)
        r[active] = 0.0
        res = float(np.max(np.abs(r)))
        if res < tol:
            if escaped or f.max() >= WARM_FLOOR:
                return Profile1D(disc.t, f, history)
            # a tiny f passes the absolute test next to the unstable zero state: push off it once
            escaped = True
            lam, u = _ground_state(disc)
            if lam >= 1.0 / b:
                return Profile1D(disc.t, f, history)
            f = 0.1 * u / u.max()
            E = disc.energy(f, b)
            history.append(E)
            continue
        d = _descent_direction(disc, f, b, g)
        d[active & (d < 0)] = 0.0
        step = 1.0
        slack = ROUNDOFF * max(1.0, abs(E))  # sums of ~1e4 terms are only this accurate
        while True:
            trial = np.maximum(f + step * d, 0.0)
            Et = disc.energy(trial, b)
            if Et <= E + slack:
                break
            step *= 0.5
            if step < 1e-12:
                break
        if Et > E + slack:
            break  # stalled: no energy-decreasing step
        f, E = trial, Et
        history.append(E)
    if _restart:
        try:
            return minimize_profile(alpha, b, mode, None, tol, max_iter, _restart=False)
        except ConvergenceError:
            pass
    raise ConvergenceError(f"profile minimization did not converge at alpha={alpha:.6g}, b={b:.6g}", res)


def _descent_direction(disc, f, b, g):
    shift = 0.0
    for _ in range(40):
        ab = disc.hessian_bands(f, b, shift)
        try:
            d = -solveh_banded(ab, g)
            return d
        except LinAlgError:
            shift = max(4 * shift, 1.0)
    # fall back to a preconditioned gradient step
    ab = disc.hessian_bands(np.zeros_like(f), 0.5 / max(disc.V.max(), 1.0), 1.0)
    return -solveh_banded(ab, g)


# -- optimization over alpha ------------------------------------------------------

def _energy_at(alpha, b, mode, warm=None):
    prof = minimize_profile(alpha, b, mode, init=warm)
    return f1d_energy(prof, alpha, b, mode), prof


def optimize_alpha(b: float, mode: OneDMode = half_line(), bracket=ALPHA_BRACKET, scan_step: float = 0.25,
                   xtol: float = 1e-9) -> OneDResult:
    """Minimize ``alpha -> min_f F`` and return the converged pair.

    A coarse scan locates the basin inside ``bracket``; bounded Brent search
    (golden section with parabolic steps) refines it and a secant iteration
    on the alpha-derivative polishes the first-order condition.
    """
    lo, hi = bracket
    if mode.kind == "finite":
        # (f(l - t), -l - alpha) is an equally good pair attached to t = l; keep the t = 0 branch
        lo = max(lo, -mode.length / 2)
    if b <= 0:
        raise ValueError("b must be positive")
    flags = []
    a_star, lam = _stability(mode)
    if lam >= 1.0 / b:
        return _normal_result(b, mode)  # zero is linearly stable, hence the minimizer
    # lambda grows like (alpha - a_star)^2, so the superconducting window has
    # half-width ~ sqrt(1/b - lambda); near threshold it is narrower than the scan step
    w = 2.0 * math.sqrt(1.0 / b - lam)
    if w < scan_step:
        a_lo, a_hi = max(a_star - w, lo), a_star + w
    else:
        grid = np.arange(lo, hi + 1e-12, scan_step)
        vals = np.array([_energy_at(a, b, mode)[0] for a in grid])
        i = int(np.argmin(vals))
        symmetric_edge = mode.kind == "finite" and i == 0 and grid[0] == -mode.length / 2
        if (i == 0 and not symmetric_edge) or i == len(grid) - 1:
            raise RuntimeError(f"alpha bracket {bracket} does not contain the minimum (b={b})")
        # short intervals: the optimum is the symmetric point alpha = -l/2 itself
        a_lo, a_hi = (grid[0], grid[1]) if symmetric_edge else (grid[i - 1], grid[i + 1])
    cache = {}

    def objective(a):
        E, prof = _energy_at(a, b, mode, cache.get("warm"))
        # profiles decaying to f = 0 stop once tiny (the residual is absolute), and
        # would pin every later solve there; never warm-start from them
        if prof.f.max() > WARM_FLOOR:
            cache["warm"] = prof
        return E

    res = minimize_scalar(objective, bounds=(a_lo, a_hi), method="bounded", options={"xatol": 1e-7})
    alpha = float(res.x)
    prof = minimize_profile(alpha, b, mode, init=cache.get("warm"))
    # secant polish on dE/dalpha
    d0 = alpha_derivative(prof, alpha, b, mode)
    a1 = alpha + 1e-6
    p1 = minimize_profile(a1, b, mode, init=prof)
    d1 = alpha_derivative(p1, a1, b, mode)
    a0 = alpha
    for _ in range(30):
        if d1 == d0:
            break
        a2 = a1 - d1 * (a1 - a0) / (d1 - d0)
        a0, d0 = a1, d1
        a1 = a2
        p1 = minimize_profile(a1, b, mode, init=p1)
        d1 = alpha_derivative(p1, a1, b, mode)
        if abs(a1 - a0) < xtol:
            break
    # the landscape is flat near threshold: keep the polish only inside the bracket and if it helps
    e_brent = f1d_energy(prof, alpha, b, mode)
    if a_lo <= a1 <= a_hi and f1d_energy(p1, a1, b, mode) <= e_brent + ROUNDOFF * max(1.0, abs(e_brent)):
        alpha, prof = a1, p1
    else:
        flags.append("secant polish rejected")
    # cold start must land on the same profile (nonconvexity guard)
    cold = minimize_profile(alpha, b, mode)
    if np.max(np.abs(cold.f - prof.f)) > 1e-8:
        flags.append("warm/cold start disagreement")
        if f1d_energy(cold, alpha, b, mode) < f1d_energy(prof, alpha, b, mode):
            prof = cold
    disc = _Discretization(alpha, mode)
    E = disc.energy(prof.f, b)
    if E >= -1e-14:
        return _normal_result(b, mode)
    return OneDResult(
        b=b, mode=mode, energy=E, alpha_opt=alpha, profile=prof, boundary_value=float(prof.f[0]),
        el_residual=float(np.max(np.abs(disc.residual(prof.f, b)))),
        alpha_moment=alpha_derivative(prof, alpha, b, mode) / 2, flags=flags,
    )


def _stability(mode):
    """(alpha, lambda) minimizing the lowest eigenvalue; zero is stable iff lambda >= 1/b."""
    res = minimize_scalar(lambda a: lowest_eigenvalue(a, mode), bounds=(-3.0, 1.0), method="bounded",
                          options={"xatol": 1e-8})
    return float(res.x), float(res.fun)


def _normal_result(b, mode):
    alpha, _ = _stability(mode)
    t = mode.grid()
    prof = Profile1D(t, np.zeros_like(t))
    return OneDResult(b=b, mode=mode, energy=0.0, alpha_opt=alpha, profile=prof, boundary_value=0.0,
                      el_residual=0.0, alpha_moment=0.0, normal=True, flags=["normal regime: zero profile"])


@lru_cache(maxsize=256)
def solve_1d(b: float, mode: OneDMode = half_line()) -> OneDResult:
    """Cached :func:`optimize_alpha` (results are treated as read-only)."""
    return optimize_alpha(b, mode)


# -- curvature coefficient -----------------------------------------------------------

def ecorr_from(result: OneDResult) -> float:
    """Curvature coefficient f0(0)^2 / 3 - alpha0 * E0 of a converged flat result."""
    return result.boundary_value ** 2 / 3 - result.alpha_opt * result.energy


def ecorr_as_printed(result: OneDResult) -> float:
    """The combination f0(0)^2 alpha0 / 3 - E0 (kept for comparison only)."""
    return result.boundary_value ** 2 * result.alpha_opt / 3 - result.energy


def compute_ecorr(b: float, mode: OneDMode = half_line()) -> float:
    """First-order curvature coefficient: E_k = E0 - eps k Ecorr + O(eps^2)."""
    return ecorr_from(solve_1d(b, mode))


def curved_truncation(k: float, eps: float, T: float = DEFAULT_T, margin: float = 0.75) -> float:
    """Largest safe interval for the curved functional (stays off the focal line)."""
    if eps * k <= 0:
        return T
    return min(T, margin / (eps * k))


@dataclass
class ExpansionReport:
    b: float
    k: float
    eps: list
    energies: list
    e0: float
    ecorr: float
    residuals: list
    exponent: float
    prefactor: float
    slope_ecorr: float
    flagged: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def expansion_check(b: float, k: float, eps_list, T: float = DEFAULT_T, h: float = DEFAULT_H) -> ExpansionReport:
    """Compare E_k(eps) with E0 - eps k Ecorr and fit the remainder.

    The remainder ``E_k - E0 + eps k Ecorr`` is fitted to ``C eps^p``; the
    slope route estimates Ecorr independently from a linear fit of
    ``(E_k - E0) / (eps k)`` against eps.
    """
    eps_list = sorted(float(e) for e in eps_list)
    base = solve_1d(b, half_line(T, h))
    e0 = base.energy
    ecorr = ecorr_from(base)
    energies = []
    for eps in eps_list:
        if k == 0:
            mode = curved(0.0, eps, T, h)
        else:
            mode = curved(k, eps, curved_truncation(k, eps, T), h)
        energies.append(solve_1d(b, mode).energy)
    energies = np.array(energies)
    eps_arr = np.array(eps_list)
    resid = energies - e0 + eps_arr * k * ecorr
    notes = []
    flagged = False
    if k == 0:
        return ExpansionReport(b, k, eps_list, energies.tolist(), e0, ecorr, resid.tolist(), float("inf"), 0.0,
                               float("nan"), False, ["k = 0: flat functional"])
    mag = np.abs(resid)
    if len(eps_list) < 2:
        return ExpansionReport(b, k, eps_list, energies.tolist(), e0, ecorr, resid.tolist(), float("nan"), 0.0,
                               float("nan"), False, ["a single eps: no fit"])
    if np.all(mag > 0):
        p, logc = np.polyfit(np.log(eps_arr), np.log(mag), 1)
    else:
        p, logc = float("inf"), -np.inf
    if np.any(np.diff(mag) < -1e-12 * max(1.0, float(mag.max()))):
        flagged = True
        notes.append("remainder not monotone in eps")
    slope, intercept = np.polyfit(eps_arr, (energies - e0) / (eps_arr * k), 1)
    return ExpansionReport(b, k, eps_list, energies.tolist(), e0, ecorr, resid.tolist(), float(p),
                           float(np.exp(logc)), float(-intercept), flagged, notes)


# -- tail diagnostic -------------------------------------------------------------------

NO_TAIL = None


def profile_tail_rate(profile: Profile1D, floor: float = 1e-250):
    """Least-squares slope of log f over the last third of the resolved tail.

    Returns ``None`` (no tail) for an identically zero profile.
    """
    f = profile.f
    keep = f > floor
    if not np.any(keep):
        return NO_TAIL
    last = int(np.flatnonzero(keep)[-1])
    if last < 3:
        return NO_TAIL
    start = (2 * last) // 3
    t, lf = profile.t[start:last + 1], np.log(f[start:last + 1])
    return float(np.polyfit(t, lf, 1)[0])
