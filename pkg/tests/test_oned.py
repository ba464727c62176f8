import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_bvp

from glsurf import oned, spectral

# frozen at b = 1.5, T = 15, h = 0.005
E0_GOLDEN = -0.007606827151
ALPHA0_GOLDEN = -0.785772105
F0_GOLDEN = 0.384283854
ECORR_GOLDEN = 0.0432474609
# h -> 0 values (Richardson over h, h/2; confirmed by the collocation oracle below)
E0_LIMIT = -0.0076071959
ALPHA0_LIMIT = -0.78577389


def bvp_oracle(b, alpha, T=12.0):
    """Collocation solve of the Euler-Lagrange equation with f'(0) = f'(T) = 0; returns (energy, f(0))."""
    def rhs(t, y):
        return np.vstack([y[1], ((t + alpha) ** 2 - (1 - y[0] ** 2) / b) * y[0]])

    t = np.linspace(0.0, T, 200)
    guess = np.vstack([0.4 * np.exp(-t ** 2 / 2), -0.4 * t * np.exp(-t ** 2 / 2)])
    sol = solve_bvp(rhs, lambda ya, yb: np.array([ya[1], yb[1]]), t, guess, tol=1e-10, max_nodes=200000)
    assert sol.status == 0

    def density(s):
        f, fp = sol.sol(s)
        return fp ** 2 + (s + alpha) ** 2 * f ** 2 - (2 * f ** 2 - f ** 4) / (2 * b)

    return quad(density, 0.0, T, limit=500, epsabs=1e-14)[0], float(sol.sol(0.0)[0])


def test_golden_triple(flat15):
    assert flat15.energy == pytest.approx(E0_GOLDEN, abs=1e-11)
    assert flat15.alpha_opt == pytest.approx(ALPHA0_GOLDEN, abs=1e-8)
    assert flat15.boundary_value == pytest.approx(F0_GOLDEN, abs=1e-8)
    assert oned.ecorr_from(flat15) == pytest.approx(ECORR_GOLDEN, abs=1e-9)


def test_energy_matches_collocation_oracle(flat15):
    e_bvp, f0_bvp = bvp_oracle(1.5, flat15.alpha_opt)
    fine = oned.solve_1d(1.5, oned.half_line(15.0, 0.0025))
    rich = (4 * fine.energy - flat15.energy) / 3
    # the discrete minimizer lies above the continuum energy by O(h^2)
    assert abs(flat15.energy - e_bvp) < 5e-7
    assert abs(rich - e_bvp) < 1e-10
    assert rich == pytest.approx(E0_LIMIT, abs=1e-10)
    assert f0_bvp == pytest.approx(flat15.boundary_value, abs=1e-5)
    assert (4 * fine.alpha_opt - flat15.alpha_opt) / 3 == pytest.approx(ALPHA0_LIMIT, abs=1e-7)


def test_alpha_matches_scan_and_bisection_oracle(flat15):
    b, mode = 1.5, oned.half_line()

    def moment(a):
        return oned.alpha_derivative(oned.minimize_profile(a, b, mode), a, b, mode)

    grid = np.arange(-0.80, -0.77 + 1e-12, 1e-3)
    energies = [oned.f1d_energy(oned.minimize_profile(a, b, mode), a, b, mode) for a in grid]
    i = int(np.argmin(energies))
    lo, hi = grid[i - 1], grid[i + 1]
    assert moment(lo) < 0 < moment(hi)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if moment(mid) < 0 else (lo, mid)
    assert 0.5 * (lo + hi) == pytest.approx(flat15.alpha_opt, abs=1e-7)


def test_stationarity_and_profile_invariants(flat15):
    f = flat15.profile.f
    assert flat15.el_residual < 1e-9
    assert abs(flat15.alpha_moment) <= 1e-6 * flat15.profile.norm2()
    assert f.min() >= 0 and f.max() <= 1
    assert f[-1] <= 1e-8
    assert flat15.energy < 0
    # the maximum sits near t = -alpha0; beyond it the profile decays monotonically and exponentially
    t = flat15.profile.t
    assert 0 < t[np.argmax(f)] < 1.0
    tail = f[(t > 2.0) & (f > 1e-200)]
    assert np.all(np.diff(tail) < 0)
    assert oned.profile_tail_rate(flat15.profile) < -1.0  # slope of log f


def test_zero_profile_and_flat_curved_agree():
    mode = oned.half_line(6.0, 0.05)
    zero = np.zeros(mode.n)
    assert oned.f1d_energy(zero, -0.3, 1.5, mode) == 0.0
    f = 0.5 * np.exp(-mode.grid() ** 2)
    flat = oned.f1d_energy(f, -0.7, 1.5, mode)
    assert oned.f1d_energy(f, -0.7, 1.5, oned.curved(0.0, 0.05, 6.0, 0.05)) == flat


def test_focal_singularity():
    mode = oned.curved(1.0, 0.1, T=15.0)
    with pytest.raises(oned.FocalSingularity):
        oned.f1d_energy(np.zeros(mode.n), 0.0, 1.5, mode)


def test_profile_length_checked():
    with pytest.raises(ValueError, match="nodes"):
        oned.f1d_energy(np.zeros(5), 0.0, 1.5, oned.half_line(1.0, 0.1))


def test_minimizer_monotone_and_errors():
    mode = oned.half_line(10.0, 0.02)
    prof = oned.minimize_profile(-0.7, 1.5, mode)
    hist = np.array(prof.energy_history)
    assert np.all(np.diff(hist) <= oned.ROUNDOFF * np.maximum(1.0, np.abs(hist[:-1])))
    with pytest.raises(ValueError, match="nonnegative"):
        oned.minimize_profile(-0.7, 1.5, mode, init=-np.ones(mode.n))
    with pytest.raises(oned.ConvergenceError) as info:
        oned.minimize_profile(-0.7, 1.5, mode, max_iter=1)
    assert info.value.residual > 0


def test_normal_state_above_threshold():
    b = 2 / spectral.THETA0
    res = oned.optimize_alpha(b)
    assert res.normal and res.energy == 0.0
    assert np.all(res.profile.f == 0)
    # the linearization around zero is positive
    assert oned.lowest_eigenvalue(res.alpha_opt) > 1 / b
    prof = oned.minimize_profile(res.alpha_opt, b, init=np.full(oned.half_line().n, 0.5))
    assert np.max(prof.f) < 1e-6


def test_finite_interval_reproduces_half_line():
    a = oned.solve_1d(1.5, oned.finite(15.0))
    assert a.energy == pytest.approx(oned.solve_1d(1.5).energy, abs=1e-9)


def test_short_interval_energy_vanishes():
    # natural conditions at both ends: a short interval is fully superconducting, E ~ -l / (2b) -> 0
    b = 1.5
    res = [oned.solve_1d(b, oned.finite(ell, 0.002)) for ell in (0.4, 0.2, 0.1, 0.05)]
    energies = [r.energy for r in res]
    assert np.all(np.diff(energies) > 0) and abs(energies[-1]) < 0.02
    assert energies[-1] / 0.05 == pytest.approx(-1 / (2 * b), rel=1e-3)
    # optimum at the symmetric point
    assert res[-1].alpha_opt == pytest.approx(-0.025, abs=1e-6)


def test_ecorr_positive_and_vanishing_at_threshold():
    bs = [1.1, 1.3, 1.5, 1.65, 1.69, 1.694]
    e0 = [oned.solve_1d(b).energy for b in bs]
    ec = [oned.compute_ecorr(b) for b in bs]
    assert all(c > 0 for c in ec)
    assert all(e < 0 for e in e0)
    assert abs(e0[-1]) < 1e-7 and ec[-1] < 1e-3
    assert np.all(np.diff(np.abs(e0)) < 0)
    assert np.all(np.diff(ec[1:]) < 0)  # Ecorr peaks at moderate b, then falls to zero


def test_printed_combination_differs():
    # the combination alpha0 f0(0)^2 / 3 - E0 is negative, so cannot be the positive coefficient
    r = oned.solve_1d(1.5)
    assert oned.ecorr_as_printed(r) < 0 < oned.ecorr_from(r)


def test_expansion_flat_curvature_is_exact():
    rep = oned.expansion_check(1.5, 0.0, [0.02, 0.04])
    assert rep.residuals == [0.0, 0.0]
    assert not rep.flagged


def test_expansion_sign_convention():
    # convex boundary (k > 0) lowers the energy
    rep = oned.expansion_check(1.5, 1.0, [0.04])
    assert rep.energies[0] < rep.e0


def test_grid_halving_order_on_smooth_input():
    def energy(h):
        mode = oned.half_line(8.0, h)
        f = 0.5 * np.exp(-mode.grid() ** 2)
        return oned.f1d_energy(f, -0.7, 1.5, mode)

    e = [energy(h) for h in (0.04, 0.02, 0.01, 0.005)]
    d = np.abs(np.diff(e))
    orders = np.log2(d[:-1] / d[1:])
    assert np.all(orders >= 1.9), orders


def test_grid_halving_order_of_minimum():
    e = [oned.solve_1d(1.5, oned.half_line(15.0, h)).energy for h in (0.02, 0.01, 0.005)]
    d = abs(e[1] - e[0]), abs(e[2] - e[1])
    assert math.log2(d[0] / d[1]) >= 1.9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), alpha=st.floats(-1.5, 0.0))
def test_no_profile_beats_the_minimum(seed, alpha):
    rng = np.random.default_rng(seed)
    mode = oned.half_line()
    t = mode.grid()
    f = rng.random() * np.exp(-rng.uniform(0.1, 3.0) * t ** 2) * (1 + 0.2 * np.sin(rng.uniform(1, 5) * t))
    assert oned.f1d_energy(np.abs(f), alpha, 1.5, mode) >= E0_GOLDEN - 1e-12


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(-1.2, -0.3), b=st.floats(1.05, 1.65))
def test_minimized_profile_obeys_maximum_principle(alpha, b):
    prof = oned.minimize_profile(alpha, b, oned.half_line(10.0, 0.02))
    assert prof.f.min() >= 0 and prof.f.max() <= 1
