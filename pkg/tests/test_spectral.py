import math

import numpy as np
import pytest

from glsurf import geometry, oned, spectral

THETA0_GOLDEN = 0.5901061257


def test_harmonic_oscillator_oracle():
    # alpha = 0: the Neumann ground state of -u'' + t^2 u on the half-line is the even Gaussian, eigenvalue 1
    assert spectral.shooting_eigenvalue(0.0) == pytest.approx(1.0, abs=1e-9)
    assert oned.lowest_eigenvalue(0.0, oned.half_line(10.0, 0.01)) == pytest.approx(1.0, abs=1e-4)


def test_theta0_two_routes():
    res = spectral.compute_theta0()
    assert 0 < res.value < 1
    assert abs(res.value - res.shooting) < 2e-3
    assert res.value == pytest.approx(THETA0_GOLDEN, abs=1e-8)
    assert res.shooting == pytest.approx(THETA0_GOLDEN, abs=1e-8)
    # minimizing alpha is -sqrt(Theta0)
    assert res.shooting_alpha == pytest.approx(-math.sqrt(res.shooting), abs=1e-5)
    assert res.error < 1e-5


def test_fd_eigenvalue_converges_at_second_order():
    vals = [spectral._fd_min(h, 12.0)[0] for h in (0.04, 0.02, 0.01)]
    d = np.abs(np.diff(vals))
    assert math.log2(d[0] / d[1]) == pytest.approx(2.0, abs=0.1)


def test_sector_spec_validation():
    with pytest.raises(ValueError):
        spectral.SectorSpec(0.0)
    with pytest.raises(ValueError):
        spectral.SectorSpec(2 * math.pi)
    with pytest.raises(ValueError):
        spectral.SectorSpec(1.0, R=-1.0)


def test_sector_eigenpair_consistency():
    mu, vec, res, mesh = spectral.sector_eigen(spectral.SectorSpec(math.pi / 2, R=6.0, h=0.25, h_vertex=0.1))
    assert res < 1e-8
    assert spectral.rayleigh_quotient(vec, mesh) == pytest.approx(mu, rel=1e-10)
    # the quarter plane binds below the half-plane value
    assert mu < THETA0_GOLDEN


def test_sector_eigenvalue_is_gauge_invariant():
    spec = spectral.SectorSpec(2.0, R=5.0, h=0.3, h_vertex=0.15)
    mu, vec, _, mesh = spectral.sector_eigen(spec)
    rng = np.random.default_rng(1)
    phi = rng.uniform(0, 2 * math.pi, mesh.n_nodes)
    moved = mesh.gauge_transformed(phi)
    assert spectral.rayleigh_quotient(vec * np.exp(1j * phi), moved) == pytest.approx(mu, rel=1e-12)


def test_critical_field_ladder_square():
    sq = geometry.square()
    lad = spectral.critical_fields(0.1, sq, theta0=THETA0_GOLDEN, mu_fn=lambda b: 0.51)
    assert lad.hc2 <= lad.h_star <= lad.hc3
    assert len(lad.corners) == 4
    assert all(c["field"] == pytest.approx(1 / (0.51 * 0.01)) for c in lad.corners)
    assert lad.hc2 == pytest.approx(100.0)


def test_critical_field_obtuse_clamp_and_order():
    calls = []

    def mu_fn(beta):
        calls.append(beta)
        return 0.5 + 0.04 * beta  # exceeds Theta0 for obtuse angles

    betas = [2.5, math.pi / 2, 1.5 * math.pi, 1.0]
    lad = spectral.critical_fields(0.2, betas=betas, theta0=THETA0_GOLDEN, mu_fn=mu_fn)
    fields = [c["field"] for c in lad.corners]
    assert fields == sorted(fields)
    obtuse = [c for c in lad.corners if c["beta"] == 2.5][0]
    assert obtuse["mu_clamped"] == THETA0_GOLDEN and obtuse["field"] == pytest.approx(lad.h_star)
    reflex = [c for c in lad.corners if c["beta"] == 1.5 * math.pi][0]
    assert reflex["mu"] == THETA0_GOLDEN
    assert 1.5 * math.pi not in calls  # reflex angles never need a sector solve
    assert lad.hc3 == max(fields)


def test_critical_fields_rejects_bad_eps():
    with pytest.raises(ValueError):
        spectral.critical_fields(0.0, betas=[], theta0=0.59)
