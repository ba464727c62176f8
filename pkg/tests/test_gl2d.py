import math

import numpy as np
import pytest

from glsurf import geometry, gl2d
from glsurf.mesh import layer_mesh, polygon_mesh

EPS, B = 0.1, 1.5


@pytest.fixture(scope="module")
def disc_layer():
    return layer_mesh(geometry.disc(), EPS, depth=6.0, h=0.25)


@pytest.fixture(scope="module")
def disc_ansatz(disc_layer, flat15):
    m = disc_layer
    poly = geometry.disc()
    tau, k = gl2d.mesh_tangents(m, poly)
    psi, alpha, wind = gl2d.boundary_ansatz(m, EPS, flat15.profile, flat15.alpha_opt, tau,
                                            ring=gl2d.disc_ring(m, 0), curvature=k)
    return psi, alpha, wind


@pytest.fixture(scope="module")
def disc_minimizer(disc_layer, disc_ansatz):
    zeros = np.zeros(disc_layer.n_nodes, dtype=complex)
    return gl2d.minimize(disc_layer, EPS, B, init=disc_ansatz[0], dirichlet=disc_layer.tag("artificial"),
                         dirichlet_values=zeros)


def test_energy_of_zero_and_parameter_errors(disc_layer):
    z = np.zeros(disc_layer.n_nodes)
    assert gl2d.gl_energy(z, disc_layer, EPS, B) == 0.0
    assert gl2d.el_residual(z, disc_layer, EPS, B) == 0.0
    for eps, b in ((0.0, 1.5), (0.1, 0.0), (-1.0, 1.5)):
        with pytest.raises(gl2d.ParameterError):
            gl2d.gl_energy(z, disc_layer, eps, b)


def test_constant_state_pays_magnetic_energy():
    m = polygon_mesh(geometry.disc(), 0.05)
    e = gl2d.gl_energy(np.ones(m.n_nodes), m, 0.1, 1.5)
    assert e > 0
    # kinetic part alone is of order area / eps^4 (field 1/eps^2, |r| ~ 1)
    assert m.kinetic_energy(np.ones(m.n_nodes, dtype=complex), 0.1) > 100 * m.area


def test_zero_is_a_critical_point(disc_layer):
    psi, rep = gl2d.minimize(disc_layer, EPS, B)
    assert np.all(psi == 0) and rep.energy == 0.0 and rep.iterations == 0


def test_quartic_line_search_is_exact(disc_layer):
    rng = np.random.default_rng(3)
    n = disc_layer.n_nodes
    psi = 0.3 * rng.random(n) * np.exp(2j * np.pi * rng.random(n))
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    K = disc_layer.kinetic_matrix(EPS)
    tau, de = gl2d._quartic_step(psi, d, K @ psi, K @ d, disc_layer.masses, EPS, B)
    e0 = gl2d.gl_energy(psi, disc_layer, EPS, B)
    taus = np.linspace(0, 2 * max(tau, 1e-6), 2001)
    brute = [gl2d.gl_energy(psi + t * d, disc_layer, EPS, B) for t in taus[::50]]
    assert e0 + de == pytest.approx(gl2d.gl_energy(psi + tau * d, disc_layer, EPS, B), rel=1e-9)
    assert e0 + de <= min(brute) + 1e-9 * abs(e0)


def test_descent_is_monotone_and_bounded(disc_minimizer):
    psi, rep = disc_minimizer
    e = np.array(rep.energies)
    assert np.all(np.diff(e) <= 1e-13 * max(1.0, abs(e[0])))
    assert rep.converged and rep.residual < 1e-6
    assert np.abs(psi).max() <= 1 + 1e-10
    assert rep.energy < 0


def test_solver_reports_iteration_cap(disc_layer, disc_ansatz):
    with pytest.raises(gl2d.SolverError) as info:
        gl2d.minimize(disc_layer, EPS, B, init=0.5 * disc_ansatz[0], max_iter=2)
    assert info.value.residual > 1e-6 and info.value.report is not None


def test_ansatz_self_deviation_and_winding(disc_layer, disc_ansatz, flat15):
    psi, alpha, wind = disc_ansatz
    assert gl2d.surface_profile_deviation(psi, disc_layer, EPS, flat15.profile) <= 1e-3
    assert gl2d.winding_number(psi, disc_layer, 0.0) == wind
    # |degree| is the flux quantum count less the boundary phase drift (negative in this gauge)
    flux = math.pi / EPS ** 2 / (2 * math.pi)
    assert wind < 0
    assert abs(abs(wind) - (flux + alpha * 2 * math.pi / EPS / (2 * math.pi))) < 1.0


def test_agmon_and_no_mass(disc_layer, disc_minimizer):
    psi, _ = disc_minimizer
    rep = gl2d.agmon_profile(psi, disc_layer, EPS, n=5)
    assert not rep.no_mass and rep.rate > 0
    assert np.all(np.diff(rep.mass) <= 0)
    zero = gl2d.agmon_profile(np.zeros(disc_layer.n_nodes), disc_layer, EPS)
    assert zero.no_mass


def test_winding_needs_nonvanishing_contour(disc_layer):
    with pytest.raises(gl2d.VanishingOnContour):
        gl2d.winding_number(np.zeros(disc_layer.n_nodes), disc_layer, 0.0)


def test_winding_on_unstructured_mesh_matches_layer(flat15):
    poly = geometry.disc()
    ds = gl2d.solve_domain(poly, 0.15, B, profile=flat15.profile, alpha=flat15.alpha_opt, h=0.3, depth=5.0)
    assert ds.mesh.meta["kind"] == "layer"
    w_layer = gl2d.winding_number(ds.psi, ds.mesh, 0.15)
    m2 = polygon_mesh(poly, 0.03)
    tau, k = gl2d.mesh_tangents(m2, poly)
    psi2, _, _ = gl2d.boundary_ansatz(m2, 0.15, flat15.profile, ds.alpha, tau, curvature=k)
    assert gl2d.winding_number(psi2, m2, 0.15, poly=poly) == pytest.approx(w_layer, abs=1)


def test_supercurrent_gauge_invariant(disc_layer, disc_minimizer):
    psi, _ = disc_minimizer
    je, J = gl2d.supercurrent(psi, disc_layer, EPS)
    phi = np.random.default_rng(2).uniform(0, 6, disc_layer.n_nodes)
    je2, _ = gl2d.supercurrent(psi * np.exp(1j * phi), disc_layer.gauge_transformed(phi), EPS)
    assert np.allclose(je, je2, atol=1e-10 * np.abs(je).max())
    assert J.shape == (disc_layer.n_nodes, 2)


def test_density_patches_partition_quartic_mass(disc_layer, disc_minimizer, flat15):
    psi, _ = disc_minimizer
    P = 2 * math.pi
    sectors = [(f"s{j}", j * P / 4, (j + 1) * P / 4) for j in range(4)]
    rows = gl2d.density_vs_curvature(psi, disc_layer, EPS, B, sectors, geometry.disc(), flat15.energy, 0.04)
    total = np.sum(disc_layer.masses * np.abs(psi) ** 4 / (2 * B))
    assert sum(r.quartic_mass for r in rows) == pytest.approx(total, rel=1e-12)
    assert all(r.curvature_term > 0 for r in rows)


def test_snapshot_roundtrip(tmp_path, disc_layer, disc_ansatz):
    psi = disc_ansatz[0]
    gl2d.save_snapshot(tmp_path / "field", psi, disc_layer, {"eps": EPS})
    header, arrays = gl2d.load_snapshot(tmp_path / "field")
    assert header["format"] == "glsurf-field-1" and header["params"]["eps"] == EPS
    assert np.array_equal(arrays["psi"], psi)
    assert np.array_equal(arrays["triangles"], disc_layer.triangles)


def test_normal_state_above_effective_threshold():
    # b far above the curvature-shifted threshold: any start collapses to zero
    poly = geometry.disc()
    ds = gl2d.solve_domain(poly, 0.1, 2.2, h=0.25, depth=6.0, starts=("random",), seed=4)
    assert np.abs(ds.psi).max() <= 1e-3


def test_best_of_two_starts(flat15):
    ds = gl2d.solve_domain(geometry.disc(), 0.1, B, profile=flat15.profile, alpha=flat15.alpha_opt, h=0.25,
                           depth=6.0, starts=("ansatz", "random"), seed=1)
    energies = [s["energy"] for s in ds.starts if s["converged"]]
    assert len(energies) == 2
    assert ds.report.energy == min(energies) < 0


def test_unknown_start_rejected():
    with pytest.raises(gl2d.ParameterError):
        gl2d.solve_domain(geometry.disc(), 0.1, B, starts=("magic",), h=0.5, depth=4.0)


def test_grid_halving_order_of_ansatz_energy(flat15):
    poly = geometry.disc()
    energies = []
    for h in (0.4, 0.2, 0.1):
        m = layer_mesh(poly, EPS, depth=8.0, h=h)
        tau, k = gl2d.mesh_tangents(m, poly)
        psi, _, _ = gl2d.boundary_ansatz(m, EPS, flat15.profile, flat15.alpha_opt, tau, ring=gl2d.disc_ring(m, 0),
                                         curvature=k)
        energies.append(gl2d.gl_energy(psi, m, EPS, B))
    d = np.abs(np.diff(energies))
    assert math.log2(d[0] / d[1]) >= 1.9


@pytest.mark.parametrize("b", [1.25, 1.5, 1.75])
def test_agmon_rate_positive_on_disc(b, flat15):
    # at b = 1.75 the flat threshold is passed, yet the curved boundary keeps a thin superconducting layer
    ds = gl2d.solve_domain(geometry.disc(), 0.08, b, profile=flat15.profile, alpha=flat15.alpha_opt, h=0.2,
                           starts=("ansatz", "random"))
    rep = gl2d.agmon_profile(ds.psi, ds.mesh, 0.08)
    assert np.abs(ds.psi).max() > 1e-2
    assert not rep.no_mass and rep.rate > 0
