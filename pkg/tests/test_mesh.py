import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glsurf import geometry, gl2d
from glsurf.mesh import (Mesh2D, MeshError, graded_radii, layer_mesh, polar_sector_mesh, polygon_mesh,
                         rectangle_mesh)


def meshes():
    return {
        "layer": layer_mesh(geometry.disc(), 0.05, depth=6.0, h=0.2),
        "polygon": polygon_mesh(geometry.reflex_pentagon(), 0.08),
        "rectangle": rectangle_mesh(-1.0, 2.0, 0.0, 1.5, 31, 16),
        "sector": polar_sector_mesh(2.0, 6.0, graded_radii(6.0, 0.05, 0.3, focus=()), 41),
    }


MESHES = meshes()


# eps at which each kind of mesh is used (sector meshes live in blown-up units)
WORKING_EPS = {"layer": 0.05, "polygon": 0.04, "rectangle": 0.04, "sector": 1.0}


@pytest.mark.parametrize("name", sorted(MESHES))
def test_discrete_curl_equals_area(name):
    m = MESHES[name]
    assert m.curl_defect(1.0) <= 1e-12
    assert m.curl_defect(WORKING_EPS[name]) <= 1e-12


@pytest.mark.parametrize("name", sorted(MESHES))
def test_masses_partition_area(name):
    m = MESHES[name]
    assert m.masses.sum() == pytest.approx(m.area, rel=1e-12)
    assert np.all(m.masses > 0)


@pytest.mark.parametrize("name", sorted(MESHES))
def test_cotangent_stiffness_exact_on_linear_functions(name):
    m = MESHES[name]
    u = 2.0 * m.points[:, 0] - 3.0 * m.points[:, 1]
    # negligible field: links vanish, kinetic term is the Dirichlet energy of the interpolant
    assert m.kinetic_energy(u.astype(complex), 1e9) == pytest.approx(13.0 * m.area, rel=1e-10)


def test_kinetic_matrix_hermitian_and_consistent():
    m = MESHES["polygon"]
    K = m.kinetic_matrix(0.3)
    assert abs(K - K.conj().T).max() < 1e-13
    rng = np.random.default_rng(0)
    psi = rng.normal(size=m.n_nodes) + 1j * rng.normal(size=m.n_nodes)
    assert np.real(np.vdot(psi, K @ psi)) == pytest.approx(m.kinetic_energy(psi, 0.3), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), eps=st.floats(0.05, 2.0), b=st.floats(1.01, 1.69))
def test_gl_energy_gauge_invariant(seed, eps, b):
    m = MESHES["polygon"]
    rng = np.random.default_rng(seed)
    psi = rng.random(m.n_nodes) * np.exp(2j * math.pi * rng.random(m.n_nodes))
    phi = rng.uniform(-50, 50, m.n_nodes)
    e1 = gl2d.gl_energy(psi, m, eps, b)
    e2 = gl2d.gl_energy(psi * np.exp(1j * phi), m.gauge_transformed(phi), eps, b)
    scale = m.kinetic_energy(np.abs(psi).astype(complex), 1e9) + np.sum(m.masses) / (b * eps ** 2) + 1.0
    assert abs(e1 - e2) <= 1e-12 * scale


def test_rectangle_masses_are_cell_areas():
    m = rectangle_mesh(0.0, 1.0, 0.0, 1.0, 11, 11)
    interior = (m.points[:, 0] > 0) & (m.points[:, 0] < 1) & (m.points[:, 1] > 0) & (m.points[:, 1] < 1)
    assert np.allclose(m.masses[interior], 0.01, rtol=1e-12)


def test_polygon_mesh_quality_and_boundary():
    poly = geometry.square(1.0, center=(0.5, 0.5))
    m = polygon_mesh(poly, 0.05)
    q = m.quality()
    assert q["min_angle"] > 0.4
    assert m.area == pytest.approx(1.0, rel=1e-12)
    x, y = m.points.T
    exact = np.minimum.reduce([x, 1 - x, y, 1 - y])
    assert np.allclose(m.dist, exact, atol=1e-4)
    # all four corners are nodes
    for c in [(0, 0), (1, 0), (1, 1), (0, 1)]:
        assert np.min(np.hypot(x - c[0], y - c[1])) < 1e-12
    assert m.tag("outer").sum() == m.boundary_nodes.sum()


def test_layer_mesh_guards():
    with pytest.raises(MeshError, match="corners"):
        layer_mesh(geometry.square(), 0.1)
    with pytest.raises(MeshError, match="focal"):
        layer_mesh(geometry.disc(0.5), 0.1, depth=8.0)


def test_mesh_construction_errors():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(MeshError, match="degenerate"):
        Mesh2D(pts, [[0, 1, 2]])
    with pytest.raises(MeshError, match="out of range"):
        Mesh2D(pts, [[0, 1, 3]])
    with pytest.raises(MeshError):
        Mesh2D(pts, [[0, 1]])


def test_orientation_normalized():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    m = Mesh2D(pts, [[0, 2, 1]])
    assert m.areas[0] == pytest.approx(0.5)
    assert m.curl_defect() < 1e-15


def test_header_is_json_ready():
    import json

    json.dumps(MESHES["layer"].header())
