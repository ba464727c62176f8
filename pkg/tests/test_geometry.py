import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glsurf import geometry
from glsurf.geometry import GeometryError


SHAPES = {
    "disc": geometry.disc(),
    "square": geometry.square(),
    "stadium": geometry.stadium(),
    "reflex_pentagon": geometry.reflex_pentagon(),
    "sector": geometry.circular_sector(2.0),
}


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_gauss_bonnet_defect_vanishes(name):
    assert abs(geometry.gauss_bonnet_defect(SHAPES[name])) <= 1e-8


def test_corner_angles():
    sq = SHAPES["square"]
    assert [b for _, b in sq.corners] == pytest.approx([math.pi / 2] * 4)
    pent = SHAPES["reflex_pentagon"]
    betas = sorted(b for _, b in pent.corners)
    assert betas[-1] == pytest.approx(1.5 * math.pi)
    assert SHAPES["disc"].n_corners == 0
    assert SHAPES["stadium"].n_corners == 0


def test_perimeter_area_and_curvature():
    d = geometry.disc(2.0)
    assert d.perimeter == pytest.approx(4 * math.pi)
    assert d.area == pytest.approx(4 * math.pi)
    assert geometry.curvature_integral(d) == pytest.approx(2 * math.pi, abs=1e-12)
    st_ = SHAPES["stadium"]
    assert st_.area == pytest.approx(math.pi * 0.25 + 1.0)
    assert geometry.curvature_integral(SHAPES["square"]) == 0.0


def test_sector_curvature_integral_matches_arc():
    beta = 2.0
    sec = geometry.circular_sector(beta, radius=1.5)
    assert geometry.curvature_integral(sec) == pytest.approx(beta, abs=1e-10)


def test_open_boundary_rejected():
    arcs = [geometry.Segment((0, 0), (1, 0)), geometry.Segment((1, 0), (1, 1)), geometry.Segment((1, 1), (0, 0.5))]
    with pytest.raises(GeometryError, match="do not close"):
        geometry.CurvilinearPolygon(arcs)


def test_clockwise_boundary_fails_validation():
    cw = geometry.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    with pytest.raises(GeometryError, match="Gauss-Bonnet"):
        geometry.validate_polygon(cw)


def test_declared_corners_must_match(tmp_path):
    d = {"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]], "corners": [[0, 1.0]]}
    with pytest.raises(GeometryError, match="declared corners"):
        geometry.polygon_from_dict(d)


def test_polygon_file_roundtrip(tmp_path):
    path = tmp_path / "stadium.json"
    geometry.save_polygon(SHAPES["stadium"], path)
    back = geometry.load_polygon(path)
    assert back.perimeter == pytest.approx(SHAPES["stadium"].perimeter, rel=1e-12)
    assert abs(geometry.gauss_bonnet_defect(back)) < 1e-10
    # builtin shapes by name
    path.write_text(json.dumps({"shape": "circular_sector", "beta": 1.0}))
    assert sorted(b for _, b in geometry.load_polygon(path).corners) == pytest.approx([1.0, math.pi / 2, math.pi / 2])


def test_unknown_shape():
    with pytest.raises(GeometryError, match="unknown built-in shape"):
        geometry.polygon_from_dict({"shape": "torus"})


def test_spline_boundary_curvature_from_spline():
    # a sampled ellipse: the spline curvature should integrate to 2 pi
    th = np.linspace(0, 2 * math.pi, 200, endpoint=False)
    pts = np.stack([1.5 * np.cos(th), np.sin(th)], axis=1).tolist()
    poly = geometry.polygon_from_dict({"arcs": [{"type": "spline", "points": pts, "periodic": True}]})
    assert abs(geometry.gauss_bonnet_defect(poly)) < 1e-8
    # curvature at the end of the major axis is a / b^2
    s_tip = min(np.arange(0, poly.perimeter, poly.perimeter / 4000),
                key=lambda s: -poly.point(s)[0])
    assert poly.curvature(s_tip) == pytest.approx(1.5, rel=2e-3)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.0, 2 * math.pi * 0.999), t=st.floats(0.0, 5.0))
def test_tubular_roundtrip_disc(s, t):
    poly = SHAPES["disc"]
    eps = 0.05
    p = geometry.tubular_map(poly, s / eps, t, eps)
    back = geometry.inverse_tubular(poly, p, eps)
    assert back.t == pytest.approx(t, abs=1e-9)
    if t > 0:
        assert back.s * eps == pytest.approx(s, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0.05, 0.95), y=st.floats(0.01, 0.2))
def test_tubular_roundtrip_square_near_bottom(x, y):
    poly = geometry.square(1.0, center=(0.5, 0.5))
    if y >= min(x, 1 - x):
        return  # closer to a side than to the bottom
    tp = geometry.inverse_tubular(poly, (x, y), 0.1)
    assert tp.t == pytest.approx(y / 0.1, rel=1e-9)
    assert np.allclose(geometry.tubular_map(poly, tp.s, tp.t, 0.1), (x, y), atol=1e-12)


def test_medial_axis_is_ambiguous():
    with pytest.raises(geometry.AmbiguousProjection):
        geometry.inverse_tubular(geometry.square(1.0, center=(0.5, 0.5)), (0.2, 0.2), 0.1)


def test_scaling_helpers():
    assert geometry.rescale_length(0.3, 0.1) == pytest.approx(3.0)
    assert geometry.physical_length(3.0, 0.1) == pytest.approx(0.3)
