import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acboundary.geometry import (FocalDistanceError, Geometry, geometry_from_mapping,
                                 jacobi_apply, load_geometry, radial_reduction)

CATALOG = [
    Geometry.slab(1.0),
    Geometry.disk(1.0),
    Geometry.disk(2.0, dim=3),
    Geometry.annulus(1.0, 2.0, "inner"),
    Geometry.annulus(1.0, 2.0, "outer"),
    Geometry.sphere_cap(2, 0.0),
    Geometry.sphere_cap(3, 0.4),
    Geometry.sphere_band(2, 0.5),
]


@pytest.mark.parametrize("geom", CATALOG, ids=lambda g: g.key)
def test_mean_curvature_is_log_derivative_of_area(geom):
    T = 0.4 * min(geom.domain_length, geom.focal_distance)
    t = np.linspace(0.0, T, 9)[1:-1]
    h = 1e-6
    logJ = lambda s: np.log(geom.area_element(s))
    H_fd = -(logJ(t + h) - logJ(t - h)) / (2 * h)
    assert np.allclose(geom.mean_curvature(t), H_fd, atol=1e-7)
    dH_fd = (geom.mean_curvature(t + h) - geom.mean_curvature(t - h)) / (2 * h)
    assert np.allclose(geom.mean_curvature(t, 1), dH_fd, atol=1e-6)


@pytest.mark.parametrize("geom", CATALOG, ids=lambda g: g.key)
def test_curvature_data(geom):
    c = geom.curvature_data()
    assert c.H0 == pytest.approx(geom.mean_curvature(0.0), abs=1e-14)
    assert c.Hdot0 == pytest.approx(geom.mean_curvature(0.0, 1), abs=1e-14)
    assert c.Hdot0 == pytest.approx(c.A_norm_sq + c.Ric_nn, abs=1e-14)
    assert geom.area_element(0.0) == 1.0


def test_known_values():
    assert Geometry.disk(1.0).curvature_data().H0 == 1.0
    assert Geometry.annulus(1.0, 2.0, "inner").curvature_data().H0 == -1.0
    eq = Geometry.sphere_cap(2, 0.0).curvature_data()
    assert (eq.H0, eq.Hdot0, eq.A_norm_sq, eq.Ric_nn) == (0.0, 1.0, 0.0, 1.0)
    assert Geometry.disk(1.0).focal_distance == 1.0
    assert Geometry.sphere_cap(2, 0.0).focal_distance == pytest.approx(math.pi / 2)
    assert Geometry.sphere_band(2, 0.5).domain_length == pytest.approx(2 * math.asin(0.5))


def test_far_end_conditions():
    assert Geometry.disk(1.0).far_end == "regular"
    assert Geometry.sphere_band(2, 0.3).far_end == "dirichlet"
    assert Geometry.annulus(1, 2).far_end == "dirichlet"


def test_outside_collar_rejected():
    with pytest.raises(FocalDistanceError):
        Geometry.disk(1.0).area_element(1.5)
    with pytest.raises(FocalDistanceError):
        Geometry.slab(1.0).mean_curvature(-0.1)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        Geometry("torus", {})
    with pytest.raises(ValueError):
        Geometry.annulus(2.0, 1.0)
    with pytest.raises(ValueError):
        Geometry.sphere_band(2, -0.1)
    with pytest.raises(ValueError):
        geometry_from_mapping({"R": 1.0})


def test_radial_reduction():
    a, b = radial_reduction(Geometry.disk(1.0))
    assert a(0.3) == 1.0
    assert b(0.5) == pytest.approx(-2.0)


def test_revolution_matches_sphere():
    x = np.linspace(-0.95, 0.95, 401)
    r = np.sqrt(1 - x**2)
    for x0 in (0.0, 0.3):
        rev = Geometry.revolution(x, r, x0).curvature_data()
        cap = Geometry.sphere_cap(2, x0).curvature_data()
        assert rev.H0 == pytest.approx(cap.H0, abs=1e-5)
        assert rev.Hdot0 == pytest.approx(cap.Hdot0, abs=1e-4)
    assert Geometry.revolution(x, r, 0.0).far_end == "pinned"


def test_revolution_collar_is_half_the_focal_distance():
    x = np.linspace(0.0, 1.0, 201)
    cone = Geometry.revolution(x, 1.0 - x, 0.0)
    assert cone.focal_distance == pytest.approx(math.sqrt(2), rel=1e-3)
    assert cone.domain_length == pytest.approx(0.5 * cone.focal_distance)


def test_cylinder_is_flat():
    x = np.linspace(0, 2, 101)
    c = Geometry.revolution(x, np.ones_like(x), 1.0).curvature_data()
    assert abs(c.H0) < 1e-12 and abs(c.Hdot0) < 1e-12


def test_jacobi_operator():
    # circle: Delta cos + 1 * cos = 0 ; equator of S^2: constants map to themselves
    th = 2 * np.pi * np.arange(64) / 64
    assert np.max(np.abs(jacobi_apply(Geometry.disk(1.0), np.cos(th)))) < 1e-12
    assert jacobi_apply(Geometry.sphere_cap(2, 0.0), 0.3) == pytest.approx(0.3)
    out = jacobi_apply(Geometry.disk(2.0), np.cos(2 * th))
    assert np.allclose(out, (-1.0 + 0.25) * np.cos(2 * th))


def test_load_geometry(tmp_path):
    p = tmp_path / "g.toml"
    p.write_text('kind = "annulus"\nR_in = 1.0\nR_out = 2.0\nside = "outer"\n')
    g = load_geometry(p)
    assert g == Geometry.annulus(1.0, 2.0, "outer")
    d = g.describe()
    assert set(d) >= {"H0", "Hdot0", "A_norm_sq", "Ric_nn", "focal_distance"}


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.0, 0.95))
def test_disk_area_element_property(R, frac):
    g = Geometry.disk(R)
    t = frac * R
    assert g.area_element(t) == pytest.approx(1 - t / R)
    assert g.mean_curvature(t) == pytest.approx(1 / (R - t))
