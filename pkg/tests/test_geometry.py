import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from largesol.errors import EmptyErosionError, InvalidDomainError, InvalidResolutionError
from largesol.geometry import (ConvexPolygon, DiskDomain, RasterDomain, erode, load_polygon, load_raster,
                               opening, opening_measures, polygon_measures, rasterize, save_polygon,
                               save_raster)

TRI = ConvexPolygon([(0, 0), (1, 0), (0, 1)])


def test_square_measures(unit_square):
    per, area, rin, rc = polygon_measures(unit_square)
    assert per == pytest.approx(4.0, abs=1e-12)
    assert area == pytest.approx(1.0, abs=1e-12)
    assert rin == pytest.approx(0.5, abs=1e-9)
    assert rc == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


def test_hexagon_measures():
    hexagon = ConvexPolygon.regular(6, side=1.0)
    per, area, rin, rc = polygon_measures(hexagon)
    assert per == pytest.approx(6.0)
    assert area == pytest.approx(3 * math.sqrt(3) / 2)
    assert rin == pytest.approx(math.sqrt(3) / 2, abs=1e-9)
    assert rc == pytest.approx(1.0)


def test_triangle_measures():
    per, area, rin, rc = polygon_measures(TRI)
    assert per == pytest.approx(2 + math.sqrt(2))
    assert area == pytest.approx(0.5)
    # incircle radius = area / semiperimeter
    assert rin == pytest.approx(area / (per / 2), abs=1e-9)
    assert rin == pytest.approx((2 - math.sqrt(2)) / 2, abs=1e-9)
    assert rc == pytest.approx(math.sqrt(2) / 2)


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 0), (2, 0)],                 # zero area
    [(0, 0), (0, 1), (1, 1), (1, 0)],         # clockwise
    [(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)],  # reflex vertex
    [(0, 0), (1, 0)],
])
def test_invalid_polygons(verts):
    with pytest.raises(InvalidDomainError):
        ConvexPolygon(verts)


def test_erode_square(unit_square):
    core = erode(unit_square, 0.25)
    np.testing.assert_allclose(sorted(map(tuple, core.vertices)),
                               sorted([(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)]), atol=1e-12)
    np.testing.assert_allclose(erode(unit_square, 0.0).vertices, unit_square.vertices)


def test_erode_triangle_matches_sampled_distance():
    core = erode(TRI, 0.1)
    assert core.inradius == pytest.approx((2 - math.sqrt(2)) / 2 - 0.1, abs=1e-9)
    # oracle: points at distance >= 0.1 from the boundary of the triangle
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, (20000, 2))
    x, y = pts.T
    dist = np.minimum.reduce([x, y, (1 - x - y) / math.sqrt(2)])
    in_core = core.contains(x, y, tol=1e-12)
    far = dist >= 0.1 + 1e-9
    near = dist < 0.1 - 1e-9
    assert np.all(in_core[far])
    assert not np.any(in_core[near])


def test_erode_too_far(unit_square):
    with pytest.raises(EmptyErosionError):
        erode(unit_square, 0.5)
    with pytest.raises(EmptyErosionError):
        erode(unit_square, 0.7)


def test_opening_measures_square(unit_square):
    per, area = opening_measures(unit_square, 0.25)
    assert per == pytest.approx(2 + math.pi / 2, abs=1e-12)
    assert area == pytest.approx(1 - (4 - math.pi) * 0.0625, abs=1e-12)
    assert opening_measures(unit_square, 0.0) == pytest.approx((4.0, 1.0))


def test_opening_area_matches_fine_raster(unit_square):
    region = opening(unit_square, 0.25)
    h = 1 / 1024
    xs = (np.arange(1024) + 0.5) * h
    X, Y = np.meshgrid(xs, xs)
    raster_area = region.contains(X, Y).sum() * h * h
    assert raster_area == pytest.approx(region.area, abs=4 * h * region.perimeter * h + 1e-4)


def test_disk_polygon_opening_invariant():
    poly = DiskDomain((0, 0), 1.0).to_polygon(720)
    for r in (0.05, 1 / 3, 0.49):
        per, area = opening_measures(poly, r)
        assert per == pytest.approx(2 * math.pi, rel=1e-3)
        assert area == pytest.approx(math.pi, rel=1e-3)


def test_disk_opening_is_exact(unit_disk):
    assert opening_measures(unit_disk, 0.3) == (2 * math.pi, math.pi)
    assert opening(unit_disk, 0.3) is unit_disk


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 9), a=st.floats(0.0, 0.45), b=st.floats(0.0, 0.45),
       seed=st.integers(0, 10_000))
def test_erosion_semigroup(n, a, b, seed):
    poly = ConvexPolygon.regular(n, 1.0 + 0.1 * (seed % 7))
    rin = poly.inradius
    a, b = a * rin, b * rin
    if a + b >= 0.98 * rin:
        return
    twice = erode(erode(poly, a), b)
    once = erode(poly, a + b)
    assert twice.area == pytest.approx(once.area, abs=1e-9)
    # same vertex set up to ordering
    d = np.linalg.norm(twice.vertices[:, None, :] - once.vertices[None, :, :], axis=2)
    assert d.min(axis=1).max() < 1e-9


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 10), rs=st.lists(st.floats(0.0, 0.95), min_size=2, max_size=5))
def test_steiner_monotone(n, rs):
    poly = ConvexPolygon.regular(n, 1.0)
    rs = sorted(r * poly.inradius for r in rs)
    meas = [opening_measures(poly, r) for r in rs]
    for (p0, a0), (p1, a1) in zip(meas, meas[1:]):
        assert p1 <= p0 + 1e-12
        assert a1 <= a0 + 1e-12


def test_raster_square_exact(unit_square):
    r = rasterize(unit_square, 0.25)
    assert r.shape == (4, 4)
    assert r.mask.all()
    assert r.area == pytest.approx(1.0)
    assert r.origin == (0.0, 0.0)


def test_raster_area_convergence(unit_square):
    r = rasterize(unit_square, 1 / 512)
    assert 0.995 <= r.area <= 1.005
    r = rasterize(TRI, 1 / 256)
    assert r.area == pytest.approx(0.5, rel=0.01)


def test_raster_error_rate():
    poly = ConvexPolygon.regular(7, 1.0)
    errs = [abs(rasterize(poly, h).area - poly.area) for h in (1 / 32, 1 / 64, 1 / 128, 1 / 256)]
    # O(h) error: each error stays below C h Per with a fixed C
    for h, e in zip((1 / 32, 1 / 64, 1 / 128, 1 / 256), errs):
        assert e <= 0.5 * h * poly.perimeter


def test_raster_too_coarse():
    tiny = ConvexPolygon([(0.1, 0.1), (0.2, 0.1), (0.1, 0.2)])
    with pytest.raises(InvalidResolutionError):
        rasterize(tiny, 1.0)


def test_raster_validation():
    with pytest.raises(InvalidResolutionError):
        RasterDomain(np.zeros((3, 3), bool), 0.1)
    m = np.zeros((4, 4), bool)
    m[0, 0] = m[3, 3] = True
    with pytest.raises(InvalidDomainError):
        RasterDomain(m, 0.1)


def test_polygon_and_raster_roundtrip(tmp_path, unit_square):
    save_polygon(TRI, tmp_path / "tri.json")
    np.testing.assert_allclose(load_polygon(tmp_path / "tri.json").vertices, TRI.vertices)
    r = rasterize(TRI, 1 / 64)
    save_raster(r, tmp_path / "tri.pgm", extra={"note": 1})
    back = load_raster(tmp_path / "tri.pgm")
    assert np.array_equal(back.mask, r.mask)
    assert back.h == r.h and back.origin == r.origin
    save_raster(r, tmp_path / "tri_ascii.pgm", binary=False)
    assert np.array_equal(load_raster(tmp_path / "tri_ascii.pgm").mask, r.mask)
