import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from largesol.geometry import ConvexPolygon, DiskDomain, erode, rasterize
from largesol.maxflow import CutGraph
from largesol.prescribed import cheeger, solve_plambda_convex, solve_plambda_mincut

LAMBDA_SQUARE = 2 + math.sqrt(math.pi)


def test_disk_polygon_full_at_three():
    poly = DiskDomain((0, 0), 1.0).to_polygon(720)
    lev = solve_plambda_convex(poly, 3.0)
    assert lev.energy == pytest.approx(-math.pi, rel=1e-3)
    # opening by 1/3 only shaves the 720 vertices; matches the Steiner formula
    assert lev.area == pytest.approx(poly.area, rel=1e-5)
    assert lev.area < poly.area


def test_square_below_cheeger_is_empty(unit_square):
    lev = solve_plambda_convex(unit_square, 1.0)
    assert lev.empty and lev.energy == 0.0 and lev.area == 0.0


def test_square_at_four(unit_square):
    lev = solve_plambda_convex(unit_square, 4.0)
    assert lev.region.radius == pytest.approx(0.25)
    per = 2 + math.pi / 2
    area = 1 - (4 - math.pi) / 16
    assert lev.energy == pytest.approx(per - 4 * area, abs=1e-12)
    assert lev.energy == pytest.approx(-0.2146018, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 12), lam_factor=st.floats(0.2, 20.0))
def test_energy_nonpositive_and_empty_below(n, lam_factor):
    poly = ConvexPolygon.regular(n, 1.0)
    lam_K = cheeger(poly).lambda_K
    lam = lam_factor * lam_K
    lev = solve_plambda_convex(poly, lam, lambda_K=lam_K)
    assert lev.energy <= 0.0
    if lam < lam_K:
        assert lev.empty


def test_cheeger_disk(unit_disk):
    res = cheeger(unit_disk)
    assert res.lambda_K == 2.0
    assert res.cheeger_set is unit_disk
    assert res.ratio_check == pytest.approx(2.0)


def test_cheeger_square(unit_square):
    res = cheeger(unit_square)
    assert res.lambda_K == pytest.approx(LAMBDA_SQUARE, abs=1e-8)
    assert res.cheeger_set.radius == pytest.approx(1 / LAMBDA_SQUARE, abs=1e-9)
    assert abs(res.ratio_check - res.lambda_K) < 1e-8
    # independent oracle: (1 - 2r)^2 = pi r^2
    r_star = 1 / (2 + math.sqrt(math.pi))
    assert (1 - 2 * r_star) ** 2 == pytest.approx(math.pi * r_star ** 2)


def test_cheeger_scaling():
    big = ConvexPolygon.rectangle(0, 0, 2, 2)
    assert cheeger(big).lambda_K == pytest.approx(LAMBDA_SQUARE / 2, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 10), scale=st.floats(0.3, 3.0))
def test_cheeger_certificate(n, scale):
    poly = ConvexPolygon.regular(n, scale)
    res = cheeger(poly)
    assert abs(res.ratio_check - res.lambda_K) < 1e-8 * max(1.0, res.lambda_K)
    r = 1 / res.lambda_K
    assert erode(poly, r).area == pytest.approx(math.pi * r * r, rel=1e-9)
    # K inside the domain: eroded core lies within the polygon eroded by r
    assert np.all(poly.contains(*res.cheeger_set.core.vertices.T, tol=1e-12))


def test_cheeger_raster_transition(unit_square):
    res = cheeger(rasterize(unit_square, 1 / 128))
    assert res.lambda_K == pytest.approx(LAMBDA_SQUARE, rel=0.02)
    assert res.ratio_check == pytest.approx(res.lambda_K, rel=2e-3)
    assert res.cheeger_set.any()


def test_disk_calibrable_on_grid(unit_disk):
    for lam in np.linspace(0.2, 1.99, 10):
        assert solve_plambda_convex(unit_disk, lam).empty
    for lam in np.linspace(2.0, 30.0, 10):
        lev = solve_plambda_convex(unit_disk, lam)
        assert lev.region is unit_disk


def test_mincut_disk_examples(unit_disk):
    r = rasterize(unit_disk, 1 / 256)
    g = CutGraph(r)
    assert not g.solve(1.5).any()
    m = g.solve(3.0)
    sym = np.logical_xor(m, r.mask).sum() * r.h ** 2
    assert sym <= 0.02 * math.pi


def test_backend_agreement_square(unit_square):
    h = 1 / 512
    r = rasterize(unit_square, h)
    g = CutGraph(r)
    for lam in (4.0, 6.0, 10.0):
        lev = solve_plambda_mincut(r, lam, graph=g)
        exact = solve_plambda_convex(unit_square, lam)
        sym = np.logical_xor(lev.region, exact.mask_on(r)).sum() * h * h
        assert sym <= 0.03
        if lam == 6.0:
            assert lev.area == pytest.approx(1 - (4 - math.pi) / 36, rel=0.02)
