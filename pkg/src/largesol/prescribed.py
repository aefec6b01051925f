"""Minimizers of Per(F) - lambda |F| over F inside a domain, and Cheeger sets.

Two backends:

* analytic, for convex polygons and disks: the minimizer at lambda >= lambda_K
  is the opening of the domain by a disk of radius 1/lambda, empty below;
* mincut, for raster domains: a Cauchy-Crofton graph cut (see ``maxflow``),
  returning the maximal minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyErosionError, InvalidDomainError
from .geometry import (ConvexPolygon, DiskDomain, RasterDomain, RoundedRegion, erode, opening)
from .maxflow import CutGraph, crofton_perimeter

Region = Union[None, RoundedRegion, DiskDomain, np.ndarray]


@dataclass
class LevelSet:
    lam: float
    region: Region
    energy: float
    perimeter: float
    area: float
    backend: str

    @property
    def empty(self) -> bool:
        if self.region is None:
            return True
        if isinstance(self.region, np.ndarray):
            return not self.region.any()
        return False

    def contains(self, x, y) -> np.ndarray:
        """Point membership (analytic regions only)."""
        if self.region is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
        if isinstance(self.region, np.ndarray):
            raise TypeError("raster level sets have no point membership; use .region")
        return self.region.contains(x, y)

    def mask_on(self, raster: RasterDomain) -> np.ndarray:
        if isinstance(self.region, np.ndarray):
            return self.region
        X, Y = raster.centers()
        return self.contains(X, Y) & raster.mask

    def report(self) -> dict:
        return {"lambda": self.lam, "energy": self.energy, "perimeter": self.perimeter,
                "area": self.area, "backend": self.backend}


@dataclass
class CheegerResult:
    lambda_K: float
    cheeger_set: Region
    ratio_check: float
    perimeter: float
    area: float
    backend: str


# --------------------------------------------------------------------------
# analytic backend

def _eroded_area(poly: ConvexPolygon, r: float) -> float:
    try:
        return erode(poly, r).area
    except EmptyErosionError:
        return 0.0


def cheeger_convex(domain) -> CheegerResult:
    """Cheeger constant of a convex polygon or disk.

    The Cheeger set is the opening by radius r* with |domain eroded by r*| = pi r*^2,
    and lambda_K = 1/r*.
    """
    if isinstance(domain, DiskDomain):
        lam = 2.0 / domain.radius
        return CheegerResult(lam, domain, domain.perimeter / domain.area,
                             domain.perimeter, domain.area, "analytic")
    rin = domain.inradius
    g = lambda r: _eroded_area(domain, r) - math.pi * r * r  # noqa: E731
    if not (g(0.0) > 0 > g(rin)):
        raise InvalidDomainError("Cheeger radius not bracketed by [0, inradius]",
                                 where="prescribed_curvature.cheeger")
    r_star = brentq(g, 0.0, rin, xtol=1e-15 * domain.scale, rtol=4 * np.finfo(float).eps, maxiter=200)
    region = RoundedRegion(erode(domain, r_star), r_star)
    per, area = region.perimeter, region.area
    return CheegerResult(1.0 / r_star, region, per / area, per, area, "analytic")


def solve_plambda_convex(domain, lam: float, lambda_K: float | None = None) -> LevelSet:
    if not lam > 0:
        raise InvalidDomainError("lambda must be positive", where="prescribed_curvature.solve_plambda_convex")
    if lambda_K is None:
        lambda_K = cheeger_convex(domain).lambda_K
    if lam < lambda_K:
        return LevelSet(lam, None, 0.0, 0.0, 0.0, "analytic")
    region = opening(domain, 1.0 / lam)
    per, area = region.perimeter, region.area
    energy = per - lam * area
    if 0 < energy <= 1e-12 * per:
        # only at lambda == lambda_K, where the Cheeger set ties with the empty set
        energy = 0.0
    return LevelSet(lam, region, energy, per, area, "analytic")


# --------------------------------------------------------------------------
# min-cut backend

def _raster_level(raster: RasterDomain, lam: float, mask: np.ndarray, size: int) -> LevelSet:
    per = crofton_perimeter(mask, raster.h, size)
    area = float(mask.sum()) * raster.h ** 2
    return LevelSet(lam, mask, per - lam * area, per, area, "mincut")


def solve_plambda_mincut(raster: RasterDomain, lam: float, graph: Optional[CutGraph] = None,
                         size: int = 16) -> LevelSet:
    """Maximal minimizer on a raster.  Pass ``graph`` to warm-start an increasing sweep."""
    if not lam > 0:
        raise InvalidDomainError("lambda must be positive", where="prescribed_curvature.solve_plambda_mincut")
    if graph is None:
        graph = CutGraph(raster, size=size)
    mask = graph.solve(lam)
    return _raster_level(raster, lam, mask, graph.size)


def cheeger_raster(raster: RasterDomain, rel_tol: float = 1e-3, size: int = 16) -> CheegerResult:
    """Smallest lambda whose maximal minimizer is nonempty, by bisection.

    Probes warm-start from the flow state of the largest lambda known to give
    the empty set, since the source capacities only grow from there.
    """
    base = CutGraph(raster, size=size)
    hi = crofton_perimeter(raster.mask, raster.h, size) / raster.area
    hi_graph = base.copy()
    hi_mask = hi_graph.solve(hi)
    while not hi_mask.any():
        hi *= 1.01
        hi_mask = hi_graph.solve(hi)
    lo = 0.5 * hi
    lo_graph = base
    while True:
        probe = lo_graph.copy()
        if not probe.solve(lo).any():
            lo_graph = probe
            break
        hi, hi_mask = lo, probe.current_mask()
        lo *= 0.5
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        probe = lo_graph.copy()
        m = probe.solve(mid)
        if m.any():
            hi, hi_mask = mid, m
        else:
            lo, lo_graph = mid, probe
    level = _raster_level(raster, hi, hi_mask, size)
    return CheegerResult(hi, hi_mask, level.perimeter / level.area, level.perimeter, level.area, "mincut")


def cheeger(domain, **kw) -> CheegerResult:
    if isinstance(domain, RasterDomain):
        return cheeger_raster(domain, **kw)
    return cheeger_convex(domain)
