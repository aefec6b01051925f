"""Variational mean curvature H(x) = -inf{lambda : x in Omega_lambda} on a raster.

The infimum is taken over a finite lambda-grid, so the field is a step
function: each cell receives the smallest grid value whose level set holds
it.  That value overestimates the true -H by at most one grid ratio.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import CoverageError, InvalidInputError
from .geometry import ConvexPolygon, DiskDomain, RasterDomain, rasterize
from .maxflow import CutGraph, crofton_perimeter
from .prescribed import LevelSet, cheeger, solve_plambda_convex

WORKERS_ENV = "LARGESOL_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class LambdaGrid:
    values: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InvalidInputError("lambda grid must be a nonempty list", where="curvature_field.LambdaGrid")
        if not np.all(v > 0) or not np.all(np.isfinite(v)):
            raise InvalidInputError("lambda grid values must be positive and finite",
                                    where="curvature_field.LambdaGrid")
        if np.any(np.diff(v) <= 0):
            raise InvalidInputError("lambda grid must be strictly increasing", where="curvature_field.LambdaGrid")
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    @classmethod
    def geometric(cls, lambda_K: float, lambda_max: float, n: int = 64, eps: float = 1e-3,
                  extra: Sequence[float] = ()) -> "LambdaGrid":
        """``lambda_K (1 - eps)`` followed by ``n - 1`` geometric points from lambda_K to lambda_max.

        ``extra`` values are merged in, so identities can be checked at exact levels.
        """
        if not lambda_max > lambda_K:
            raise InvalidInputError(f"lambda_max={lambda_max} must exceed lambda_K={lambda_K}",
                                    where="curvature_field.LambdaGrid")
        if n < 2:
            raise InvalidInputError("grid needs at least 2 points", where="curvature_field.LambdaGrid")
        vals = np.concatenate([[lambda_K * (1 - eps)], np.geomspace(lambda_K, lambda_max, n - 1),
                               [x for x in extra if lambda_K * (1 - eps) < x <= lambda_max]])
        vals = np.unique(vals)
        keep = np.concatenate([[True], np.diff(vals) > 1e-12 * vals[1:]])
        return cls(tuple(vals[keep]))

    def __len__(self):
        return len(self.values)

    @property
    def lambda_max(self) -> float:
        return self.values[-1]

    @property
    def max_ratio(self) -> float:
        v = np.asarray(self.values)
        return float((v[1:] / v[:-1]).max()) if v.size > 1 else 1.0


@dataclass
class LevelFamily:
    grid: LambdaGrid
    sets: List[LevelSet]
    backend: str
    domain: object = None
    lambda_K: Optional[float] = None
    raster: Optional[RasterDomain] = None


def _as_raster(domain, h: Optional[float]) -> RasterDomain:
    if isinstance(domain, RasterDomain):
        return domain
    if h is None:
        raise InvalidInputError("spacing h is required for a non-raster domain", where="curvature_field.build_family")
    return rasterize(domain, h)


def build_family(domain, grid: LambdaGrid, backend: str = "analytic", h: Optional[float] = None,
                 workers: Optional[int] = None) -> LevelFamily:
    """Minimizers for every grid value.

    The analytic backend solves each lambda independently (thread pool over
    lambda).  The mincut backend sweeps lambda upward on one warm-started
    graph and then intersects each set with every larger-lambda set, so the
    family is nested even where the discrete solver is off by a pixel.
    """
    if backend == "analytic":
        if isinstance(domain, RasterDomain):
            raise InvalidInputError("analytic backend needs a polygon or disk domain",
                                    where="curvature_field.build_family")
        lam_K = cheeger(domain).lambda_K
        workers = workers or default_workers()
        solve = lambda lam: solve_plambda_convex(domain, lam, lambda_K=lam_K)  # noqa: E731
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                sets = list(pool.map(solve, grid.values))
        else:
            sets = [solve(lam) for lam in grid.values]
        raster = rasterize(domain, h) if h is not None else None
        return LevelFamily(grid, sets, backend, domain, lam_K, raster)

    if backend != "mincut":
        raise InvalidInputError(f"unknown backend {backend!r}", where="curvature_field.build_family")
    raster = _as_raster(domain, h)
    graph = CutGraph(raster)
    masks = []
    for lam in grid.values:
        masks.append(graph.solve(lam))
    for i in range(len(masks) - 2, -1, -1):
        masks[i] = masks[i] & masks[i + 1]
    sets = []
    for lam, m in zip(grid.values, masks):
        per = crofton_perimeter(m, raster.h)
        area = float(m.sum()) * raster.h ** 2
        sets.append(LevelSet(lam, m, per - lam * area, per, area, "mincut"))
    first = next((s.lam for s in sets if not s.empty), None)
    return LevelFamily(grid, sets, backend, domain, first, raster)


@dataclass
class CurvatureField:
    """v = -H on the raster cells.

    ``v`` is 0 outside the domain and +inf on domain cells that no level set
    of the family reaches (uncovered).
    """

    v: np.ndarray
    raster: RasterDomain
    grid: LambdaGrid
    lambda_K: float
    family: Optional[LevelFamily] = dc_field(default=None, repr=False)

    @property
    def H(self) -> np.ndarray:
        return -self.v

    @property
    def mask(self) -> np.ndarray:
        return self.raster.mask

    @property
    def h(self) -> float:
        return self.raster.h

    @property
    def origin(self):
        return self.raster.origin

    @property
    def covered(self) -> np.ndarray:
        return self.raster.mask & np.isfinite(self.v)

    @property
    def coverage(self) -> float:
        return float(self.covered.sum()) / self.raster.count

    @property
    def lambda_max(self) -> float:
        return self.grid.lambda_max

    def finite_values(self) -> np.ndarray:
        return self.v[self.covered]

    def value_at(self, x: float, y: float) -> float:
        iy, ix = self.raster.cell_of(x, y)
        return float(self.v[iy, ix])

    def integral(self, values: Optional[np.ndarray] = None, where: Optional[np.ndarray] = None) -> float:
        """Cell-sum integral over covered cells (pairwise summation, fixed order)."""
        vals = self.v if values is None else values
        sel = self.covered if where is None else (self.covered & where)
        return float(np.sum(vals[sel])) * self.h * self.h


def variational_mean_curvature(family: LevelFamily, raster: Optional[RasterDomain] = None) -> CurvatureField:
    if not family.sets:
        raise InvalidInputError("empty level family", where="curvature_field.variational_mean_curvature")
    raster = raster or family.raster
    if raster is None:
        raise InvalidInputError("a raster is required to assemble the field",
                                where="curvature_field.variational_mean_curvature")
    v = np.where(raster.mask, np.inf, 0.0)
    todo = raster.mask.copy()
    X, Y = raster.centers()
    for s in family.sets:
        if s.empty:
            continue
        if isinstance(s.region, np.ndarray):
            hit = todo & s.region
        else:
            iy, ix = np.nonzero(todo)
            inside = s.contains(X[iy, ix], Y[iy, ix])
            hit = np.zeros_like(todo)
            hit[iy[inside], ix[inside]] = True
        v[hit] = s.lam
        todo &= ~hit
        if not todo.any():
            break
    lam_K = family.lambda_K
    if lam_K is None:
        lam_K = float(np.min(v[raster.mask])) if np.isfinite(v[raster.mask]).any() else math.inf
    return CurvatureField(v, raster, family.grid, lam_K, family)


def _exact_perimeter(domain, raster: RasterDomain) -> float:
    if isinstance(domain, (ConvexPolygon, DiskDomain)):
        return domain.perimeter
    return crofton_perimeter(raster.mask, raster.h)


def corner_sum(poly: ConvexPolygon) -> float:
    """Sum of cot(theta_i / 2) over the interior angles of a convex polygon."""
    e = poly.edges
    prev = np.roll(e, 1, axis=0)
    cosang = -np.einsum("ij,ij->i", prev, e) / (np.linalg.norm(prev, axis=1) * np.linalg.norm(e, axis=1))
    theta = np.arccos(np.clip(cosang, -1.0, 1.0))
    return float(np.sum(1.0 / np.tan(theta / 2)))


def layer_cake_total(domain, lambda_K: Optional[float] = None) -> float:
    """int |H| from the distribution function, lambda_K |Omega| + int_{lambda_K}^inf |{v > lambda}|.

    For a polygon |Omega| - |Omega_lambda| = (T - pi) / lambda^2 with T the
    corner sum, so the tail integrates to (T - pi) / lambda_K.
    """
    if lambda_K is None:
        lambda_K = cheeger(domain).lambda_K
    if isinstance(domain, DiskDomain):
        return lambda_K * domain.area
    return lambda_K * domain.area + (corner_sum(domain) - math.pi) / lambda_K


def mass_identities(field: CurvatureField, domain=None, min_coverage: float = 0.99) -> dict:
    """Compare int |H| with Per(Omega) and int over Omega_lambda of H with -Per(Omega_lambda)."""
    cov = field.coverage
    if cov < min_coverage:
        raise CoverageError(f"coverage {cov:.4f} < {min_coverage}; raise lambda_max above {field.lambda_max:g}",
                            where="curvature_field.mass_identities")
    fam = field.family
    domain = domain if domain is not None else (fam.domain if fam else None)
    per = _exact_perimeter(domain, field.raster) if domain is not None else crofton_perimeter(
        field.raster.mask, field.h)
    total = field.integral()
    report = {
        "coverage": cov,
        "lambda_max": field.lambda_max,
        "int_abs_H": total,
        "perimeter": per,
        "rel_error": abs(total - per) / per,
        "levels": [],
    }
    if isinstance(domain, (ConvexPolygon, DiskDomain)):
        lc = layer_cake_total(domain, field.lambda_K if fam and fam.backend == "analytic" else None)
        report["layer_cake"] = lc
        report["layer_cake_error"] = abs(lc - per)
    if fam is not None:
        for s in fam.sets:
            if s.empty:
                continue
            integral = field.integral(where=field.v <= s.lam)
            report["levels"].append({
                "lambda": s.lam,
                "int_H": -integral,
                "minus_perimeter": -s.perimeter,
                "rel_error": abs(integral - s.perimeter) / s.perimeter,
            })
    return report


def tv_large_solution(domain, lambda_max: float, h: float, n: int = 64, backend: str = "analytic",
                      extra: Sequence[float] = (), workers: Optional[int] = None) -> CurvatureField:
    """cheeger -> geometric lambda-grid -> family -> field.  Returns v (the large solution of div(Dv/|Dv|) = v)."""
    if isinstance(domain, RasterDomain):
        raster = domain
        backend = "mincut"
    else:
        raster = rasterize(domain, h)
    lam_K = cheeger(raster if backend == "mincut" else domain).lambda_K
    grid = LambdaGrid.geometric(lam_K, lambda_max, n, extra=extra)
    fam = build_family(raster if backend == "mincut" else domain, grid, backend, workers=workers)
    fam.raster = raster
    return variational_mean_curvature(fam, raster)


# --------------------------------------------------------------------------
# field I/O

def write_field_csv(path, raster: RasterDomain, values: np.ndarray, name: str = "v") -> None:
    X, Y = raster.centers()
    m = raster.mask
    data = np.column_stack([X[m], Y[m], values[m]])
    with open(path, "w") as fh:
        fh.write(f"x,y,{name}\n")
        for x, y, val in data.tolist():
            fh.write(f"{x!r},{y!r},{val!r}\n")


def write_field_bin(path, raster: RasterDomain, values: np.ndarray, lambda_max: float, coverage: float,
                    extra: Optional[dict] = None) -> Path:
    """Row-major float64 dump plus a JSON header next to it; returns the header path."""
    path = Path(path)
    np.ascontiguousarray(values, dtype="<f8").tofile(path)
    header = {"nx": raster.nx, "ny": raster.ny, "h": raster.h, "origin": list(raster.origin),
              "lambda_max": lambda_max, "coverage": coverage}
    if extra:
        header.update(extra)
    hpath = path.with_suffix(".json")
    hpath.write_text(json.dumps(header, indent=2, sort_keys=True))
    return hpath


def read_field_bin(path):
    """-> (values, header)"""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    vals = np.fromfile(path, dtype="<f8").reshape(header["ny"], header["nx"])
    return vals, header
