"""Planar convex domains: exact polygons and disks, and their rasterizations.

Polygons are stored counter-clockwise.  Erosion by a disk is the intersection
of the inward-translated edge half-planes; openings (erosion followed by
dilation by the same disk) are never built explicitly, only measured through
the Steiner formula and tested for membership through the distance to the
eroded core.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from .errors import EmptyErosionError, InvalidDomainError, InvalidResolutionError

INRADIUS_TOL = 1e-10


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _shoelace(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clean(pts: np.ndarray, scale: float) -> np.ndarray:
    """Drop repeated and collinear vertices of a convex ring."""
    tol = 1e-12 * scale
    for _ in range(3):
        if len(pts) < 3:
            return pts
        d = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        pts = pts[d > tol]
        if len(pts) < 3:
            return pts
        e_in = pts - np.roll(pts, 1, axis=0)
        e_out = np.roll(pts, -1, axis=0) - pts
        keep = _cross(e_in, e_out) > tol * tol
        if keep.all():
            break
        pts = pts[keep]
    return pts


def _clip_halfplane(pts: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex ring against {x : normal.x >= offset}."""
    s = pts @ normal - offset
    inside = s >= 0.0
    if inside.all():
        return pts
    if not inside.any():
        return pts[:0]
    nxt = np.roll(pts, -1, axis=0)
    s_next = np.roll(s, -1)
    crossing = inside != np.roll(inside, -1)
    ic = np.nonzero(crossing)[0]
    t = s[ic] / (s[ic] - s_next[ic])
    cut = pts[ic] + t[:, None] * (nxt[ic] - pts[ic])
    ik = np.nonzero(inside)[0]
    keys = np.concatenate([2 * ik, 2 * ic + 1])
    allpts = np.concatenate([pts[ik], cut])
    return allpts[np.argsort(keys, kind="stable")]


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidDomainError("polygon needs at least 3 two-dimensional vertices",
                                     where="domain_geometry.ConvexPolygon")
        if not np.all(np.isfinite(v)):
            raise InvalidDomainError("non-finite vertex coordinates", where="domain_geometry.ConvexPolygon")
        edges = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(edges, axis=1)
        if np.any(lengths <= 0):
            raise InvalidDomainError("repeated vertices", where="domain_geometry.ConvexPolygon")
        turns = _cross(edges, np.roll(edges, -1, axis=0))
        if _shoelace(v) <= 0 or np.any(turns <= 0):
            raise InvalidDomainError(
                "vertices must be counter-clockwise and strictly convex (zero-area or reflex input)",
                where="domain_geometry.ConvexPolygon")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def regular(cls, n: int, radius: float = 1.0, center=(0.0, 0.0), side: float | None = None):
        """Regular n-gon inscribed in the circle of given radius (or with given side)."""
        if side is not None:
            radius = side / (2.0 * math.sin(math.pi / n))
        t = 2.0 * math.pi * np.arange(n) / n
        pts = np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
        return cls(pts)

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float):
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def inward_normals(self) -> np.ndarray:
        e = self.edges
        n = np.column_stack([-e[:, 1], e[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def offsets(self) -> np.ndarray:
        # the polygon is {x : n_i . x >= c_i}
        return np.einsum("ij,ij->i", self.inward_normals, self.vertices)

    @cached_property
    def perimeter(self) -> float:
        return float(np.linalg.norm(self.edges, axis=1).sum())

    @cached_property
    def area(self) -> float:
        return _shoelace(self.vertices)

    @cached_property
    def scale(self) -> float:
        return float(np.ptp(self.vertices, axis=0).max())

    @cached_property
    def inradius(self) -> float:
        return _inradius(self)

    @cached_property
    def circumradius(self) -> float:
        return min_enclosing_circle(self.vertices)[1]

    @cached_property
    def bounds(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def contains(self, x, y, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for nrm, c in zip(self.inward_normals, self.offsets):
            ok &= nrm[0] * x + nrm[1] * y >= c - tol
        return ok

    def distance(self, x, y) -> np.ndarray:
        """Euclidean distance from points to the polygon (0 inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        px = np.broadcast_to(x, shape).ravel()
        py = np.broadcast_to(y, shape).ravel()
        out = np.zeros(px.size)
        a = self.vertices
        e = self.edges
        elen2 = np.einsum("ij,ij->i", e, e)
        chunk = max(1, 4_000_000 // len(a))
        for s in range(0, px.size, chunk):
            qx = px[s:s + chunk, None]
            qy = py[s:s + chunk, None]
            t = ((qx - a[:, 0]) * e[:, 0] + (qy - a[:, 1]) * e[:, 1]) / elen2
            np.clip(t, 0.0, 1.0, out=t)
            dx = qx - (a[:, 0] + t * e[:, 0])
            dy = qy - (a[:, 1] + t * e[:, 1])
            out[s:s + chunk] = np.sqrt((dx * dx + dy * dy).min(axis=1))
        inside = self.contains(px, py)
        out[inside] = 0.0
        return out.reshape(shape)

    def scaled(self, factor: float, about=(0.0, 0.0)) -> "ConvexPolygon":
        c = np.asarray(about, dtype=float)
        return ConvexPolygon(c + factor * (self.vertices - c))

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


@dataclass(frozen=True)
class DiskDomain:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidDomainError("disk radius must be positive", where="domain_geometry.DiskDomain")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def inradius(self) -> float:
        return self.radius

    @property
    def circumradius(self) -> float:
        return self.radius

    @property
    def bounds(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cy - r, cx + r, cy + r

    def contains(self, x, y, tol: float = 0.0) -> np.ndarray:
        cx, cy = self.center
        return np.hypot(np.asarray(x) - cx, np.asarray(y) - cy) <= self.radius + tol

    def to_polygon(self, n: int = 720) -> ConvexPolygon:
        return ConvexPolygon.regular(n, self.radius, self.center)


Domain = Union[ConvexPolygon, DiskDomain]


@dataclass(eq=False)
class RasterDomain:
    """Binary mask on a uniform grid.

    ``mask[iy, ix]`` is the cell whose center is
    ``(origin[0] + (ix + 0.5) h, origin[1] + (iy + 0.5) h)``.
    """

    mask: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.mask = np.ascontiguousarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise InvalidDomainError("raster mask must be 2-D", where="domain_geometry.RasterDomain")
        if not self.h > 0:
            raise InvalidResolutionError("spacing must be positive", where="domain_geometry.RasterDomain")
        if not self.mask.any():
            raise InvalidResolutionError("raster mask is empty", where="domain_geometry.RasterDomain")
        _, ncomp = ndimage.label(self.mask)  # default structure is 4-connectivity
        if ncomp != 1:
            raise InvalidDomainError(f"raster mask has {ncomp} 4-connected components",
                                     where="domain_geometry.RasterDomain")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def shape(self):
        return self.mask.shape

    @property
    def ny(self) -> int:
        return self.mask.shape[0]

    @property
    def nx(self) -> int:
        return self.mask.shape[1]

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def area(self) -> float:
        return self.count * self.h * self.h

    def centers(self):
        """Cell-center coordinate grids ``(X, Y)`` of shape ``mask.shape``."""
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    def cell_of(self, x: float, y: float):
        """(iy, ix) of the cell containing the point."""
        ix = int(math.floor((x - self.origin[0]) / self.h))
        iy = int(math.floor((y - self.origin[1]) / self.h))
        return iy, ix


@dataclass(frozen=True, eq=False)
class RoundedRegion:
    """Opening ``(core - B_r) + B_r`` of a convex polygon, stored as the eroded core."""

    core: ConvexPolygon
    radius: float

    @property
    def perimeter(self) -> float:
        return self.core.perimeter + 2.0 * math.pi * self.radius

    @property
    def area(self) -> float:
        return self.core.area + self.radius * self.core.perimeter + math.pi * self.radius ** 2

    def contains(self, x, y) -> np.ndarray:
        return self.core.distance(x, y) <= self.radius * (1.0 + 1e-12)


# --------------------------------------------------------------------------
# operations

def polygon_measures(poly: ConvexPolygon):
    """(perimeter, area, inradius, circumradius)."""
    if isinstance(poly, DiskDomain):
        return poly.perimeter, poly.area, poly.inradius, poly.circumradius
    return poly.perimeter, poly.area, poly.inradius, poly.circumradius


def _erode_points(poly: ConvexPolygon, r: float) -> np.ndarray:
    pts = poly.vertices
    for nrm, c in zip(poly.inward_normals, poly.offsets):
        pts = _clip_halfplane(pts, nrm, c + r)
        if len(pts) == 0:
            break
    return pts


def _inradius(poly: ConvexPolygon) -> float:
    # bisection on feasibility of the offset half-planes
    lo = 0.0
    hi = 0.5 * poly.scale
    while len(_erode_points(poly, hi)) > 0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > INRADIUS_TOL:
        mid = 0.5 * (lo + hi)
        if len(_erode_points(poly, mid)) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def erode(poly: ConvexPolygon, r: float) -> ConvexPolygon:
    """Inward offset of every edge line by ``r``; redundant edges drop out."""
    if r < 0:
        raise InvalidDomainError("erosion radius must be >= 0", where="domain_geometry.erode")
    if r == 0:
        return poly
    pts = _clean(_erode_points(poly, r), poly.scale)
    if len(pts) < 3 or r >= poly.inradius:
        raise EmptyErosionError(f"erosion by r={r!r} is empty (inradius {poly.inradius:.12g})",
                                where="domain_geometry.erode")
    try:
        return ConvexPolygon(pts)
    except InvalidDomainError as exc:
        raise EmptyErosionError(f"erosion by r={r!r} degenerates: {exc}", where="domain_geometry.erode")


def opening(poly: Domain, r: float):
    """The opening by a disk of radius r, as a RoundedRegion (disks map to themselves)."""
    if isinstance(poly, DiskDomain):
        if r > poly.radius:
            raise EmptyErosionError("opening radius exceeds disk radius", where="domain_geometry.opening")
        return poly
    return RoundedRegion(erode(poly, r), r)


def opening_measures(poly: Domain, r: float):
    """(perimeter, area) of the opening by a disk of radius ``r`` (Steiner formula)."""
    if isinstance(poly, DiskDomain):
        if r > poly.radius:
            raise EmptyErosionError("opening radius exceeds disk radius",
                                    where="domain_geometry.opening_measures")
        return poly.perimeter, poly.area
    region = opening(poly, r)
    return region.perimeter, region.area


def rasterize(domain: Domain, h: float, pad: int = 0) -> RasterDomain:
    """Cell-center membership rasterization on a grid aligned with the bounding box."""
    if not h > 0:
        raise InvalidResolutionError("spacing must be positive", where="domain_geometry.rasterize")
    x0, y0, x1, y1 = domain.bounds
    nx = int(math.ceil((x1 - x0) / h - 1e-9)) + 2 * pad
    ny = int(math.ceil((y1 - y0) / h - 1e-9)) + 2 * pad
    origin = (x0 - pad * h, y0 - pad * h)
    xs = origin[0] + (np.arange(nx) + 0.5) * h
    ys = origin[1] + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xs, ys)
    mask = domain.contains(X, Y)
    if not mask.any():
        raise InvalidResolutionError(f"h={h} is too coarse: no cell center inside the domain",
                                     where="domain_geometry.rasterize")
    return RasterDomain(mask, h, origin)


def min_enclosing_circle(points: np.ndarray):
    """Welzl-style incremental minimum enclosing circle -> (center, radius)."""
    pts = np.asarray(points, dtype=float)
    rng = np.random.default_rng(0)
    pts = pts[rng.permutation(len(pts))]

    def circle2(a, b):
        c = 0.5 * (a + b)
        return c, float(np.linalg.norm(a - c))

    def circle3(a, b, c):
        d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-300:
            return None
        a2, b2, c2 = a @ a, b @ b, c @ c
        ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
        uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
        ctr = np.array([ux, uy])
        return ctr, float(np.linalg.norm(a - ctr))

    def inside(circ, p):
        return np.linalg.norm(p - circ[0]) <= circ[1] * (1 + 1e-12) + 1e-15

    circ = (pts[0], 0.0)
    for i in range(1, len(pts)):
        if inside(circ, pts[i]):
            continue
        circ = (pts[i], 0.0)
        for j in range(i):
            if inside(circ, pts[j]):
                continue
            circ = circle2(pts[i], pts[j])
            for k in range(j):
                if inside(circ, pts[k]):
                    continue
                c3 = circle3(pts[i], pts[j], pts[k])
                if c3 is not None:
                    circ = c3
    return circ


# --------------------------------------------------------------------------
# file formats

def load_polygon(path) -> ConvexPolygon:
    data = json.loads(Path(path).read_text())
    if "vertices" not in data:
        raise InvalidDomainError(f"{path}: missing 'vertices'", where="domain_geometry.load_polygon")
    return ConvexPolygon(data["vertices"])


def save_polygon(poly: ConvexPolygon, path) -> None:
    Path(path).write_text(json.dumps(poly.to_json()))


def sidecar_path(pgm_path) -> Path:
    return Path(pgm_path).with_suffix(".json")


def write_pgm(mask: np.ndarray, path, binary: bool = True) -> None:
    """Write a boolean mask as PGM (255 inside); the first image row is the top (largest y)."""
    img = np.where(np.asarray(mask)[::-1], 255, 0).astype(np.uint8)
    ny, nx = img.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{nx} {ny}\n255\n".encode())
            fh.write(img.tobytes())
        else:
            fh.write(f"P2\n{nx} {ny}\n255\n".encode())
            for row in img:
                fh.write((" ".join(map(str, row)) + "\n").encode())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval, with '#' comments allowed
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode())
    magic, nx, ny, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == "P5":
        if maxval > 255:
            raise InvalidDomainError("16-bit PGM not supported", where="domain_geometry.read_pgm")
        data = np.frombuffer(raw[pos + 1:pos + 1 + nx * ny], dtype=np.uint8)
    elif magic == "P2":
        data = np.array(raw[pos:].split(), dtype=np.int64)[: nx * ny]
    else:
        raise InvalidDomainError(f"{path}: not a PGM file ({magic})", where="domain_geometry.read_pgm")
    if data.size != nx * ny:
        raise InvalidDomainError(f"{path}: truncated PGM data", where="domain_geometry.read_pgm")
    img = data.reshape(ny, nx)
    return (img > maxval // 2)[::-1].copy()


def save_raster(raster: RasterDomain, path, extra: dict | None = None, binary: bool = True) -> None:
    write_pgm(raster.mask, path, binary=binary)
    meta = {"h": raster.h, "origin": list(raster.origin)}
    if extra:
        meta.update(extra)
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_raster(path) -> RasterDomain:
    mask = read_pgm(path)
    meta = json.loads(sidecar_path(path).read_text())
    return RasterDomain(mask, float(meta["h"]), tuple(meta.get("origin", (0.0, 0.0))))
