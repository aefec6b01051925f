"""Absorption nonlinearities f, the Keller-Osserman test, and u = f^{-1}(v)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import quad
from scipy.spatial import ConvexHull

from .errors import (CompositionError, InvalidNonlinearityError, ParameterRangeError, RangeError)
from .geometry import ConvexPolygon, DiskDomain, RasterDomain, min_enclosing_circle


class Nonlinearity:
    """Continuous, strictly increasing f with inverse and primitive F."""

    kind = "abstract"

    def f(self, s):
        raise NotImplementedError

    def inv(self, t):
        raise NotImplementedError

    def F(self, s):
        raise NotImplementedError

    # values t for which inv(t) is defined
    def range(self):
        return 0.0, math.inf

    # largest s for which F is defined (tabulated data stops somewhere)
    s_max = math.inf

    def __call__(self, s):
        return self.f(s)

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"Nonlinearity({self.spec()})"


@dataclass(frozen=True, repr=False)
class Power(Nonlinearity):
    """f(s) = c s^q on s >= 0."""

    c: float = 1.0
    q: float = 1.0
    kind = "power"

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidNonlinearityError("power: c must be positive", where="absorption.Nonlinearity")
        if not (self.q > 0 and math.isfinite(self.q)):
            raise InvalidNonlinearityError(
                "power: q must be positive (constant f is rejected: the composed solution is not unique)",
                where="absorption.Nonlinearity")

    def f(self, s):
        return self.c * np.maximum(s, 0.0) ** self.q

    def inv(self, t):
        return (np.asarray(t, dtype=float) / self.c) ** (1.0 / self.q)

    def F(self, s):
        return self.c * np.maximum(s, 0.0) ** (self.q + 1) / (self.q + 1)

    def spec(self) -> str:
        return f"power:c={self.c:g},q={self.q:g}"


@dataclass(frozen=True, repr=False)
class Exponential(Nonlinearity):
    """f(s) = e^s with primitive normalized to F(s) = e^s (defined on all of R)."""

    kind = "exponential"

    def f(self, s):
        return np.exp(s)

    def inv(self, t):
        return np.log(t)

    def F(self, s):
        return np.exp(s)

    def spec(self) -> str:
        return "exp"


@dataclass(frozen=True, repr=False)
class Log1p(Nonlinearity):
    """f(s) = log(1 + s); fails Keller-Osserman for every p >= 1."""

    kind = "log1p"

    def f(self, s):
        return np.log1p(s)

    def inv(self, t):
        return np.expm1(t)

    def F(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 + s) * np.log1p(s) - s

    def spec(self) -> str:
        return "log1p"


@dataclass(frozen=True, repr=False, eq=False)
class Tabulated(Nonlinearity):
    """Piecewise-linear f through strictly increasing samples (s_i, f_i).

    F is the exact integral of the interpolant from s_0.
    """

    s: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    source: str = "table"
    kind = "tabulated"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise InvalidNonlinearityError("table needs at least two (s, f) rows", where="absorption.Nonlinearity")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(v))):
            raise InvalidNonlinearityError("table has non-finite entries", where="absorption.Nonlinearity")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(v) <= 0):
            raise InvalidNonlinearityError("table must be strictly increasing in both s and f",
                                           where="absorption.Nonlinearity")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(s)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def s_max(self):
        return float(self.s[-1])

    def range(self):
        return float(self.values[0]), float(self.values[-1])

    def _check(self, x, lo, hi, what):
        x = np.asarray(x, dtype=float)
        if np.any(x < lo) or np.any(x > hi):
            raise RangeError(f"{what} outside tabulated range [{lo:g}, {hi:g}]", where="absorption.Nonlinearity")
        return x

    def f(self, s):
        s = self._check(s, self.s[0], self.s[-1], "s")
        return np.interp(s, self.s, self.values)

    def inv(self, t):
        t = self._check(t, self.values[0], self.values[-1], "t")
        return np.interp(t, self.values, self.s)

    def F(self, s):
        s = self._check(s, self.s[0], self.s[-1], "s")
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, self.s.size - 2)
        ds = s - self.s[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.s[i + 1] - self.s[i])
        return self._cum[i] + self.values[i] * ds + 0.5 * slope * ds * ds

    def spec(self) -> str:
        return f"table:{self.source}"


def load_table(path) -> Tabulated:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError):
                if rows:
                    raise InvalidNonlinearityError(f"bad table row {rec!r}", where="absorption.Nonlinearity")
                continue  # header
    if not rows:
        raise InvalidNonlinearityError(f"no data rows in {path}", where="absorption.Nonlinearity")
    arr = np.array(rows)
    return Tabulated(arr[:, 0], arr[:, 1], source=str(path))


def parse_nonlinearity(text: str) -> Nonlinearity:
    """``power:c=1,q=2`` | ``exp`` | ``log1p`` | ``table:path.csv``"""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    if head == "power":
        params = {"c": 1.0, "q": 1.0}
        for item in filter(None, rest.split(",")):
            k, _, v = item.partition("=")
            k = k.strip()
            if k not in params:
                raise InvalidNonlinearityError(f"unknown power parameter {k!r}", where="absorption.parse")
            try:
                params[k] = float(v)
            except ValueError:
                raise InvalidNonlinearityError(f"bad value for {k}: {v!r}", where="absorption.parse")
        return Power(**params)
    if head in ("exp", "exponential"):
        return Exponential()
    if head == "log1p":
        return Log1p()
    if head == "table":
        if not rest:
            raise InvalidNonlinearityError("table: needs a CSV path", where="absorption.parse")
        return load_table(rest)
    if head in ("const", "constant"):
        raise InvalidNonlinearityError(
            "constant f is not accepted: with f constant the large solution is not unique",
            where="absorption.parse")
    raise InvalidNonlinearityError(f"unrecognized nonlinearity {text!r}", where="absorption.parse")


# --------------------------------------------------------------------------
# Keller-Osserman

@dataclass
class KOReport:
    p: float
    finite: bool
    value: Optional[float]
    divergence_evidence: List[dict]

    def summary(self) -> str:
        return f"finite ({self.value:.10g})" if self.finite else "infinite"


def _decade_integrals(g, decades: int = 8, start: float = 1.0):
    out = []
    for k in range(1, decades + 1):
        a, b = start * 10.0 ** (k - 1), start * 10.0 ** k
        val, _ = quad(g, a, b, limit=400, epsabs=0.0, epsrel=1e-12)
        out.append((b, val))
    return out


def keller_osserman(f: Nonlinearity, p: float, strict: bool = True, decades: int = 8) -> KOReport:
    """Test int_1^inf F(s)^{-1/p} ds < inf by decade quadrature.

    Finite when the decade increments shrink by a ratio below 0.9 over the
    last three decades (or vanish); the value then adds the geometric tail.
    """
    if strict and not 1.0 < p < 2.0:
        raise ParameterRangeError(f"p={p} outside (1, 2)", where="absorption.keller_osserman")
    if p <= 1.0:
        raise ParameterRangeError(f"p={p} must exceed 1", where="absorption.keller_osserman")
    if f.s_max < 10.0 ** decades:
        raise RangeError(f"tabulated f stops at s={f.s_max:g}; Keller-Osserman test needs s up to 1e{decades}",
                         where="absorption.keller_osserman")

    def g(s):
        with np.errstate(over="ignore"):
            F = float(f.F(s))
        return F ** (-1.0 / p) if F > 0 else math.inf

    incs = _decade_integrals(g, decades)
    vals = np.array([v for _, v in incs])
    total = float(vals.sum())
    evidence = []
    partial = 0.0
    for k, (M, v) in enumerate(incs):
        partial += v
        ratio = v / vals[k - 1] if k and vals[k - 1] > 0 else None
        evidence.append({"M": M, "partial": partial, "increment": v, "ratio": ratio})
    tail = vals[-4:]
    negligible = tail[-1] <= 1e-14 * max(total, 1e-300)
    ratios = [tail[i + 1] / tail[i] for i in range(3) if tail[i] > 0]
    finite = bool(negligible or (len(ratios) == 3 and max(ratios) < 0.9))
    value = None
    if finite:
        rho = ratios[-1] if ratios else 0.0
        value = total + (tail[-1] * rho / (1.0 - rho) if not negligible else 0.0)
    return KOReport(p, finite, value, evidence)


def check_h2(f: Nonlinearity, a: float, b: float, n: int = 10_000):
    """Lipschitz estimate of f^{-1} on [a, b]: max difference quotient on an n-point grid.

    Returns ``(estimate, ok)``; ok means f^{-1} is finite and strictly increasing there.
    """
    if not (0 < a < b):
        raise ParameterRangeError(f"need 0 < a < b, got [{a}, {b}]", where="absorption.check_h2")
    lo, hi = f.range()
    if a < lo or b > hi:
        raise RangeError(f"[{a:g}, {b:g}] not inside the range of f [{lo:g}, {hi:g}]", where="absorption.check_h2")
    t = np.linspace(a, b, n)
    s = f.inv(t)
    dq = np.diff(s) / np.diff(t)
    est = float(dq.max())
    ok = bool(np.all(np.isfinite(s)) and np.all(dq > 0) and math.isfinite(est))
    return est, ok


def large_solution(field, f: Nonlinearity) -> np.ndarray:
    """u = f^{-1}(v) on covered cells; uncovered cells stay +inf, outside cells 0."""
    v = field.v
    cov = field.covered
    vals = v[cov]
    if vals.size == 0:
        raise CompositionError("field has no covered cells", where="absorption.large_solution")
    lo, hi = f.range()
    bad = cov & ((v < lo) | (v > hi) | (v <= 0))
    if bad.any():
        iy, ix = map(int, np.argwhere(bad)[0])
        X, Y = field.raster.centers()
        raise CompositionError(
            f"v={v[iy, ix]:g} at cell ({iy}, {ix}) = ({X[iy, ix]:.6g}, {Y[iy, ix]:.6g}) "
            f"outside the range of f [{lo:g}, {hi:g}]", where="absorption.large_solution")
    a, b = float(vals.min()), float(vals.max())
    if b > a:
        _, ok = check_h2(f, a, b)
        if not ok:
            raise CompositionError(f"f^-1 is not increasing/Lipschitz on [{a:g}, {b:g}]",
                                   where="absorption.large_solution")
    u = np.where(field.raster.mask, np.inf, 0.0)
    u[cov] = f.inv(vals)
    return u


def ball_lower_bound(domain) -> float:
    """N / R_circ with N = 2: the constant curvature of the circumscribed disk."""
    if isinstance(domain, RasterDomain):
        X, Y = domain.centers()
        pts = np.column_stack([X[domain.mask], Y[domain.mask]])
        if len(pts) >= 3:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # collinear cells
                pass
        _, r = min_enclosing_circle(pts)
        return 2.0 / (r + domain.h / math.sqrt(2))
    if isinstance(domain, (ConvexPolygon, DiskDomain)):
        return 2.0 / domain.circumradius
    raise TypeError(f"unsupported domain {type(domain).__name__}")
