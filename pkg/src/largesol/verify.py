"""End-to-end verification suites (disk, square, radial) against closed-form oracles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .absorption import Exponential, Log1p, Power, ball_lower_bound, keller_osserman, large_solution
from .errors import InvalidInputError
from .field import mass_identities, tv_large_solution, layer_cake_total
from .geometry import ConvexPolygon, DiskDomain, rasterize
from .prescribed import cheeger
from .radial import (PParams, RadialProblem, exp_bound, large_profile, limit_bounds, p_sweep,
                     psi_inv, w0, w0_residual)

SUITES = ("disk", "square", "radial", "all")
DEFAULT_H = 1.0 / 512
DEFAULT_PLIST = (1.5, 1.3, 1.2, 1.1, 1.05)


@dataclass
class Check:
    name: str
    expected: object
    computed: object
    tolerance: object
    passed: bool
    note: str = ""


@dataclass
class VerifyReport:
    suite: str
    checks: List[Check] = field(default_factory=list)
    settings: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, expected, computed, tolerance, passed, note=""):
        self.checks.append(Check(name, _plain(expected), _plain(computed), _plain(tolerance), bool(passed), note))

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "settings": self.settings,
                "checks": [asdict(c) for c in self.checks]}

    def lines(self) -> List[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: computed={c.computed} expected={c.expected} "
                f"tol={c.tolerance}" + (f"  ({c.note})" if c.note else "") for c in self.checks]


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    return x


def _unit_square() -> ConvexPolygon:
    return ConvexPolygon.rectangle(0.0, 0.0, 1.0, 1.0)


def verify_disk(report: VerifyReport, h: float = DEFAULT_H) -> None:
    disk = DiskDomain((0.0, 0.0), 1.0)
    fa = tv_large_solution(disk, 10.0, h, backend="analytic")
    va = fa.finite_values()
    dev = float(np.max(np.abs(va - 2.0)))
    report.add("disk analytic max|v - 2|", 0.0, dev, 1e-9, dev < 1e-9 and fa.coverage == 1.0)

    fm = tv_large_solution(disk, 10.0, h, backend="mincut")
    vm = fm.finite_values()
    frac = float(np.sum(np.abs(vm - 2.0) <= 0.05)) / fm.raster.count
    report.add("disk mincut |v-2|<=0.05 fraction", ">=0.98", frac, 0.98, frac >= 0.98)

    for name, fld in (("analytic", fa), ("mincut", fm)):
        mi = mass_identities(fld, disk)
        report.add(f"disk {name} int|H| vs 2pi", 2 * math.pi, mi["int_abs_H"], "2%", mi["rel_error"] <= 0.02)

    u = large_solution(fa, Power(1.0, 2.0))
    du = float(np.max(np.abs(u[fa.covered] - math.sqrt(2.0))))
    report.add("disk max|u - sqrt(2)| for f = s^2", 0.0, du, 1e-9, du < 1e-9)

    lb = ball_lower_bound(disk)
    report.add("disk ball lower bound <= min v", lb, float(va.min()), "<=", lb <= va.min() + 1e-12)


def verify_square(report: VerifyReport, h: float = DEFAULT_H) -> None:
    sq = _unit_square()
    exact_K = 2.0 + math.sqrt(math.pi)
    ca = cheeger(sq)
    report.add("square analytic lambda_K", exact_K, ca.lambda_K, 1e-8, abs(ca.lambda_K - exact_K) < 1e-8)
    cm = cheeger(rasterize(sq, h))
    rel = abs(cm.lambda_K - exact_K) / exact_K
    report.add("square mincut lambda_K", exact_K, cm.lambda_K, "2%", rel <= 0.02)

    lc = layer_cake_total(sq, ca.lambda_K)
    report.add("square layer-cake int|H| == 4", 4.0, lc, 1e-9, abs(lc - 4.0) < 1e-9)

    levels = (4.0, 6.0, 10.0)
    fa = tv_large_solution(sq, 100.0, h, backend="analytic", extra=levels)
    fm = tv_large_solution(sq, 100.0, h, backend="mincut", extra=levels)
    for name, fld in (("analytic", fa), ("mincut", fm)):
        mi = mass_identities(fld, sq)
        report.add(f"square {name} int|H| vs 4", 4.0, mi["int_abs_H"], "2%", mi["rel_error"] <= 0.02)
        for lev in mi["levels"]:
            if lev["lambda"] in levels:
                report.add(f"square {name} int_(Omega_{lev['lambda']:g}) H", lev["minus_perimeter"], lev["int_H"],
                           "2%", lev["rel_error"] <= 0.02)

    maxes = []
    for lm in (20.0, 40.0, 80.0):
        fld = tv_large_solution(sq, lm, h, backend="analytic")
        vmax = float(fld.finite_values().max())
        maxes.append(vmax)
        report.add(f"square corner growth max v (lambda_max={lm:g})", 0.9 * lm, vmax, ">=", vmax >= 0.9 * lm)
    report.add("square max v strictly increases with lambda_max", "increasing", maxes, "",
               maxes[0] < maxes[1] < maxes[2])

    ratio = fa.grid.max_ratio
    for d in (0.05, 0.1):
        iy, ix = fa.raster.cell_of(d, d)
        X, _ = fa.raster.centers()
        c = float(X[iy, ix])
        oracle = max(ca.lambda_K, 1.0 / (c * (2.0 + math.sqrt(2.0))))
        val = float(fa.v[iy, ix])
        report.add(f"square corner formula at d={d:g}", oracle, val, f"ratio {ratio:.4f}",
                   oracle / ratio <= val <= oracle * ratio)

    both = fa.covered & fm.covered
    l1 = float(np.sum(np.abs(fa.v[both] - fm.v[both]))) * h * h
    report.add("square analytic vs mincut L1(v)", "<= 0.03 Per", l1, 0.03 * 4.0, l1 <= 0.12)


def verify_radial(report: VerifyReport, plist=DEFAULT_PLIST) -> None:
    for p in (1.2, 1.5, 1.8):
        for N in (2, 3):
            res = w0_residual(PParams(p), N, 1.0, 1e-3)
            report.add(f"w0 residual p={p:g} N={N}", 0.0, res, 1e-4, res <= 1e-4)

    sq2 = Power(1.0, 2.0)
    P = PParams(1.5)
    prob = RadialProblem(sq2, 1.0, 2)
    cb = psi_inv(sq2, P, float(w0(P, 2, 1.0, 0.0)))
    report.add("center bound f=s^2 p=1.5", 6.0, cb, 1e-12, abs(cb - 6.0) < 1e-12)

    rows = p_sweep(prob, plist)
    gaps = []
    for row in rows:
        ok = row["error"] is None and row["bound_ok"]
        report.add(f"ball bound holds p={row['p']:g}", "u <= Psi^-1(w0)", row.get("center"), 1e-6, ok,
                   row["error"] or "")
        if row["error"] is None:
            gaps.append(abs(row["interior_mean"] - math.sqrt(2.0)))
    last = rows[-1]
    if last["error"] is None:
        rel = abs(last["interior_mean"] - math.sqrt(2.0)) / math.sqrt(2.0)
        report.add(f"interior mean within 15% of sqrt2 at p={last['p']:g}", math.sqrt(2.0),
                   last["interior_mean"], "15%", rel <= 0.15)
    report.add("gap to sqrt2 non-increasing along sweep", "non-increasing", gaps, "",
               len(gaps) == len(rows) and all(b <= a for a, b in zip(gaps, gaps[1:])))
    lim = limit_bounds(prob)
    report.add("limit bound from global estimate", math.sqrt(3.0), lim["global_limit"], 1e-12,
               abs(lim["global_limit"] - math.sqrt(3.0)) < 1e-12)
    report.add("optimal limit bound", math.sqrt(2.0), lim["optimal_limit"], 1e-12,
               abs(lim["optimal_limit"] - math.sqrt(2.0)) < 1e-12)

    pe = PParams(1.05)
    eb = float(exp_bound(pe, 2, 1.0, 0.0))
    rel = abs(eb - math.log(2.0)) / math.log(2.0)
    report.add("exponential center bound at p=1.05 vs log 2", math.log(2.0), eb, "5%", rel <= 0.05)

    eprob = RadialProblem(Exponential(), 1.0, 2)
    prof = large_profile(eprob, PParams(1.2))
    eb_nodes = exp_bound(PParams(1.2), 2, 1.0, prof.r)
    report.add("exponential profile below explicit bound p=1.2", "u <= bound", prof.center, 1e-6,
               bool(np.all(prof.u <= eb_nodes + 1e-6)))

    ko = [keller_osserman(Log1p(), p).finite for p in (1.1, 1.5, 1.9)]
    report.add("log1p is Keller-Osserman infinite", [False] * 3, ko, "", not any(ko))


_RUNNERS: Dict[str, Callable] = {"disk": verify_disk, "square": verify_square, "radial": verify_radial}


def verify(suite: str = "all", h: float = DEFAULT_H, plist=DEFAULT_PLIST) -> VerifyReport:
    if suite not in SUITES:
        raise InvalidInputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}",
                                where="cli_runner.verify")
    report = VerifyReport(suite, settings={"h": h, "plist": list(plist), "grid_size": 64})
    names = ("disk", "square", "radial") if suite == "all" else (suite,)
    for name in names:
        if name == "radial":
            verify_radial(report, plist)
        else:
            _RUNNERS[name](report, h)
    return report
