"""Command-line runner.

Every command prints a JSON report (header with the effective defaults,
then results) to stdout or to ``--report``.  Failures print
``error: [module.operation] message`` to stderr and exit with the code of
the error class: 2 config, 3 solver, 4 verification, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .absorption import ball_lower_bound, keller_osserman, large_solution, parse_nonlinearity
from .errors import EXIT_CONFIG, EXIT_IO, ConfigError, LargeSolError, VerificationFailure
from .field import (WORKERS_ENV, default_workers, mass_identities, tv_large_solution, write_field_bin,
                    write_field_csv)
from .geometry import DiskDomain, load_polygon, load_raster, rasterize, save_raster
from .prescribed import cheeger, solve_plambda_convex, solve_plambda_mincut
from .radial import (PParams, RadialProblem, ball_bound, large_profile, p_sweep, solve_dirichlet)
from .verify import DEFAULT_H, DEFAULT_PLIST, SUITES, verify

DEFAULTS = {"h": DEFAULT_H, "grid_size": 64, "lambda_max": 40.0, "plist": list(DEFAULT_PLIST),
            "mesh": 201, "workers_env": WORKERS_ENV}


def _float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _positive(text: str) -> float:
    try:
        val = float(eval_fraction(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not val > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def eval_fraction(text: str) -> float:
    """Accept plain floats and fractions such as ``1/512``."""
    if "/" in text:
        a, _, b = text.partition("/")
        return float(a) / float(b)
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="largesol", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--report", help="write the JSON report here instead of stdout")
        p.add_argument("--workers", type=int, default=None, help=f"worker threads (default ${WORKERS_ENV} or 1)")

    def domain(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--domain", help="polygon JSON or raster PGM (with sidecar JSON)")
        g.add_argument("--disk", type=_positive, metavar="R", help="disk of radius R centered at the origin")

    p = sub.add_parser("cheeger", help="Cheeger constant and set")
    domain(p)
    p.add_argument("--raster", type=_positive, metavar="H", help="use the min-cut path on a raster of spacing H")
    p.add_argument("--out", help="PGM mask of the Cheeger set")
    common(p)

    p = sub.add_parser("plambda", help="minimize Per(F) - lambda |F|")
    domain(p)
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--backend", choices=("analytic", "mincut"), default="analytic")
    p.add_argument("--h", type=_positive, default=DEFAULT_H)
    p.add_argument("--out", help="level set PGM (sidecar JSON holds the energy report)")
    common(p)

    for name, helptext in (("curvature", "variational mean curvature field v"),
                           ("large", "large solution u = f^-1(v)")):
        p = sub.add_parser(name, help=helptext)
        domain(p)
        if name == "large":
            p.add_argument("--f", required=True, help="power:c=1,q=2 | exp | log1p | table:path.csv")
        p.add_argument("--lambda-max", type=_positive, default=DEFAULTS["lambda_max"])
        p.add_argument("--h", type=_positive, default=DEFAULT_H)
        p.add_argument("--grid-size", type=int, default=DEFAULTS["grid_size"])
        p.add_argument("--backend", choices=("analytic", "mincut"), default="analytic")
        p.add_argument("--out", help="field output: .csv (x,y,value) or binary dump with JSON header")
        common(p)

    p = sub.add_parser("ko", help="Keller-Osserman test")
    p.add_argument("--f", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--diagnostic", action="store_true", help="allow p outside (1, 2)")
    common(p)

    p = sub.add_parser("radial", help="radial p-Laplacian profile")
    p.add_argument("--f", required=True)
    p.add_argument("--R", type=_positive, default=1.0)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--p", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=_positive, help="finite boundary datum")
    g.add_argument("--large", action="store_true", help="stabilized large solution")
    p.add_argument("--mesh", type=int, default=DEFAULTS["mesh"])
    p.add_argument("--out", help="CSV with columns r,u,bound")
    common(p)

    p = sub.add_parser("psweep", help="p -> 1 convergence table")
    p.add_argument("--f", required=True)
    p.add_argument("--R", type=_positive, default=1.0)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--plist", type=_float_list, default=list(DEFAULT_PLIST))
    p.add_argument("--mesh", type=int, default=DEFAULTS["mesh"])
    p.add_argument("--out", help="CSV with columns p,interior_mean,center_bound,limit_ref")
    common(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--h", type=_positive, default=DEFAULT_H)
    common(p)
    return ap


# --------------------------------------------------------------------------

def _load_domain(args):
    if args.disk is not None:
        return DiskDomain((0.0, 0.0), args.disk)
    path = Path(args.domain)
    if not path.exists():
        raise FileNotFoundError(f"domain file not found: {path}")
    if path.suffix.lower() in (".pgm", ".pnm"):
        return load_raster(path)
    return load_polygon(path)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _write_field(path, raster, values, name, lambda_max, coverage, extra=None):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_field_csv(path, raster, values, name)
    else:
        write_field_bin(path, raster, values, lambda_max, coverage, extra)


def cmd_cheeger(args) -> dict:
    dom = _load_domain(args)
    if args.raster is not None and not hasattr(dom, "mask"):
        dom = rasterize(dom, args.raster)
    res = cheeger(dom)
    out = {"lambda_K": res.lambda_K, "ratio_check": res.ratio_check, "perimeter": res.perimeter,
           "area": res.area, "backend": res.backend}
    if args.out:
        raster = dom if hasattr(dom, "mask") else rasterize(dom, DEFAULT_H)
        mask = res.cheeger_set if isinstance(res.cheeger_set, np.ndarray) else (
            raster.mask & res.cheeger_set.contains(*raster.centers()))
        save_raster(_masked(raster, mask), args.out, extra=out)
    return out


class _MaskView:
    """Just enough of a RasterDomain for save_raster, allowing an empty mask."""

    def __init__(self, mask, h, origin):
        self.mask, self.h, self.origin = mask, h, origin


def _masked(raster, mask):
    return _MaskView(mask, raster.h, raster.origin)


def cmd_plambda(args) -> dict:
    dom = _load_domain(args)
    if args.backend == "analytic":
        if hasattr(dom, "mask"):
            raise ConfigError("analytic backend needs a polygon or disk domain", where="cli_runner.run")
        level = solve_plambda_convex(dom, args.lam)
        raster = rasterize(dom, args.h) if args.out else None
    else:
        raster = dom if hasattr(dom, "mask") else rasterize(dom, args.h)
        level = solve_plambda_mincut(raster, args.lam)
    out = level.report()
    if args.out:
        save_raster(_masked(raster, level.mask_on(raster)), args.out, extra=out)
    return out


def _field(args):
    dom = _load_domain(args)
    backend = "mincut" if hasattr(dom, "mask") else args.backend
    fld = tv_large_solution(dom, args.lambda_max, args.h, n=args.grid_size, backend=backend,
                            workers=args.workers)
    return dom, fld


def _identities(fld, dom) -> dict:
    try:
        mi = mass_identities(fld, dom)
    except LargeSolError as exc:
        return {"skipped": str(exc)}
    return {"int_abs_H": mi["int_abs_H"], "perimeter": mi["perimeter"], "rel_error": mi["rel_error"]}


def cmd_curvature(args) -> dict:
    dom, fld = _field(args)
    vals = fld.finite_values()
    out = {"lambda_K": fld.lambda_K, "lambda_max": fld.lambda_max, "coverage": fld.coverage,
           "min_v": float(vals.min()), "max_v": float(vals.max()), "grid_points": len(fld.grid),
           "mass_identity": _identities(fld, dom)}
    if args.out:
        _write_field(args.out, fld.raster, fld.v, "v", fld.lambda_max, fld.coverage)
    return out


def cmd_large(args) -> dict:
    f = parse_nonlinearity(args.f)
    dom, fld = _field(args)
    u = large_solution(fld, f)
    uv = u[fld.covered]
    vals = fld.finite_values()
    lb = ball_lower_bound(dom)
    out = {"f": f.spec(), "lambda_K": fld.lambda_K, "coverage": fld.coverage,
           "min_v": float(vals.min()), "max_v": float(vals.max()),
           "min_u": float(uv.min()), "max_u": float(uv.max()),
           "ball_lower_bound": lb, "ball_lower_bound_ok": bool(lb <= vals.min() + 1e-12)}
    if args.out:
        _write_field(args.out, fld.raster, u, "u", fld.lambda_max, fld.coverage, {"f": f.spec()})
    return out


def cmd_ko(args) -> dict:
    f = parse_nonlinearity(args.f)
    rep = keller_osserman(f, args.p, strict=not args.diagnostic)
    return {"f": f.spec(), "p": args.p, "result": "finite" if rep.finite else "infinite",
            "finite": rep.finite, "value": rep.value, "divergence_evidence": rep.divergence_evidence}


def cmd_radial(args) -> dict:
    f = parse_nonlinearity(args.f)
    prob = RadialProblem(f, args.R, args.N)
    params = PParams(args.p)
    if args.large:
        prof = large_profile(prob, params, args.mesh)
    else:
        prof = solve_dirichlet(prob, params, args.n, args.mesh)
    try:
        bound = prof.bound if prof.bound is not None else ball_bound(prob, params, prof.r)
    except LargeSolError:
        bound = np.full_like(prof.r, np.nan)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("r,u,bound\n")
            for r, u, b in zip(prof.r, prof.u, bound):
                fh.write(f"{float(r)!r},{float(u)!r},{float(b)!r}\n")
    return {"f": f.spec(), "p": args.p, "R": args.R, "N": args.N,
            "dirichlet_n": _finite(prof.dirichlet_n), "large": bool(args.large),
            "center": prof.center, "interior_mean": prof.interior_mean(),
            "bound_ok": bool(np.all(prof.u[:-1] <= bound[:-1] + 1e-6)),
            "doublings": len(prof.history) - 1}


def cmd_psweep(args) -> dict:
    f = parse_nonlinearity(args.f)
    prob = RadialProblem(f, args.R, args.N)
    rows = p_sweep(prob, args.plist, args.mesh)
    table = [{k: v for k, v in row.items() if k != "profile"} for row in rows]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("p,interior_mean,center_bound,limit_ref\n")
            for row in table:
                fh.write(",".join(repr(float(row.get(k))) if row.get(k) is not None else "nan"
                                  for k in ("p", "interior_mean", "center_bound", "limit_ref")) + "\n")
    errors = [row["error"] for row in table if row["error"]]
    return {"f": f.spec(), "rows": table, "failed": errors}


def cmd_verify(args) -> dict:
    rep = verify(args.suite, h=args.h)
    for line in rep.lines():
        print(line, file=sys.stderr)
    out = rep.to_dict()
    out["_failed"] = not rep.passed
    return out


COMMANDS = {"cheeger": cmd_cheeger, "plambda": cmd_plambda, "curvature": cmd_curvature, "large": cmd_large,
            "ko": cmd_ko, "radial": cmd_radial, "psweep": cmd_psweep, "verify": cmd_verify}


def _emit(report: dict, path: Optional[str]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None and hasattr(args, "workers"):
        args.workers = default_workers()
    if getattr(args, "workers", 1) is not None and args.workers < 1:
        print("error: [cli_runner.run] --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    config = {k: v for k, v in vars(args).items() if k not in ("report",)}
    try:
        result = COMMANDS[args.command](args)
        failed = result.pop("_failed", False)
        _emit({"header": {"command": args.command, "version": __version__, "defaults": DEFAULTS,
                          "config": config}, "result": result}, args.report)
        if failed:
            raise VerificationFailure(f"suite {args.suite!r} has failing checks", where="cli_runner.verify")
    except LargeSolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: [cli_runner.io] {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: [cli_runner.{args.command}] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
