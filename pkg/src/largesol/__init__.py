"""Large solutions of div(Du/|Du|) = f(u) on planar convex domains."""

__version__ = "0.1.0"

from .geometry import (ConvexPolygon, DiskDomain, RasterDomain, RoundedRegion, erode, opening,
                       opening_measures, polygon_measures, rasterize)
from .prescribed import CheegerResult, LevelSet, cheeger, solve_plambda_convex, solve_plambda_mincut
from .field import (CurvatureField, LambdaGrid, LevelFamily, build_family, mass_identities,
                    tv_large_solution, variational_mean_curvature)
from .absorption import (Exponential, KOReport, Log1p, Nonlinearity, Power, Tabulated, ball_lower_bound,
                         check_h2, keller_osserman, large_solution, parse_nonlinearity)
from .radial import (PParams, RadialProblem, RadialProfile, large_profile, p_sweep, psi, psi_inv,
                     solve_dirichlet, w0, w0_optimal, w0_residual)

__all__ = [
    "__version__", "ConvexPolygon", "DiskDomain", "RasterDomain", "RoundedRegion", "erode",
    "opening", "opening_measures", "polygon_measures", "rasterize", "CheegerResult", "LevelSet",
    "cheeger", "solve_plambda_convex", "solve_plambda_mincut", "CurvatureField", "LambdaGrid",
    "LevelFamily", "build_family", "mass_identities", "tv_large_solution",
    "variational_mean_curvature", "Exponential", "KOReport", "Log1p", "Nonlinearity", "Power",
    "Tabulated", "ball_lower_bound", "check_h2", "keller_osserman", "large_solution",
    "parse_nonlinearity", "PParams", "RadialProblem", "RadialProfile", "large_profile", "p_sweep",
    "psi", "psi_inv", "solve_dirichlet", "w0", "w0_optimal", "w0_residual",
]
