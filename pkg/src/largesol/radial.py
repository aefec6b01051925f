"""Radial p-Laplacian large solutions on a ball and their explicit bounds.

Delta_p u = f(u) in B_R, u = n on the boundary, is written in flux form

    u'(r) = (Q / r^{N-1})^{1/(p-1)},    Q'(r) = r^{N-1} f(u),

and solved by shooting on the center value alpha.  Once the slope exceeds 1
the independent variable switches to (a log of) u, so the steep boundary
layer of a large datum costs a few dozen steps instead of thousands.

Letting n double until the interior stops moving gives the large solution
u_p, which is compared with

    Psi_p(t) = int_t^inf (p' F(s))^{-1/p} ds

applied to the explicit subsolution w0 (the ball bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import quad, simpson, solve_ivp
from scipy.optimize import brentq

from .absorption import Exponential, Nonlinearity, Power, keller_osserman
from .errors import (ConvergenceFailure, LargeSolError, ParameterRangeError, PsiDomainError,
                     ShootingFailure, UndefinedTransformError)


@dataclass(frozen=True)
class PParams:
    p: float

    def __post_init__(self):
        if not 1.0 < self.p < 2.0:
            raise ParameterRangeError(f"p={self.p} outside (1, 2)", where="p_radial.PParams")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)


@dataclass(frozen=True)
class RadialProblem:
    f: Nonlinearity
    R: float = 1.0
    N: int = 2
    s_Omega: Optional[float] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterRangeError(f"dimension N={self.N} must be an integer >= 2", where="p_radial.RadialProblem")
        if not self.R > 0:
            raise ParameterRangeError("R must be positive", where="p_radial.RadialProblem")
        if self.s_Omega is None:
            object.__setattr__(self, "s_Omega", float(self.R))

    def check_p(self, params: PParams):
        if isinstance(self.f, Power) and not params.p < 1.0 + self.f.q:
            raise ParameterRangeError(f"p={params.p} must be below 1 + q = {1 + self.f.q}",
                                      where="p_radial.PParams")


@dataclass
class RadialProfile:
    r: np.ndarray
    u: np.ndarray
    params: PParams
    dirichlet_n: float  # math.inf for the stabilized large solution
    alpha: float
    problem: RadialProblem
    bound: Optional[np.ndarray] = None
    history: List[dict] = field(default_factory=list)

    @property
    def center(self) -> float:
        return float(self.u[0])

    def interior_mean(self, frac: float = 0.5) -> float:
        """Volume-weighted mean of u over r <= frac * R."""
        return interior_mean(self, frac)


# --------------------------------------------------------------------------
# Psi transforms

def _require_ko(f: Nonlinearity, params: PParams):
    if isinstance(f, Power):
        if not f.q > params.p - 1:
            raise UndefinedTransformError(f"Keller-Osserman fails for q={f.q} <= p-1", where="p_radial.psi")
        return
    if isinstance(f, Exponential):
        return
    if not keller_osserman(f, params.p).finite:
        raise UndefinedTransformError(f"Keller-Osserman fails for {f.spec()} at p={params.p}",
                                      where="p_radial.psi")


def _psi_quad(f: Nonlinearity, p: float, t: float) -> float:
    pc = p / (p - 1)

    def g(s):
        with np.errstate(over="ignore"):
            F = float(f.F(s))
        return (pc * F) ** (-1.0 / p) if F > 0 else math.inf

    total = 0.0
    if t < 1.0:
        # the integrand may blow up like a power at 0; s = e^x makes it smooth
        total, _ = quad(lambda x: g(math.exp(x)) * math.exp(x), math.log(t), 0.0, limit=400,
                        epsabs=0.0, epsrel=1e-13)
        t = 1.0
    a = t
    b = 2.0 * t
    prev = None
    rho_prev = None
    for _ in range(400):
        inc, _ = quad(g, a, b, limit=400, epsabs=0.0, epsrel=1e-13)
        total += inc
        if prev is not None and prev > 0:
            rho = inc / prev
            if inc <= 1e-16 * total:
                return total
            if rho < 1.0:
                tail = inc * rho / (1 - rho)
                if rho < 0.9 and tail <= 1e-14 * total:
                    return total + tail
                # power-law tails are geometric on doubling intervals; wait until the ratio settles
                if rho_prev is not None and inc * abs(rho - rho_prev) / (1 - rho) ** 2 <= 1e-12 * total:
                    return total + tail
            rho_prev = rho
        prev = inc
        a, b = b, b + 2.0 * (b - a)
    raise UndefinedTransformError(f"Psi quadrature did not converge at t={t}", where="p_radial.psi")


def psi(f: Nonlinearity, params: PParams, t: float) -> float:
    p = params.p
    pc = params.p_conj
    _require_ko(f, params)
    if isinstance(f, Power):
        if not t > 0:
            raise PsiDomainError(f"t={t} must be positive", where="p_radial.psi")
        q, c = f.q, f.c
        return (pc * c / (q + 1)) ** (-1.0 / p) * p * t ** (-(q + 1 - p) / p) / (q + 1 - p)
    if isinstance(f, Exponential):
        return pc ** (-1.0 / p) * p * math.exp(-t / p)
    if not t > 0:
        raise PsiDomainError(f"t={t} must be positive", where="p_radial.psi")
    return _psi_quad(f, p, t)


def psi_inv(f: Nonlinearity, params: PParams, s: float) -> float:
    p = params.p
    pc = params.p_conj
    _require_ko(f, params)
    if not s > 0:
        raise PsiDomainError(f"s={s} must be positive", where="p_radial.psi_inv")
    if isinstance(f, Power):
        q, c = f.q, f.c
        return (((q + 1) / (pc * c)) ** (1.0 / p) * p / ((q + 1 - p) * s)) ** (p / (q + 1 - p))
    if isinstance(f, Exponential):
        return math.log((p - 1) * p ** (p - 1) / s ** p)
    # Psi decreases from Psi(0+) to 0
    top = psi(f, params, 1e-12)
    if s >= top:
        raise PsiDomainError(f"s={s} not below Psi(0+)={top:g}", where="p_radial.psi_inv")
    lo, hi = 1e-12, 1.0
    while psi(f, params, hi) > s:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise PsiDomainError(f"cannot bracket Psi^-1({s})", where="p_radial.psi_inv")
    return brentq(lambda t: psi(f, params, t) - s, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# --------------------------------------------------------------------------
# explicit subsolution and bounds

def w0(params: PParams, N: int, R: float, r):
    """(1/(p' N)) (R - r^{p'} / R^{1/(p-1)}), which solves Delta_p w = -N^{2-p}/R."""
    pc = params.p_conj
    r = np.asarray(r, dtype=float)
    return (R - r ** pc / R ** (1.0 / (params.p - 1))) / (pc * N)


def w0_residual_profile(params: PParams, N: int, R: float, h: float):
    """(r_i, residual_i) of the discrete radial p-Laplacian of w0 plus N^{2-p}/R at interior nodes.

    Uses r_i^{1-N} (Phi_{i+1/2} - Phi_{i-1/2}) / h with
    Phi_{i+1/2} = r_{i+1/2}^{N-1} |g|^{p-2} g and g = (w_{i+1} - w_i) / h.
    Differences of w are taken on the r-dependent term alone, so the
    constant R/(p'N) does not cancel away digits.
    """
    p = params.p
    pc = params.p_conj
    M = int(round(R / h))
    r = np.arange(M + 1) * (R / M)
    hh = R / M
    z = r ** pc
    g = -(np.diff(z) / hh) / (pc * N * R ** (1.0 / (p - 1)))
    rm = 0.5 * (r[1:] + r[:-1])
    phi = rm ** (N - 1) * np.abs(g) ** (p - 2) * g
    ri = r[1:-1]
    lap = (phi[1:] - phi[:-1]) / hh / ri ** (N - 1)
    return ri, lap + N ** (2 - p) / R


def w0_residual(params: PParams, N: int, R: float, h: float, r_min: float = 0.0) -> float:
    """Max |discrete Delta_p w0 + N^{2-p}/R| over interior nodes with r >= r_min."""
    r, res = w0_residual_profile(params, N, R, h)
    sel = r >= r_min
    return float(np.max(np.abs(res[sel])))


def optimal_factor(params: PParams, q: float) -> float:
    """Scale taking w0 to the subsolution with right-hand side multiplied by ((q+1)/(q+1-p))^{1/p'}.

    For Delta_p w = -c the radial solution scales like c^{1/(p-1)}, and
    (1/p') / (p-1) = 1/p.
    """
    p = params.p
    return ((q + 1) / (q + 1 - p)) ** (1.0 / p)


def w0_optimal(params: PParams, N: int, R: float, q: float, r):
    if not q > 1.0 / (N - 1):
        raise ParameterRangeError(f"need q > 1/(N-1) = {1 / (N - 1):g}, got q={q}", where="p_radial.w0_optimal")
    if not params.p < 1 + q:
        raise ParameterRangeError(f"need p < 1 + q, got p={params.p}, q={q}", where="p_radial.w0_optimal")
    return optimal_factor(params, q) * w0(params, N, R, r)


def ball_bound(problem: RadialProblem, params: PParams, r):
    """Psi_p^{-1}(w0(r)) nodewise (+inf at r = R)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    w = w0(params, problem.N, problem.R, r)
    out = np.full(r.shape, np.inf)
    for i, wi in enumerate(w):
        if wi > 0:
            out[i] = psi_inv(problem.f, params, float(wi))
    return out


def exp_bound(params: PParams, N: int, s: float, r):
    """log(p^{2p-1} N^p / ((p-1)^{p-1} (s - r^{p'} / s^{1/(p-1)})^p)) for f = e^s."""
    p = params.p
    pc = params.p_conj
    r = np.asarray(r, dtype=float)
    inner = s - r ** pc / s ** (1.0 / (p - 1))
    with np.errstate(divide="ignore"):
        return np.log(p ** (2 * p - 1) * N ** p / ((p - 1) ** (p - 1) * inner ** p))


def limit_bounds(problem: RadialProblem) -> dict:
    """p -> 1 limits of the explicit bounds and the 1-Laplacian reference f^{-1}(N/R)."""
    f, N, s, R = problem.f, problem.N, problem.s_Omega, problem.R
    out = {"limit_ref": float(f.inv(N / R))}
    if isinstance(f, Power):
        q, c = f.q, f.c
        out["global_limit"] = ((q + 1) * N / (q * c * s)) ** (1.0 / q)
        out["optimal_limit"] = (N / (c * R)) ** (1.0 / q)
    elif isinstance(f, Exponential):
        out["global_limit"] = math.log(N / s)
    return out


# --------------------------------------------------------------------------
# shooting

_RTOL = 1e-12


@dataclass
class _Shot:
    g: float
    r_sol: object
    u_sol: object = None
    r_switch: float = math.nan
    u_switch: float = math.nan
    u_end: float = math.nan  # u where r reached R (u-phase), or u(R) in r-phase
    r_end: float = math.nan  # r where u reached n


def _shoot(problem: RadialProblem, p: float, alpha: float, n: float, dense: bool = False) -> _Shot:
    f = problem.f
    N = problem.N
    R = problem.R
    k = 1.0 / (p - 1.0)
    eps = 1e-6 * R
    fa = float(f.f(alpha))

    def rhs_r(r, y):
        u, Q = y
        return [(max(Q, 0.0) / r ** (N - 1)) ** k, r ** (N - 1) * float(f.f(u))]

    def hit_n(r, y):
        return y[0] - n
    hit_n.terminal = True
    hit_n.direction = 1

    def steep(r, y):
        return (max(y[1], 0.0) / r ** (N - 1)) ** k - 1.0
    steep.terminal = True
    steep.direction = 1

    y0 = [alpha, fa * eps ** N / N]
    atol = [1e-14 * max(1.0, abs(alpha), abs(n)), 1e-300]
    sol = solve_ivp(rhs_r, (eps, R), y0, method="DOP853", rtol=_RTOL, atol=atol,
                    events=[hit_n, steep], dense_output=dense)
    if sol.status < 0:
        raise ShootingFailure(f"integration failed: {sol.message}", where="p_radial.solve_dirichlet")
    shot = _Shot(math.nan, sol)
    if sol.status == 0:
        uR = sol.y[0, -1]
        shot.g = (uR - n) / n
        shot.u_end = uR
        return shot
    if sol.t_events[0].size:
        r_n = sol.t_events[0][0]
        shot.g = math.log(R / r_n)
        shot.r_end = r_n
        return shot
    # switch to w = log(u - u_s + 1) as the independent variable
    r_s = sol.t_events[1][0]
    u_s, Q_s = sol.y_events[1][0]
    shot.r_switch, shot.u_switch = r_s, u_s

    def rhs_w(w, y):
        r, Q = y
        u = u_s - 1.0 + math.exp(w)
        dudw = u - u_s + 1.0
        drdu = (r ** (N - 1) / Q) ** k
        return [drdu * dudw, r ** (N - 1) * float(f.f(u)) * drdu * dudw]

    def hit_R(w, y):
        return y[0] - R
    hit_R.terminal = True
    hit_R.direction = 1

    w_end = math.log(n - u_s + 1.0)
    sol2 = solve_ivp(rhs_w, (0.0, w_end), [r_s, Q_s], method="DOP853", rtol=_RTOL,
                     atol=[1e-15 * R, 1e-300], events=[hit_R], dense_output=dense)
    if sol2.status < 0:
        raise ShootingFailure(f"integration failed: {sol2.message}", where="p_radial.solve_dirichlet")
    shot.u_sol = sol2
    if sol2.status == 1:
        u_R = u_s - 1.0 + math.exp(sol2.t_events[0][0])
        shot.g = (u_R - n) / n
        shot.u_end = u_R
    else:
        r_n = sol2.y[0, -1]
        shot.g = math.log(R / r_n)
        shot.r_end = r_n
    return shot


def _mesh(problem: RadialProblem, mesh) -> np.ndarray:
    if mesh is None:
        mesh = 201
    if np.isscalar(mesh):
        return np.linspace(0.0, problem.R, int(mesh))
    r = np.asarray(mesh, dtype=float)
    if r.ndim != 1 or np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] > problem.R * (1 + 1e-12):
        raise ParameterRangeError("mesh must be increasing radii in [0, R]", where="p_radial.solve_dirichlet")
    return r


def _evaluate(problem: RadialProblem, shot: _Shot, alpha: float, n: float, r: np.ndarray) -> np.ndarray:
    eps = 1e-6 * problem.R
    u = np.empty_like(r)
    rs = shot.r_sol
    r_phase_end = rs.t[-1]
    w_sol = shot.u_sol
    for i, ri in enumerate(r):
        if ri <= eps:
            u[i] = alpha
        elif ri <= r_phase_end:
            u[i] = rs.sol(ri)[0]
        elif w_sol is not None and ri <= w_sol.y[0, -1]:
            w_lo, w_hi = w_sol.t[0], w_sol.t[-1]
            w = brentq(lambda x: w_sol.sol(x)[0] - ri, w_lo, w_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            u[i] = shot.u_switch - 1.0 + math.exp(w)
        else:
            u[i] = n
    u[-1] = n if r[-1] >= problem.R * (1 - 1e-12) else u[-1]
    return np.maximum.accumulate(np.minimum(u, n))


class _Converged(Exception):
    def __init__(self, alpha):
        self.alpha = alpha


def _center_bound(problem: RadialProblem, params: PParams) -> Optional[float]:
    try:
        return psi_inv(problem.f, params, float(w0(params, problem.N, problem.R, 0.0)))
    except (LargeSolError, ValueError):
        return None


def solve_dirichlet(problem: RadialProblem, params: PParams, n: float, mesh=None,
                    bracket: Optional[Sequence[float]] = None, tol: float = 1e-8) -> RadialProfile:
    """u_{p,n}: Delta_p u = f(u) in B_R, u = n on the boundary, by shooting on u(0)."""
    if not n > 0:
        raise ParameterRangeError(f"boundary datum n={n} must be positive", where="p_radial.solve_dirichlet")
    problem.check_p(params)
    p = params.p
    r = _mesh(problem, mesh)

    def g(a):
        val = _shoot(problem, p, a, n).g
        if abs(val) <= tol:
            raise _Converged(a)
        return val

    bound = _center_bound(problem, params)
    if bracket is not None:
        lo, hi = float(bracket[0]), float(bracket[1])
    else:
        lo = 0.0 if float(problem.f.f(0.0)) == 0.0 else min(0.0, n) - 1.0
        hi = min(n, bound * (1 + 1e-12)) if bound is not None else n
    try:
        glo = g(lo)
        step = 1.0
        while glo > 0:
            lo -= step
            step *= 2
            if step > 1e6:
                raise ShootingFailure("cannot bracket the center value from below", where="p_radial.solve_dirichlet")
            glo = g(lo)
        ghi = g(hi)
        if ghi < 0 and hi < n:
            hi = n
            ghi = g(hi)
        if ghi < 0:
            raise ShootingFailure(f"center-value bracket [{lo:g}, {hi:g}] exhausted for n={n:g}",
                                  where="p_radial.solve_dirichlet")
        alpha = brentq(g, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps, maxiter=300)
    except _Converged as c:
        alpha = c.alpha
    shot = _shoot(problem, p, alpha, n, dense=True)
    u = _evaluate(problem, shot, alpha, n, r)
    prof = RadialProfile(r, u, params, float(n), float(alpha), problem)
    prof.history.append({"n": float(n), "alpha": float(alpha), "residual": shot.g})
    return prof


def large_profile(problem: RadialProblem, params: PParams, mesh=None, rel_tol: float = 1e-6,
                  max_doublings: int = 30, with_bound: bool = True) -> RadialProfile:
    """Limit of u_{p,n} as n doubles from Psi^{-1}(w0(0.9 R)) until [0, 0.9 R] moves by < rel_tol."""
    problem.check_p(params)
    r = _mesh(problem, mesh)
    try:
        n0 = psi_inv(problem.f, params, float(w0(params, problem.N, problem.R, 0.9 * problem.R)))
    except (LargeSolError, ValueError):
        n0 = 1.0
    n0 = max(n0, 1.0)
    inner = r <= 0.9 * problem.R
    prev = solve_dirichlet(problem, params, n0, r)
    history = list(prev.history)
    for k in range(1, max_doublings + 1):
        n = n0 * 2.0 ** k
        bound = _center_bound(problem, params)
        hi = min(n, bound * (1 + 1e-12)) if bound is not None else n
        cur = solve_dirichlet(problem, params, n, r, bracket=(prev.alpha, max(hi, prev.alpha)))
        history += cur.history
        scale = max(float(np.max(np.abs(cur.u[inner]))), 1e-300)
        change = float(np.max(np.abs(cur.u[inner] - prev.u[inner]))) / scale
        history[-1]["change"] = change
        if change < rel_tol:
            cur.dirichlet_n = math.inf
            cur.history = history
            if with_bound:
                cur.bound = ball_bound(problem, params, r)
            return cur
        prev = cur
    raise ConvergenceFailure(f"profile did not stabilize after {max_doublings} doublings (last change {change:.3g})",
                             where="p_radial.large_profile")


def interior_mean(profile: RadialProfile, frac: float = 0.5) -> float:
    N = profile.problem.N
    rr = frac * profile.problem.R
    sel = profile.r <= rr * (1 + 1e-12)
    r = profile.r[sel]
    u = profile.u[sel]
    w = r ** (N - 1)
    return float(simpson(u * w, x=r) / simpson(w, x=r))


def rescale_profile(profile: RadialProfile, R_new: float) -> np.ndarray:
    """For f = c s^q: u_{R'}(r) = (R'/R)^{-p/(q+1-p)} u_R(r R/R'), sampled at the same relative nodes."""
    f = profile.problem.f
    if not isinstance(f, Power):
        raise ParameterRangeError("rescaling needs a power nonlinearity", where="p_radial.rescale")
    p = profile.params.p
    lam = R_new / profile.problem.R
    return lam ** (-p / (f.q + 1 - p)) * profile.u


def p_sweep(problem: RadialProblem, p_list: Sequence[float], mesh=None) -> List[dict]:
    """Large profiles for each p with interior means, center bounds and p -> 1 limits.

    A failing p is reported in its row (``error``) and the sweep continues.
    """
    ps = list(p_list)
    if any(b >= a for a, b in zip(ps, ps[1:])):
        raise ParameterRangeError("p_list must be decreasing", where="p_radial.p_sweep")
    limits = limit_bounds(problem)
    rows = []
    for p in ps:
        row = {"p": p}
        try:
            params = PParams(p)
            row["center_bound"] = _center_bound(problem, params)
            if isinstance(problem.f, Exponential):
                row["exp_center_bound"] = float(exp_bound(params, problem.N, problem.s_Omega, 0.0))
            if isinstance(problem.f, Power) and problem.f.q > 1.0 / (problem.N - 1):
                wt = float(w0_optimal(params, problem.N, problem.R, problem.f.q, 0.0))
                row["optimal_center_bound"] = psi_inv(problem.f, params, wt)
            prof = large_profile(problem, params, mesh)
            row["interior_mean"] = prof.interior_mean()
            row["center"] = prof.center
            row["bound_ok"] = bool(np.all(prof.u <= prof.bound + 1e-6))
            row["profile"] = prof
            row["error"] = None
        except LargeSolError as exc:
            row["error"] = str(exc)
        row.update(limits)
        rows.append(row)
    return rows
