"""Elliptically symmetric problems in the radial variable ``r = |x|_{A^-1}``.

For ``u(x) = f(|x|_{A^-1})`` the (p, A)-Laplacian reduces to

    |f'|^{p-2} [ (p-1) f'' + (d-1)/r f' ],

independently of A.  Dirichlet problems on ellipsoidal annuli are solved in
conservative form

    (r^{d-1} |u'|^{p-2} u')' = r^{d-1} V |u|^{p-2} u

as a first-order system for (u, g) with ``g = r^{d-1}|u'|^{p-2}u'``,
written in ``t = log r`` and integrated with classical fourth-order
Runge-Kutta on a uniform t grid.  The inner flux is found by shooting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .anisotropy import AnisotropyMatrix
from .errors import InvalidArgument, NoSolution, NumericError
from .fundamental import FundamentalSolution
from .potentials import Potential

__all__ = [
    "RadialProblem",
    "RadialSolution",
    "SolverSpec",
    "RatioDiagnostics",
    "AsymptoticsReport",
    "CriticalityReport",
    "radial_operator_apply",
    "solve_radial_dirichlet",
    "solve_radial_ivp",
    "conservation_residual",
    "closed_form_dirichlet",
    "ratio_limit",
    "limit_of_sequence",
    "monotonicity_check",
    "criticality_probe",
    "asymptotics_probe",
    "weak_comparison_probe",
]

_BLOWUP = 1e150


def _phi(x: float, e: float) -> float:
    """``sign(x)|x|^e``, continuous at 0 for e > 0."""
    return math.copysign(abs(x) ** e, x) if x != 0.0 else 0.0


# -- the radial operator ----------------------------------------------------


def radial_operator_apply(p: float, d: int, f, r, df=None, d2f=None):
    """``|f'|^{p-2} [(p-1) f'' + (d-1)/r f']`` at r.

    ``f`` may be a FundamentalSolution (exact derivatives are used) or a
    callable; missing derivatives are taken by central differences.  Where
    ``f' = 0`` and ``p < 2`` the product form is indeterminate and the
    conservative form ``r^{1-d} (r^{d-1}|f'|^{p-2}f')'`` is differenced
    instead.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InvalidArgument("the radial operator needs r > 0")
    if isinstance(f, FundamentalSolution):
        _, f1, f2 = f.radial_derivatives(r)
    else:
        h = 1e-4 * r
        f1 = np.asarray(df(r) if df is not None else (f(r + h) - f(r - h)) / (2 * h), float)
        f2 = np.asarray(d2f(r) if d2f is not None else (f(r + h) - 2 * f(r) + f(r - h)) / h**2, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs(f1) ** (p - 2) * ((p - 1) * f2 + (d - 1) / r * f1)
    degenerate = (f1 == 0) & (p < 2)
    if np.any(degenerate):
        if df is None and isinstance(f, FundamentalSolution):
            deriv = lambda s: f.radial_derivatives(s)[1]  # noqa: E731
        elif df is not None:
            deriv = df
        else:
            deriv = lambda s: (f(s + 1e-4 * s) - f(s - 1e-4 * s)) / (2e-4 * s)  # noqa: E731

        def flux(s):
            g = np.asarray(deriv(s), float)
            return s ** (d - 1) * np.abs(g) ** (p - 2) * g if p >= 2 else s ** (d - 1) * np.sign(g) * np.abs(g) ** (p - 1)

        rr = r[degenerate]
        h = 1e-4 * rr
        out = np.array(out, dtype=float)
        out[degenerate] = rr ** (1 - d) * (flux(rr + h) - flux(rr - h)) / (2 * h)
    return float(out) if out.ndim == 0 else out


# -- problem and solution ---------------------------------------------------


@dataclass(frozen=True)
class RadialProblem:
    """Dirichlet problem on ``inner < |x|_{A^-1} < outer``.

    The potential is read as a profile in r through ``potential.radial``.
    """

    p: float
    d: int
    potential: Potential
    inner: float
    outer: float
    bc_inner: float
    bc_outer: float
    matrix: AnisotropyMatrix | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidArgument("p must exceed 1")
        if not (0 < self.inner < self.outer):
            raise InvalidArgument("need 0 < inner < outer")
        if not self.potential.is_radial:
            raise InvalidArgument("radial problems need a radial potential")
        if self.potential.dim != self.d:
            raise InvalidArgument("potential dimension does not match d")
        if self.potential.kind == "radial_table":
            g = self.potential.params["grid"]
            if g[0] > self.inner or g[-1] < self.outer:
                raise InvalidArgument("the potential table does not cover [inner, outer]")

    def with_bc(self, bc_inner: float, bc_outer: float) -> "RadialProblem":
        return RadialProblem(self.p, self.d, self.potential, self.inner, self.outer,
                             bc_inner, bc_outer, self.matrix)

    def dilated(self, s: float) -> "RadialProblem":
        """Problem for ``u_s(x) = u(s x)``: potential ``V_s``, interval divided by s."""
        return RadialProblem(self.p, self.d, self.potential.dilate(s, self.p), self.inner / s,
                             self.outer / s, self.bc_inner, self.bc_outer, self.matrix)


@dataclass(frozen=True)
class SolverSpec:
    cells: int = 2048
    xtol: float = 1e-15
    bc_tol: float = 1e-10
    max_expand: int = 200


@dataclass
class RadialSolution:
    """Values on a log-spaced grid with the flux ``g = r^{d-1}|u'|^{p-2}u'``."""

    p: float
    d: int
    grid: np.ndarray
    values: np.ndarray
    flux: np.ndarray
    slope: np.ndarray
    potential: Potential | None = None
    info: dict = field(default_factory=dict)

    def __call__(self, r):
        """Cubic Hermite interpolation in t = log r."""
        r = np.asarray(r, dtype=float)
        t = np.log(self.grid)
        tr = np.log(r)
        if np.any(tr < t[0] - 1e-12) or np.any(tr > t[-1] + 1e-12):
            raise InvalidArgument("evaluation radius outside the solution grid")
        h = t[1] - t[0]
        k = np.clip(((tr - t[0]) / h).astype(int), 0, len(t) - 2)
        s = (tr - t[k]) / h
        ut = self.grid * self.slope
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out = h00 * self.values[k] + h10 * h * ut[k] + h01 * self.values[k + 1] + h11 * h * ut[k + 1]
        return float(out) if out.ndim == 0 else out

    def as_series(self) -> dict:
        return {"r": self.grid.tolist(), "u": self.values.tolist(), "flux": self.flux.tolist()}


def _tabulate(problem_potential: Potential, t0: float, h: float, n: int):
    tn = t0 + h * np.arange(2 * n + 1) / 2.0
    r = np.exp(tn)
    if problem_potential is None or problem_potential.is_zero:
        v = np.zeros_like(r)
    else:
        v = np.asarray(problem_potential.radial(r), dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("potential is not finite on the solution interval")
    return r, v


def _rk4(p, d, r, v, u0, g0, n, h, keep=True):
    """March (u, g) over n RK4 steps; r, v hold node and half-node values."""
    e = 1.0 / (p - 1.0)
    pm1 = p - 1.0
    r = r.tolist()
    rd = [ri**d * vi for ri, vi in zip(r, v.tolist())]
    r1d = [ri ** (1 - d) for ri in r]
    u, g = float(u0), float(g0)
    if keep:
        us, gs = [u], [g]
    for i in range(n):
        j = 2 * i
        ra, rb, rc = r[j], r[j + 1], r[j + 2]
        k1u = ra * _phi(g * r1d[j], e)
        k1g = rd[j] * _phi(u, pm1)
        u2, g2 = u + 0.5 * h * k1u, g + 0.5 * h * k1g
        k2u = rb * _phi(g2 * r1d[j + 1], e)
        k2g = rd[j + 1] * _phi(u2, pm1)
        u3, g3 = u + 0.5 * h * k2u, g + 0.5 * h * k2g
        k3u = rb * _phi(g3 * r1d[j + 1], e)
        k3g = rd[j + 1] * _phi(u3, pm1)
        u4, g4 = u + h * k3u, g + h * k3g
        k4u = rc * _phi(g4 * r1d[j + 2], e)
        k4g = rd[j + 2] * _phi(u4, pm1)
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        g += h / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
        if not (abs(u) < _BLOWUP and abs(g) < _BLOWUP):
            return (None, None) if keep else (math.copysign(math.inf, u if u == u else g), g)
        if keep:
            us.append(u)
            gs.append(g)
    if keep:
        return np.array(us), np.array(gs)
    return u, g


def _build_solution(p, d, r_all, v_all, us, gs, potential, info) -> RadialSolution:
    grid = r_all[::2].copy()
    slope = np.array([_phi(gi * ri ** (1 - d), 1.0 / (p - 1)) for gi, ri in zip(gs, grid)])
    info = dict(info)
    info["v_nodes"] = v_all[::2]
    info["v_half"] = v_all[1::2]
    return RadialSolution(p, d, grid, us, gs, slope, potential, info)


def solve_radial_ivp(p: float, d: int, potential: Potential | None, r0: float, r1: float,
                     u0: float, du0: float, cells: int = 2048) -> RadialSolution:
    """March from r0 with ``u(r0) = u0, u'(r0) = du0`` to r1 (r1 may be below r0)."""
    if not (r0 > 0 and r1 > 0 and r0 != r1):
        raise InvalidArgument("need distinct positive endpoints")
    t0, t1 = math.log(r0), math.log(r1)
    h = (t1 - t0) / cells
    r, v = _tabulate(potential, t0, h, cells)
    g0 = r0 ** (d - 1) * _phi(du0, p - 1.0)
    us, gs = _rk4(p, d, r, v, u0, g0, cells, h)
    if us is None:
        raise NumericError("the initial value problem blew up")
    sol = _build_solution(p, d, r, v, us, gs, potential, {"kind": "ivp"})
    if h < 0:
        idx = slice(None, None, -1)
        sol = RadialSolution(p, d, sol.grid[idx], sol.values[idx], sol.flux[idx], sol.slope[idx],
                             potential, sol.info)
    return sol


def _zero_potential_flux(p, d, rho, R, a, b):
    """Inner flux of the V = 0 solution through (rho, a), (R, b)."""
    alpha = (p - d) / (p - 1)
    if p == d:
        slope_coeff = (b - a) / math.log(R / rho)
        # u = a + c log(r/rho), u' = c / r, g = r^{d-1} |c/r|^{p-2} c/r
        return rho ** (d - 1) * _phi(slope_coeff / rho, p - 1)
    c = (b - a) / (R**alpha - rho**alpha)
    return rho ** (d - 1) * _phi(c * alpha * rho ** (alpha - 1), p - 1)


def solve_radial_dirichlet(problem: RadialProblem, spec: SolverSpec | None = None) -> RadialSolution:
    """Solve the Dirichlet problem by shooting on the inner flux.

    The outer boundary value is an increasing function of the inner flux in
    the regime where the energy is nonnegative; the bracket is grown
    geometrically around the potential-free flux and refined with Brent's
    method.  Failure to bracket raises NoSolution.
    """
    spec = spec or SolverSpec()
    P = problem
    n = spec.cells
    t0 = math.log(P.inner)
    h = (math.log(P.outer) - t0) / n
    r, v = _tabulate(P.potential, t0, h, n)

    def miss(g0):
        u, _ = _rk4(P.p, P.d, r, v, P.bc_inner, g0, n, h, keep=False)
        return u - P.bc_outer

    guess = _zero_potential_flux(P.p, P.d, P.inner, P.outer, P.bc_inner, P.bc_outer)
    scale = max(abs(guess), P.inner ** (P.d - 1) * 1e-3 * max(1.0, abs(P.bc_inner), abs(P.bc_outer)))
    f0 = miss(guess)
    if f0 == 0.0:
        root = guess
    else:
        direction = -1.0 if f0 > 0 else 1.0
        step = scale
        a, fa = guess, f0
        for _ in range(spec.max_expand):
            b = guess + direction * step
            fb = miss(b)
            if math.isnan(fb):
                raise NoSolution("shooting produced NaN")
            if fb == 0.0 or (fb > 0) != (fa > 0):
                break
            a, fa = b, fb
            step *= 2.0
        else:
            raise NoSolution("could not bracket the inner flux")
        if fb == 0.0:
            root = b
        else:
            lo, hi = (a, b) if a < b else (b, a)
            root = optimize.brentq(miss, lo, hi, xtol=spec.xtol * max(abs(lo), abs(hi), 1e-300),
                                   rtol=4 * np.finfo(float).eps, maxiter=400)
    us, gs = _rk4(P.p, P.d, r, v, P.bc_inner, root, n, h)
    if us is None:
        raise NoSolution("the shooting solution blew up")
    err = abs(us[-1] - P.bc_outer)
    if err > spec.bc_tol * max(1.0, abs(P.bc_outer), abs(P.bc_inner)):
        raise NoSolution(f"outer boundary value missed by {err:.3e}")
    us[-1] = P.bc_outer if err <= 1e-13 * max(1.0, abs(P.bc_outer)) else us[-1]
    return _build_solution(P.p, P.d, r, v, us, gs, P.potential,
                           {"kind": "dirichlet", "inner_flux": root, "bc_error": err})


def conservation_residual(sol: RadialSolution) -> np.ndarray:
    """Per-cell ``g_{i+1} - g_i - int r^{d-1} V |u|^{p-2} u dr``.

    The cell integral is Simpson's rule in t, with u at the half node from
    the cubic Hermite interpolant.
    """
    p, d = sol.p, sol.d
    r = sol.grid
    t = np.log(r)
    h = t[1] - t[0]
    vn = sol.info.get("v_nodes")
    vh = sol.info.get("v_half")
    if vn is None:
        vn = np.zeros_like(r)
        vh = np.zeros(len(r) - 1)
    ut = r * sol.slope
    u_mid = 0.5 * (sol.values[:-1] + sol.values[1:]) + h / 8.0 * (ut[:-1] - ut[1:])
    r_mid = np.exp(0.5 * (t[:-1] + t[1:]))

    def src(rr, vv, uu):
        return rr**d * vv * np.sign(uu) * np.abs(uu) ** (p - 1)

    integral = h / 6.0 * (src(r[:-1], vn[:-1], sol.values[:-1]) + 4 * src(r_mid, vh, u_mid)
                          + src(r[1:], vn[1:], sol.values[1:]))
    return np.diff(sol.flux) - integral


def closed_form_dirichlet(p: float, d: int, rho: float, R: float, a: float, b: float) -> Callable:
    """Potential-free solution ``a + c (r^alpha - rho^alpha)`` or its log analogue."""
    if p == d:
        c = (b - a) / math.log(R / rho)
        return lambda r: a + c * np.log(np.asarray(r, float) / rho)
    alpha = (p - d) / (p - 1)
    c = (b - a) / (R**alpha - rho**alpha)
    return lambda r: a + c * (np.asarray(r, float) ** alpha - rho**alpha)


# -- ratio limits -----------------------------------------------------------


@dataclass
class RatioDiagnostics:
    radii: list
    m_seq: list
    M_seq: list
    limit_m: float
    limit_M: float
    regular: bool
    zeta: str
    rtol: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("radii", "m_seq", "M_seq", "limit_m", "limit_M", "regular", "zeta", "rtol")}


def limit_of_sequence(seq: Sequence[float], k: int = 4) -> float:
    """Limit of a positive sequence sampled on a geometric ladder.

    If the last increments contract, the last three terms are Aitken
    extrapolated; if they do not contract the sequence is read as diverging
    and the sign of the log-log trend picks 0 or infinity.
    """
    x = np.asarray(seq, dtype=float)
    if x.size < 3:
        raise InvalidArgument("need at least 3 terms to fit a limit")
    if np.any(np.isinf(x[-2:])):
        return math.inf
    tail = x[-max(k, 3):]
    d1 = np.diff(tail)
    if np.all(d1 == 0):
        return float(tail[-1])
    a, b, c = x[-3:]
    dab, dbc = b - a, c - b
    contracting = abs(dbc) < abs(dab) and dab * dbc >= 0
    if contracting or dbc == 0:
        denom = dbc - dab
        lim = c - dbc * dbc / denom if denom != 0 else c
        if lim <= 1e-10 * np.max(np.abs(x)):
            return 0.0
        return float(lim)
    logs = np.log(tail)
    trend = logs[-1] - logs[0]
    if np.all(np.diff(logs) > 0) and trend > 0:
        return math.inf
    if np.all(np.diff(logs) < 0) and trend < 0:
        return 0.0
    return float(tail[-1])


def _ratio_bounds(u, v, r):
    if isinstance(u, (int, float)) or isinstance(v, (int, float)):
        raise InvalidArgument("u and v must be solutions or callables")
    if hasattr(u, "band_extrema") and hasattr(v, "band_extrema"):
        return u.band_ratio_extrema(v, r)
    uu = float(np.asarray(u(r)))
    vv = float(np.asarray(v(r)))
    if not (uu > 0 and vv > 0):
        raise InvalidArgument(f"nonpositive sample at r={r}")
    q = uu / vv
    return q, q


def ratio_limit(u, v, ladder: Sequence[float], zeta: str = "origin", *, k: int = 4,
                rtol: float = 1e-3) -> RatioDiagnostics:
    """m_r, M_r of u/v on the ladder and their limits toward zeta.

    For radial inputs ``m_r = M_r``.  Inputs with a ``band_ratio_extrema``
    method (planar fields) supply inf and sup over the discrete band.
    """
    if len(ladder) < 3:
        raise InvalidArgument("ladder needs at least 3 rungs")
    ms, Ms = [], []
    for r in ladder:
        if hasattr(u, "band_ratio_extrema"):
            m, M = u.band_ratio_extrema(v, r)
            if not (m > 0):
                raise InvalidArgument(f"nonpositive sample at r={r}")
        else:
            m, M = _ratio_bounds(u, v, r)
        ms.append(m)
        Ms.append(M)
    lm = limit_of_sequence(ms, k)
    lM = limit_of_sequence(Ms, k)
    if math.isinf(lm) and math.isinf(lM):
        regular = True
    elif lm == 0.0 and lM == 0.0:
        regular = True
    elif math.isinf(lm) or math.isinf(lM):
        regular = False
    else:
        regular = (lM - lm) / max(lm, 1e-300) <= rtol
    return RatioDiagnostics(list(ladder), ms, Ms, lm, lM, bool(regular), zeta, rtol)


def monotonicity_check(seq: Sequence[float], direction: str = "decreasing", *,
                       burn_in: float = 0.25, tol: float = 0.0) -> tuple[bool, int | None]:
    """True iff the sequence is monotone after a burn-in prefix (a fraction of its length)."""
    x = np.asarray(seq, dtype=float)
    if x.size < 4:
        raise InvalidArgument("need at least 4 entries")
    if direction not in ("decreasing", "increasing"):
        raise InvalidArgument("direction must be 'decreasing' or 'increasing'")
    start = int(math.ceil(burn_in * x.size))
    scale = tol * np.max(np.abs(x))
    for i in range(max(start, 0), x.size - 1):
        step = x[i + 1] - x[i]
        if direction == "decreasing" and step > scale or direction == "increasing" and step < -scale:
            return False, i + 1
    return True, None


# -- criticality --------------------------------------------------------------


@dataclass
class CriticalityReport:
    p: float
    d: int
    probe: float
    k_ladder: list
    values: list
    closed_form: list
    limit: float
    extrapolated: float
    max_closed_form_error: float
    monotone: bool
    critical: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def criticality_probe(p: float, d: int, matrix: AnisotropyMatrix | None, k_ladder: Sequence[float],
                      probe: float = 2.0, spec: SolverSpec | None = None) -> CriticalityReport:
    """Solve ``w_k = 1`` on ``r = 1``, ``w_k = 0`` on ``r = k`` and follow ``w_k(probe)``.

    The potential-free solution is affine in mu, so
    ``w_k(r) = 1 - (mu(1) - mu(r)) x_k`` with ``x_k = 1/(mu(1) - mu(k))``.
    The limit k -> infinity is the value at ``x = lim x_k`` (0 for p >= d,
    ``1/mu(1)`` for p < d), extrapolated linearly in x from the last two rungs.
    """
    ks = list(k_ladder)
    if len(ks) < 4 or np.any(np.diff(ks) <= 0):
        raise InvalidArgument("k ladder must be increasing with at least 4 values")
    if ks[0] <= probe:
        raise InvalidArgument("every k must exceed the probe radius")
    fs = FundamentalSolution.create(p, d, matrix)
    zero = Potential.zero(d)
    vals, exact = [], []
    for k in ks:
        sol = solve_radial_dirichlet(RadialProblem(p, d, zero, 1.0, float(k), 1.0, 0.0, matrix), spec)
        vals.append(sol(probe))
        exact.append(float(closed_form_dirichlet(p, d, 1.0, k, 1.0, 0.0)(probe)))
    mu1 = float(fs.radial(1.0))
    mur = float(fs.radial(probe))
    if p >= d:
        limit, x_inf = 1.0, 0.0
    else:
        limit, x_inf = mur / mu1, 1.0 / mu1
    xs = [1.0 / (mu1 - float(fs.radial(k))) for k in ks]
    slope = (vals[-1] - vals[-2]) / (xs[-1] - xs[-2])
    extrap = vals[-1] + slope * (x_inf - xs[-1])
    dist = [abs(w - limit) for w in vals]
    mono = all(b < a for a, b in zip(dist[:-1], dist[1:]))
    err = max(abs(a - b) for a, b in zip(vals, exact))
    return CriticalityReport(p, d, probe, ks, vals, exact, limit, extrap, err, mono, p >= d)


# -- asymptotics at the singular point ----------------------------------------


@dataclass
class AsymptoticsReport:
    M: float
    ratios: list
    ladder: list
    classification: str
    zeta: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def asymptotics_probe(u, fs: FundamentalSolution, ladder: Sequence[float], zeta: str = "origin",
                      k: int = 4) -> AsymptoticsReport:
    """Fitted limit of ``u/mu`` at 0 (p <= d) or ``u/(-mu)`` at infinity (p >= d)."""
    if len(ladder) < 3:
        raise InvalidArgument("ladder too short for a fit")
    if zeta == "origin":
        if fs.p > fs.d:
            raise InvalidArgument("at the origin mu is unbounded only for p <= d")
        sign = 1.0
    elif zeta == "infinity":
        if fs.p < fs.d:
            raise InvalidArgument("at infinity -mu is unbounded only for p >= d")
        sign = -1.0
    else:
        raise InvalidArgument("zeta must be 'origin' or 'infinity'")
    ratios = [float(np.asarray(u(r))) / (sign * float(fs.radial(r))) for r in ladder]
    M = limit_of_sequence(ratios, k)
    if M == 0.0:
        cls = "removable" if zeta == "origin" else "bounded"
    elif math.isinf(M):
        cls = "faster_than_mu"
    else:
        cls = "singular" if zeta == "origin" else "mu_growth"
    return AsymptoticsReport(M, ratios, list(ladder), cls, zeta)


def weak_comparison_probe(problem1: RadialProblem, problem2: RadialProblem,
                          spec: SolverSpec | None = None, tol: float = 1e-9) -> bool:
    """Solve both problems and test ``u1 <= u2 + tol`` on the common grid."""
    for attr in ("p", "d", "inner", "outer"):
        if getattr(problem1, attr) != getattr(problem2, attr):
            raise InvalidArgument(f"problems differ in {attr}")
    s1 = solve_radial_dirichlet(problem1, spec)
    s2 = solve_radial_dirichlet(problem2, spec)
    return bool(np.all(s1.values <= s2.values + tol))
