"""Fundamental solutions of the (p, A)-Laplacian and related closed forms.

For constant A the fundamental solution with pole y is

    mu(x) = C |x - y|_{A^-1}^{(p-d)/(p-1)}        (p != d)
    mu(x) = -C log |x - y|_{A^-1}                  (p == d)

with C chosen so that the flux of ``|grad mu|_A^{p-2} A grad mu`` through
any ellipsoid around the pole equals -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .anisotropy import AnisotropyMatrix, Ellipsoid, anorm, anorm_inv, sphere_area, sphere_rule, surface_flux
from .errors import DomainError, InvalidArgument, NumericError
from .quadrature import fd_gradient, radial_integral, shell_integral

__all__ = [
    "FundamentalSolution",
    "IndicialData",
    "fundamental_constant",
    "mu",
    "mu_gradient_flux",
    "flux_integral",
    "capacity_exponent",
    "capacity_constant",
    "weighted_capacity",
    "capacity_quadrature",
    "hardy_constant",
    "indicial_map",
    "indicial_roots",
    "hardy_inequality_check",
]


def _check_p_d(p: float, d: int) -> None:
    if not p > 1:
        raise InvalidArgument("p must exceed 1")
    if int(d) != d or d < 2:
        raise InvalidArgument("dimension must be an integer >= 2")


def fundamental_constant(p: float, d: int, matrix: AnisotropyMatrix) -> float:
    """Normalizing constant C_{p,d,A}; positive for p<d, negative for p>d."""
    _check_p_d(p, d)
    if matrix.dim != d:
        raise InvalidArgument("matrix dimension does not match d")
    s = matrix.sqrt_det * sphere_area(d)
    if p == d:
        return s ** (-1.0 / (d - 1))
    return (p - 1) / (d - p) * s ** (-1.0 / (p - 1))


@dataclass(frozen=True)
class FundamentalSolution:
    """``mu`` for exponents (p, d), matrix A and pole y."""

    p: float
    d: int
    matrix: AnisotropyMatrix
    pole: tuple | None = None

    def __post_init__(self):
        _check_p_d(self.p, self.d)
        if self.matrix.dim != self.d:
            raise InvalidArgument("matrix dimension does not match d")

    @classmethod
    def create(cls, p: float, d: int, matrix: AnisotropyMatrix | None = None, pole=None):
        return cls(p, d, matrix if matrix is not None else AnisotropyMatrix.identity(d),
                   None if pole is None else tuple(map(float, pole)))

    @property
    def constant(self) -> float:
        return fundamental_constant(self.p, self.d, self.matrix)

    @property
    def form(self) -> str:
        return "log" if self.p == self.d else "power"

    @property
    def alpha(self) -> float:
        """Radial exponent (p-d)/(p-1); zero marks the log case."""
        return (self.p - self.d) / (self.p - 1)

    def radial(self, rho):
        """mu as a function of ``rho = |x - y|_{A^-1}``."""
        rho = np.asarray(rho, dtype=float)
        C = self.constant
        with np.errstate(divide="ignore"):
            if self.p == self.d:
                return -C * np.log(rho)
            return C * rho**self.alpha

    def radial_derivatives(self, rho):
        """(mu, mu', mu'') of the radial profile."""
        rho = np.asarray(rho, dtype=float)
        C = self.constant
        if self.p == self.d:
            return -C * np.log(rho), -C / rho, C / rho**2
        a = self.alpha
        return C * rho**a, C * a * rho ** (a - 1), C * a * (a - 1) * rho ** (a - 2)

    def inverse_radial(self, value: float) -> float:
        """Radius at which the radial profile equals ``value``."""
        C = self.constant
        if self.p == self.d:
            return math.exp(-value / C)
        return (value / C) ** (1.0 / self.alpha)

    def _shift(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise InvalidArgument("point dimension does not match d")
        if self.pole is not None:
            x = x - np.asarray(self.pole)
        return x


def mu(fs: FundamentalSolution, x) -> np.ndarray | float:
    """Evaluate the fundamental solution; raises DomainError at the pole."""
    z = fs._shift(x)
    rho = np.asarray(anorm_inv(fs.matrix, z))
    if np.any(rho == 0):
        raise DomainError("the fundamental solution is singular at its pole")
    out = fs.radial(rho)
    return float(out) if out.ndim == 0 else out


def _flux_coefficient(p: float, d: int) -> float:
    if p == d:
        return -1.0
    a = (p - d) / (p - 1)
    return abs(a) ** (p - 2) * a


def mu_gradient_flux(fs: FundamentalSolution, x) -> np.ndarray:
    """Flux field ``eta = |grad mu|_A^{p-2} A grad mu = C|C|^{p-2} c(p,d) |x|^{-d}_{A^-1} x``."""
    z = fs._shift(x)
    rho = np.asarray(anorm_inv(fs.matrix, z))
    if np.any(rho == 0):
        raise DomainError("the flux field is singular at the pole")
    C = fs.constant
    k = C * abs(C) ** (fs.p - 2) * _flux_coefficient(fs.p, fs.d)
    return k * z * (rho ** (-fs.d))[..., None]


def flux_integral(fs: FundamentalSolution, r: float, *, rtol: float = 1e-12) -> float:
    """Outward flux of ``eta`` through the ellipsoid of radius r around the pole."""
    if not r > 0:
        raise InvalidArgument("radius must be positive")
    ell = Ellipsoid(fs.matrix, r, fs.pole)
    return surface_flux(ell, lambda x: mu_gradient_flux(fs, x), rtol=rtol)


# -- weighted capacity ------------------------------------------------------


def capacity_exponent(p: float, d: int, beta: float) -> float:
    """Exponent ``(p-d-beta)/(p-1)`` of the extremal profile."""
    return (p - d - beta) / (p - 1)


def capacity_constant(p: float, d: int, beta: float, matrix: AnisotropyMatrix | None = None) -> float:
    """C' in ``cap = C' |r^g - R^g|^{1-p}``.

    The extremal profile is ``psi = (rho^g - R^g)/(r^g - R^g)`` in
    ``rho = |x|_{A^-1}``.  Since ``|grad rho|_A = 1`` and the volume element is
    ``|A|^{1/2} rho^{d-1} d rho d sigma``, the energy reduces to
    ``|A|^{1/2} omega_d |g|^p / |r^g - R^g|^p * int_r^R rho^{g-1} d rho``,
    and the last integral is ``|R^g - r^g| / |g|``.
    """
    g = capacity_exponent(p, d, beta)
    s = sphere_area(d) * (1.0 if matrix is None else matrix.sqrt_det)
    if g == 0.0:
        return s
    return s * abs(g) ** (p - 1)


def weighted_capacity(p: float, d: int, beta: float | None, r: float, R: float,
                      matrix: AnisotropyMatrix | None = None) -> float:
    """Weighted p-capacity of the ring ``r < |x|_{A^-1} < R`` with weight ``|x|^beta``.

    ``beta`` defaults to ``2(p-d)``.  With ``g = (p-d-beta)/(p-1)`` the value is
    ``C' |r^g - R^g|^{1-p}``, or ``C' log(R/r)^{1-p}`` when ``g = 0``.
    """
    _check_p_d(p, d)
    if beta is None:
        beta = 2.0 * (p - d)
    if not (0 < r < R):
        raise InvalidArgument("capacity needs 0 < r < R")
    g = capacity_exponent(p, d, beta)
    c = capacity_constant(p, d, beta, matrix)
    if g == 0.0:
        return c * math.log(R / r) ** (1 - p)
    if math.isinf(R):
        return c * r ** (g * (1 - p)) if g < 0 else 0.0
    return c * abs(r**g - R**g) ** (1 - p)


def capacity_quadrature(p: float, d: int, beta: float | None, r: float, R: float,
                        matrix: AnisotropyMatrix | None = None, *, n_sphere: int = 16,
                        rtol: float = 1e-10) -> float:
    """Energy ``int |x|_{A^-1}^beta |grad psi|_A^p dx`` of the extremal profile by direct quadrature.

    ``grad psi`` is taken by central differences of psi in Cartesian
    coordinates, so this shares nothing with the closed form except the
    profile itself.
    """
    if beta is None:
        beta = 2.0 * (p - d)
    if not (0 < r < R):
        raise InvalidArgument("capacity needs 0 < r < R")
    A = matrix if matrix is not None else AnisotropyMatrix.identity(d)
    g = capacity_exponent(p, d, beta)

    def psi(x):
        rho = anorm_inv(A, x)
        if g == 0.0:
            return np.log(R / rho) / math.log(R / r)
        return (rho**g - R**g) / (r**g - R**g)

    theta, w = sphere_rule(d, n_sphere)
    L = A.chol
    jac = A.sqrt_det
    eye = np.eye(d)

    def shell(t):
        rho = math.exp(t)
        x = rho * theta @ L.T
        h = 1e-5 * rho
        grad = np.stack([(psi(x + h * e) - psi(x - h * e)) / (2 * h) for e in eye], axis=-1)
        dens = rho**beta * anorm(A, grad) ** p
        # d x = |A|^{1/2} rho^{d-1} d rho d sigma, and d rho = rho d t
        return jac * rho**d * float(np.dot(w, dens))

    val, err = integrate.quad(shell, math.log(r), math.log(R), epsabs=0.0, epsrel=rtol, limit=200)
    if not math.isfinite(val):
        raise NumericError("capacity quadrature produced a non-finite value")
    return val


# -- Hardy constant and indicial exponents -----------------------------------


def hardy_constant(p: float, d: int) -> float:
    """``|(p-d)/p|^p``."""
    return abs((p - d) / p) ** p


def indicial_map(p: float, d: int, gamma):
    """``g(gamma) = |gamma|^{p-2} gamma ((p-1) gamma + d - p)``.

    ``r^gamma`` solves ``-Delta_p u - lam |x|^{-p} u^{p-1} = 0`` exactly when
    ``g(gamma) = -lam``.
    """
    gamma = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(gamma == 0, 0.0, np.abs(gamma) ** (p - 2) * gamma)
    out = mag * ((p - 1) * gamma + d - p)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IndicialData:
    """Real exponents gamma with ``r^gamma`` solving the radial Hardy equation.

    ``roots`` is sorted ascending and holds two entries (equal for the double
    root at ``lam = C_H``), or none when ``lam > C_H``.
    """

    p: float
    d: int
    lam: float
    roots: tuple
    hardy_constant: float
    has_real_roots: bool
    double_root: bool

    def map_value(self, gamma) -> float:
        """``-g(gamma)``, which equals ``lam`` at every stored root."""
        return -indicial_map(self.p, self.d, gamma)


def indicial_roots(p: float, d: int, lam: float, *, xtol: float | None = None) -> IndicialData:
    """Solve ``g(gamma) = -lam`` on both monotone branches of g.

    g decreases on ``(-inf, gc]`` and increases on ``[gc, inf)`` with
    ``gc = (p-d)/p`` and ``g(gc) = -C_H``.  The default ``xtol`` is scaled to the
    leading-order size ``|lam/(d-p)|^{1/(p-1)}`` of the root near 0, so small
    ``lam`` keeps full relative precision.
    """
    _check_p_d(p, d)
    ch = hardy_constant(p, d)
    gc = (p - d) / p
    target = -float(lam)

    def data(roots, double=False):
        return IndicialData(p, d, float(lam), tuple(sorted(roots)), ch, bool(roots), double)

    if lam > ch * (1 + 1e-14) + 1e-300:
        return data(())
    if lam >= ch * (1 - 1e-14):
        return data((gc, gc), True)
    if lam == 0:
        return data((0.0, (p - d) / (p - 1)))

    def f(t):
        return indicial_map(p, d, t) - target

    if xtol is None:
        small = (abs(lam) / abs(d - p)) ** (1.0 / (p - 1)) if d != p else abs(gc)
        xtol = max(min(1e-14, 1e-16 * small), 1e-300)

    roots = []
    for sgn in (-1.0, 1.0):
        step = 1.0
        far = gc + sgn * step
        while f(far) < 0:
            step *= 2.0
            far = gc + sgn * step
            if step > 1e12:
                raise NumericError("could not bracket an indicial root")
        a, b = (far, gc) if sgn < 0 else (gc, far)
        roots.append(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=4000))
    return data(roots)


# -- Hardy inequality -------------------------------------------------------


def hardy_inequality_check(
    p: float,
    d: int,
    u: Callable | None = None,
    *,
    profile: Callable | None = None,
    support: tuple[float, float] = (0.0, 1.0),
    n_sphere: int = 24,
    rtol: float = 1e-9,
) -> tuple[float, float]:
    """Return ``(int |grad u|^p, ((d-p)/p)^p int |u|^p / (1 + |x|^p))``.

    Pass either a radial ``profile(rho)`` or a field ``u(x)`` with x of shape
    (..., d); in both cases the integrand is supported in
    ``support[0] <= |x| <= support[1]`` and derivatives are taken by central
    differences.
    """
    _check_p_d(p, d)
    if p >= d:
        raise InvalidArgument("the Hardy inequality check needs p < d")
    if (u is None) == (profile is None):
        raise InvalidArgument("pass exactly one of u or profile")
    lo, hi = map(float, support)
    if not (0 <= lo < hi):
        raise InvalidArgument("support must satisfy 0 <= inner < outer")
    c = ((d - p) / p) ** p

    if profile is not None:
        def df(rho):
            h = 1e-6 * max(rho, 1e-3)
            return (profile(rho + h) - profile(rho - h)) / (2 * h)

        lhs = radial_integral(d, lambda t: abs(df(t)) ** p, lo, hi, rtol=rtol)
        rhs = c * radial_integral(d, lambda t: abs(profile(t)) ** p / (1 + t**p), lo, hi, rtol=rtol)
    else:
        def grad_p(x):
            return np.linalg.norm(fd_gradient(u, x), axis=-1) ** p

        def weighted(x):
            return np.abs(u(x)) ** p / (1 + np.linalg.norm(x, axis=-1) ** p)

        lhs = shell_integral(d, grad_p, lo, hi, n_sphere=n_sphere, rtol=rtol)
        rhs = c * shell_integral(d, weighted, lo, hi, n_sphere=n_sphere, rtol=rtol)
    return lhs, rhs
