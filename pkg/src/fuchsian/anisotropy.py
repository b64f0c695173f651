"""Geometry of a constant symmetric positive-definite matrix.

Everything here works with ``|x|_A = sqrt(A x . x)`` and its dual
``|x|_{A^-1} = sqrt(A^-1 x . x)``, whose sublevel sets are the ellipsoids
``E_A(r)`` that replace balls in the anisotropic setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as _gamma

from .errors import DomainError, InvalidArgument, NumericError, UnsupportedDimension

__all__ = [
    "AnisotropyMatrix",
    "Ellipsoid",
    "sphere_area",
    "anorm",
    "anorm_inv",
    "quad_form_gradient",
    "invert_point",
    "kelvin_transform",
    "sphere_rule",
    "surface_quadrature",
    "surface_flux",
]


def sphere_area(d: int) -> float:
    """Hypersurface area ``omega_d`` of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2) / _gamma(d / 2)


@dataclass(frozen=True, eq=False)
class AnisotropyMatrix:
    """A fixed SPD matrix together with the quantities derived from it.

    Construction validates symmetry (relative 1e-12) and positive
    definiteness (Cholesky must succeed); nothing is silently projected.
    """

    entries: np.ndarray
    inverse: np.ndarray = field(init=False, repr=False)
    det: float = field(init=False)
    eig_min: float = field(init=False)
    eig_max: float = field(init=False)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument(f"matrix must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise InvalidArgument("dimension must be at least 2")
        scale = np.max(np.abs(a))
        if not np.all(np.isfinite(a)) or scale == 0:
            raise InvalidArgument("matrix entries must be finite and not all zero")
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise InvalidArgument("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise InvalidArgument("matrix is not positive definite") from exc
        eig = np.linalg.eigvalsh(a)
        a.setflags(write=False)
        inv = np.linalg.inv(a)
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "det", float(np.prod(np.diag(chol)) ** 2))
        object.__setattr__(self, "eig_min", float(eig[0]))
        object.__setattr__(self, "eig_max", float(eig[-1]))
        object.__setattr__(self, "chol", chol)

    @classmethod
    def identity(cls, d: int) -> "AnisotropyMatrix":
        return cls(np.eye(d))

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "AnisotropyMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_spec(cls, spec, d: int | None = None) -> "AnisotropyMatrix":
        """Build from ``"identity"``, a diagonal list, or a full row-major list.

        A flat list of length d*d is read as a full matrix when ``d`` is
        given, otherwise a flat list is a diagonal.
        """
        if isinstance(spec, AnisotropyMatrix):
            return spec
        if isinstance(spec, str):
            if spec != "identity":
                raise InvalidArgument(f"unknown matrix spec {spec!r}")
            if d is None:
                raise InvalidArgument("identity matrix needs a dimension")
            return cls.identity(d)
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 2:
            return cls(arr)
        if d is not None and arr.size == d * d:
            return cls(arr.reshape(d, d))
        return cls.diagonal(arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def theta(self) -> float:
        """Ellipticity ratio eig_max / eig_min."""
        return self.eig_max / self.eig_min

    @property
    def sqrt_det(self) -> float:
        return math.sqrt(self.det)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.entries, np.eye(self.dim)))

    def to_list(self) -> list[list[float]]:
        return self.entries.tolist()

    def __eq__(self, other):
        if not isinstance(other, AnisotropyMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash(self.entries.tobytes())


def _check_dim(matrix: AnisotropyMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != matrix.dim:
        raise InvalidArgument(f"vector length {x.shape[-1]} does not match dimension {matrix.dim}")
    return x


def _quad(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", x, m, x)


def anorm(matrix: AnisotropyMatrix, x) -> np.ndarray | float:
    """``|x|_A``; accepts a single vector or an array of shape (..., d)."""
    x = _check_dim(matrix, x)
    out = np.sqrt(np.maximum(_quad(matrix.entries, x), 0.0))
    return float(out) if out.ndim == 0 else out


def anorm_inv(matrix: AnisotropyMatrix, x) -> np.ndarray | float:
    """``|x|_{A^-1}``; accepts a single vector or an array of shape (..., d)."""
    x = _check_dim(matrix, x)
    out = np.sqrt(np.maximum(_quad(matrix.inverse, x), 0.0))
    return float(out) if out.ndim == 0 else out


def quad_form_gradient(matrix: AnisotropyMatrix, x) -> np.ndarray:
    """Gradient of ``x -> A x . x``, which is ``2 A x``."""
    x = _check_dim(matrix, x)
    return 2.0 * x @ matrix.entries.T


def invert_point(matrix: AnisotropyMatrix, x) -> np.ndarray:
    """Inverse point with respect to the unit ellipsoid: ``x / |x|^2_{A^-1}``."""
    x = _check_dim(matrix, x)
    n2 = _quad(matrix.inverse, x)
    if np.any(n2 == 0):
        raise DomainError("the origin has no inverse point")
    return x / np.asarray(n2)[..., None]


def kelvin_transform(matrix: AnisotropyMatrix, u: Callable, x):
    """Generalized Kelvin transform ``K[u](x) = u(x~)``.

    ``u`` is called with an array of shape (..., d).
    """
    return u(invert_point(matrix, x))


@dataclass(frozen=True)
class Ellipsoid:
    """``E_A(r)``, optionally translated to ``center``."""

    matrix: AnisotropyMatrix
    radius: float
    center: tuple | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgument("ellipsoid radius must be positive")

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def _c(self) -> np.ndarray:
        return np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)

    def level(self, x) -> np.ndarray | float:
        return anorm_inv(self.matrix, np.asarray(x, float) - self._c())

    def contains(self, x) -> np.ndarray | bool:
        return self.level(x) < self.radius

    def on_boundary(self, x, tol: float = 1e-12) -> np.ndarray | bool:
        return np.abs(self.level(x) - self.radius) <= tol * self.radius

    def affine_area(self) -> float:
        """``r^{d-1} |A|^{1/2} omega_d``, the mass of the push-forward measure."""
        return self.radius ** (self.dim - 1) * self.matrix.sqrt_det * sphere_area(self.dim)


def sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the unit sphere of R^d (d = 2 or 3).

    d=2 uses the n-point periodic trapezoid rule; d=3 uses n Gauss-Legendre
    nodes in cos(theta) times 2n trapezoid nodes in the azimuth.
    """
    if d == 2:
        t = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(t), np.sin(t)], axis=-1), np.full(n, 2.0 * math.pi / n)
    if d == 3:
        z, wz = np.polynomial.legendre.leggauss(n)
        m = 2 * n
        phi = 2.0 * math.pi * np.arange(m) / m
        s = np.sqrt(1.0 - z**2)
        pts = np.stack(
            [
                np.outer(s, np.cos(phi)),
                np.outer(s, np.sin(phi)),
                np.repeat(z[:, None], m, axis=1),
            ],
            axis=-1,
        ).reshape(-1, 3)
        w = np.outer(wz, np.full(m, 2.0 * math.pi / m)).ravel()
        return pts, w
    raise UnsupportedDimension(f"sphere quadrature supports d in {{2, 3}}, got {d}")


def _adaptive(level_sum: Callable[[int], float], n0: int, rtol: float, max_n: int) -> float:
    n = n0
    prev = level_sum(n)
    while True:
        n *= 2
        cur = level_sum(n)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) or (cur == 0.0 and prev == 0.0):
            return cur
        if n >= max_n:
            raise NumericError(
                f"surface quadrature did not converge (last two levels {prev!r}, {cur!r})"
            )
        prev = cur


def surface_quadrature(
    ellipsoid: Ellipsoid,
    integrand: Callable[[np.ndarray], np.ndarray],
    *,
    measure: str = "euclidean",
    rtol: float = 1e-10,
    n0: int = 16,
    max_n: int = 4096,
) -> float:
    """Integrate ``integrand`` over the boundary of an ellipsoid.

    The boundary is parametrized as ``x = c + r L theta`` with ``A = L L^T``
    and ``|theta| = 1``.

    Parameters
    ----------
    measure : {"euclidean", "affine"}
        ``"euclidean"`` is the genuine hypersurface measure
        ``dS = r^{d-1} det(L) |L^{-T} theta| dsigma``. ``"affine"`` is the
        push-forward of the sphere measure, ``r^{d-1} det(L) dsigma``; its
        total mass is ``r^{d-1}|A|^{1/2} omega_d``. Paired with the
        non-unit normal ``A^{-1}x/|x|_{A^-1}`` the affine measure gives the
        same vector area element as the Euclidean one.
    rtol : float
        Levels are doubled until two successive results agree to ``rtol``.
    """
    d = ellipsoid.dim
    if d > 3:
        raise UnsupportedDimension("surface quadrature is implemented for d = 2, 3 only")
    if measure not in ("euclidean", "affine"):
        raise InvalidArgument(f"unknown measure {measure!r}")
    L = ellipsoid.matrix.chol
    Linv_T = np.linalg.inv(L).T
    r = ellipsoid.radius
    c = ellipsoid._c()
    jac = r ** (d - 1) * math.sqrt(ellipsoid.matrix.det)

    def level_sum(n: int) -> float:
        theta, w = sphere_rule(d, n)
        x = c + r * theta @ L.T
        vals = np.asarray(integrand(x), dtype=float)
        if vals.shape != w.shape:
            vals = np.broadcast_to(vals, w.shape)
        if not np.all(np.isfinite(vals)):
            raise NumericError("integrand returned non-finite values on the boundary")
        if measure == "euclidean":
            w = w * np.linalg.norm(theta @ Linv_T.T, axis=-1)
        return float(jac * np.dot(w, vals))

    return _adaptive(level_sum, n0, rtol, max_n)


def surface_flux(
    ellipsoid: Ellipsoid,
    field_fn: Callable[[np.ndarray], np.ndarray],
    *,
    rtol: float = 1e-10,
    n0: int = 16,
    max_n: int = 4096,
) -> float:
    """Outward flux ``int F . n dS`` of a vector field through the boundary.

    Uses the vector area element ``n dS = r^{d-1} det(L) L^{-T} theta dsigma``.
    """
    d = ellipsoid.dim
    if d > 3:
        raise UnsupportedDimension("surface quadrature is implemented for d = 2, 3 only")
    L = ellipsoid.matrix.chol
    Linv_T = np.linalg.inv(L).T
    r = ellipsoid.radius
    c = ellipsoid._c()
    jac = r ** (d - 1) * math.sqrt(ellipsoid.matrix.det)

    def level_sum(n: int) -> float:
        theta, w = sphere_rule(d, n)
        x = c + r * theta @ L.T
        F = np.asarray(field_fn(x), dtype=float)
        if not np.all(np.isfinite(F)):
            raise NumericError("vector field returned non-finite values on the boundary")
        normal = theta @ Linv_T.T
        return float(jac * np.dot(w, np.einsum("ij,ij->i", F, normal)))

    return _adaptive(level_sum, n0, rtol, max_n)
