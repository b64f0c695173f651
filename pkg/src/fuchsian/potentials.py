"""Scalar potentials V(x) with enough structure to dilate them exactly.

Every potential except ``generic`` is radial in the Euclidean norm, or in
``|x|_{A^-1}`` when ``matrix`` is set.  Radial potentials expose
``radial(rho)`` and a list of ``breakpoints`` where their profile is not
smooth, which the Morrey quadrature uses to split integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .anisotropy import AnisotropyMatrix, anorm_inv
from .errors import InvalidArgument

__all__ = ["Potential", "bump_profile"]

KINDS = ("zero", "power_law", "radial_table", "annulus_bump", "generic")


def bump_profile(s, shape: str = "smooth"):
    """Unit bump on ``|s| < 1``; ``"smooth"`` is C-infinity, ``"indicator"`` is 1."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    if shape == "indicator":
        return inside.astype(float)
    out = np.zeros_like(s)
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


@dataclass(frozen=True, eq=False)
class Potential:
    """A potential with a structural tag.

    kind="power_law"    V = coeff * rho**exponent
    kind="radial_table" V = piecewise-linear interpolation of (grid, values),
                        zero outside the grid
    kind="annulus_bump" V = sum_n amp_n * bump((rho - R_n) / w_n)
    kind="generic"      V = fn(x), x of shape (..., d)
    kind="zero"         V = 0

    ``homogeneity`` is the degree s with V(tx) = t^s V(x), when known.
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    homogeneity: float | None = None
    matrix: AnisotropyMatrix | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown potential kind {self.kind!r}")
        if self.dim < 2:
            raise InvalidArgument("dimension must be at least 2")
        if self.kind == "radial_table":
            g = np.asarray(self.params["grid"], float)
            v = np.asarray(self.params["values"], float)
            if g.shape != v.shape or g.ndim != 1 or g.size < 2:
                raise InvalidArgument("radial table needs matching 1-d grid and values")
            if np.any(np.diff(g) <= 0) or g[0] < 0:
                raise InvalidArgument("radial table grid must be nonnegative and strictly increasing")
            if not np.all(np.isfinite(v)):
                raise InvalidArgument("radial table values must be finite")
        if self.kind == "annulus_bump":
            n = len(self.params["centers"])
            if len(self.params["widths"]) != n or len(self.params["amplitudes"]) != n:
                raise InvalidArgument("bump centers, widths and amplitudes must have equal length")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Potential":
        return cls("zero", dim, {}, homogeneity=None)

    @classmethod
    def power_law(cls, dim: int, coeff: float, exponent: float, matrix=None) -> "Potential":
        return cls("power_law", dim, {"coeff": float(coeff), "exponent": float(exponent)},
                   homogeneity=float(exponent), matrix=matrix)

    @classmethod
    def hardy(cls, dim: int, p: float, lam: float, matrix=None) -> "Potential":
        """``V = -lam |x|^{-p}``, so that Q(u) = -Delta_p u - lam |x|^{-p} |u|^{p-2}u."""
        return cls.power_law(dim, -lam, -p, matrix=matrix)

    @classmethod
    def constant(cls, dim: int, value: float) -> "Potential":
        return cls.power_law(dim, value, 0.0)

    @classmethod
    def radial_table(cls, dim: int, grid, values, matrix=None) -> "Potential":
        return cls("radial_table", dim,
                   {"grid": tuple(map(float, grid)), "values": tuple(map(float, values))},
                   matrix=matrix)

    @classmethod
    def annulus_bump(cls, dim: int, centers: Sequence[float], widths: Sequence[float],
                     amplitudes: Sequence[float], shape: str = "smooth", matrix=None) -> "Potential":
        return cls("annulus_bump", dim,
                   {"centers": tuple(map(float, centers)), "widths": tuple(map(float, widths)),
                    "amplitudes": tuple(map(float, amplitudes)), "shape": shape},
                   matrix=matrix)

    @classmethod
    def generic(cls, dim: int, fn: Callable, homogeneity: float | None = None) -> "Potential":
        return cls("generic", dim, {"fn": fn, "scale": 1.0, "amplitude": 1.0},
                   homogeneity=homogeneity)

    # -- evaluation -----------------------------------------------------------

    @property
    def is_radial(self) -> bool:
        return self.kind != "generic"

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "power_law":
            return self.params["coeff"] == 0.0
        if self.kind == "annulus_bump":
            return all(a == 0.0 for a in self.params["amplitudes"])
        if self.kind == "radial_table":
            return all(v == 0.0 for v in self.params["values"])
        return False

    def radial(self, rho):
        """Profile as a function of the radial variable."""
        rho = np.asarray(rho, dtype=float)
        k = self.kind
        if k == "zero":
            return np.zeros_like(rho)
        if k == "power_law":
            c, e = self.params["coeff"], self.params["exponent"]
            if c == 0.0:
                return np.zeros_like(rho)
            if e == 0.0:
                return np.full_like(rho, c)
            with np.errstate(divide="ignore"):
                return c * rho**e
        if k == "radial_table":
            g = np.asarray(self.params["grid"])
            v = np.asarray(self.params["values"])
            return np.interp(rho, g, v, left=0.0, right=0.0)
        if k == "annulus_bump":
            out = np.zeros_like(rho)
            for c, w, a in zip(self.params["centers"], self.params["widths"], self.params["amplitudes"]):
                out = out + a * bump_profile((rho - c) / w, self.params.get("shape", "smooth"))
            return out
        raise InvalidArgument("generic potentials have no radial profile")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InvalidArgument(f"point dimension {x.shape[-1]} does not match potential dimension {self.dim}")
        if self.kind == "generic":
            s, a = self.params["scale"], self.params["amplitude"]
            return a * np.asarray(self.params["fn"](s * x), dtype=float)
        if self.matrix is not None:
            rho = anorm_inv(self.matrix, x)
        else:
            rho = np.linalg.norm(x, axis=-1)
        return self.radial(rho)

    def breakpoints(self) -> list[float]:
        """Radii where the radial profile is not smooth (support edges, table knots)."""
        k = self.kind
        if k == "radial_table":
            return list(self.params["grid"])
        if k == "annulus_bump":
            pts = []
            for c, w in zip(self.params["centers"], self.params["widths"]):
                pts += [c - w, c + w]
            return [t for t in pts if t > 0]
        return []

    def singular_exponent(self) -> float:
        """Order k of the blow-up ``rho^{-k}`` at the origin (0 if bounded)."""
        if self.kind == "power_law" and self.params["coeff"] != 0.0:
            return max(0.0, -self.params["exponent"])
        return 0.0

    # -- algebra --------------------------------------------------------------

    def dilate(self, R: float, p: float) -> "Potential":
        """``V_R(x) = R^p V(R x)``, computed structurally (no closure nesting)."""
        if not R > 0:
            raise InvalidArgument("dilation factor must be positive")
        k = self.kind
        P = self.params
        if k == "zero":
            return self
        if k == "power_law":
            e = P["exponent"]
            # exponent == -p keeps coeff bit-for-bit
            factor = 1.0 if e == -p else R ** (p + e)
            return replace(self, params={"coeff": P["coeff"] * factor, "exponent": e})
        if k == "radial_table":
            return replace(self, params={
                "grid": tuple(g / R for g in P["grid"]),
                "values": tuple(v * R**p for v in P["values"]),
            })
        if k == "annulus_bump":
            return replace(self, params={
                "centers": tuple(c / R for c in P["centers"]),
                "widths": tuple(w / R for w in P["widths"]),
                "amplitudes": tuple(a * R**p for a in P["amplitudes"]),
                "shape": P.get("shape", "smooth"),
            })
        return replace(self, params={
            "fn": P["fn"], "scale": P["scale"] * R, "amplitude": P["amplitude"] * R**p,
        })

    def times_power(self, exponent: float) -> "Potential":
        """``x -> |x|^exponent V(x)`` for power laws (exact); other kinds wrap."""
        if exponent == 0.0:
            return self
        if self.kind == "power_law":
            return Potential.power_law(self.dim, self.params["coeff"],
                                       self.params["exponent"] + exponent, matrix=self.matrix)
        if self.kind == "zero":
            return self
        return _WeightedPotential(self, exponent)

    def describe(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        for key, val in self.params.items():
            if key == "fn":
                out[key] = getattr(val, "__name__", "callable")
            else:
                out[key] = list(val) if isinstance(val, tuple) else val
        if self.homogeneity is not None:
            out["homogeneity"] = self.homogeneity
        return out


class _WeightedPotential(Potential):
    """``|x|^e * base(x)`` for a radial base potential."""

    def __init__(self, base: Potential, exponent: float):
        object.__setattr__(self, "kind", base.kind)
        object.__setattr__(self, "dim", base.dim)
        object.__setattr__(self, "params", base.params)
        object.__setattr__(self, "homogeneity",
                           None if base.homogeneity is None else base.homogeneity + exponent)
        object.__setattr__(self, "matrix", base.matrix)
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_exp", exponent)

    def radial(self, rho):
        rho = np.asarray(rho, dtype=float)
        return rho**self._exp * self._base.radial(rho)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        rho = anorm_inv(self.matrix, x) if self.matrix is not None else np.linalg.norm(x, axis=-1)
        return rho**self._exp * self._base(x)

    def breakpoints(self):
        return self._base.breakpoints()

    def singular_exponent(self) -> float:
        return max(0.0, self._base.singular_exponent() - self._exp)

    def dilate(self, R, p):
        raise InvalidArgument("dilate the base potential before weighting it")

    def times_power(self, exponent):
        return _WeightedPotential(self._base, self._exp + exponent)


def as_potential(obj, dim: int) -> Potential:
    if isinstance(obj, Potential):
        return obj
    if obj is None or obj == 0:
        return Potential.zero(dim)
    if isinstance(obj, (int, float)):
        return Potential.constant(dim, float(obj))
    if callable(obj):
        return Potential.generic(dim, obj)
    raise InvalidArgument(f"cannot interpret {obj!r} as a potential")

