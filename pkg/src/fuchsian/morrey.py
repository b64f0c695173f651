"""Local Morrey norms and the Fuchsian scaling test for potentials.

``||f||_{M^q(w)} = sup_{y in w, 0 < r < diam w} r^{-d/q'} int_{w cap B_r(y)} |f|``

The supremum is estimated from below over a finite family of centers and
radii.  The family is scale covariant (radii are fractions of diam w, centers
sit on a lattice relative to w) and nested under refinement, so estimates are
nondecreasing as the family grows and exactly homogeneous under dilation.

For radial integrands on origin-centred balls and annuli only ``s = |y|``
matters, and each ball integral collapses to a 1-d integral against the
measure of ``B_r(y)`` on spheres of radius rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import betainc

from .anisotropy import AnisotropyMatrix, anorm_inv, sphere_area
from .errors import Diverged, InvalidArgument, NumericError
from .potentials import Potential, as_potential, bump_profile
from .quadrature import fd_gradient, radial_integral, shell_integral

__all__ = [
    "MorreyContext",
    "Potential",
    "Ball",
    "Annulus",
    "Box",
    "GridSpec",
    "MorreyEstimate",
    "FuchsianReport",
    "default_q",
    "morrey_estimate",
    "morrey_norm",
    "morrey_norm_critical",
    "special_norm",
    "weighted_fuchsian_norm",
    "fuchsian_check",
    "dilate_potential",
    "dilation_norm_sequence",
    "morrey_adams_min_constant",
    "ball_sphere_fraction",
    "bump_profile",
]


# -- exponents --------------------------------------------------------------


def default_q(p: float, d: int) -> float:
    """A valid default Morrey exponent for each regime."""
    if p < d:
        return 2.0 if 2.0 > d / p else d / p + 1.0
    if p == d:
        return d + 1.0
    return 1.0


@dataclass(frozen=True)
class MorreyContext:
    """Exponents (p, q, d) and the regime they fall in."""

    p: float
    q: float
    dim: int

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidArgument("p must exceed 1")
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidArgument("dimension must be an integer >= 2")
        if not self.q >= 1:
            raise InvalidArgument("q must be at least 1")
        if self.regime == "subdim" and not self.q > self.dim / self.p:
            raise InvalidArgument(f"p < d needs q > d/p = {self.dim / self.p}")
        if self.regime == "critical" and not self.q > self.dim:
            raise InvalidArgument(f"p = d needs q > d = {self.dim}")

    @classmethod
    def create(cls, p: float, dim: int, q: float | None = None) -> "MorreyContext":
        return cls(float(p), default_q(p, dim) if q is None else float(q), int(dim))

    @property
    def regime(self) -> str:
        if self.p < self.dim:
            return "subdim"
        if self.p == self.dim:
            return "critical"
        return "superdim"

    @property
    def q_eff(self) -> float:
        """Exponent actually used: superdim reads q as 1 (the L^1 norm)."""
        return 1.0 if self.regime == "superdim" else self.q

    @property
    def q_conj(self) -> float:
        q = self.q_eff
        if q == 1.0:
            return math.inf
        if math.isinf(q):
            return 1.0
        return q / (q - 1.0)

    @property
    def d_conj(self) -> float:
        return self.dim / (self.dim - 1.0)

    @property
    def weight_exponent(self) -> float:
        """``p - d/q`` (p - d in the superdim regime; unused at p = d)."""
        q = self.q_eff
        return self.p - (0.0 if math.isinf(q) else self.dim / q)

    def radius_power(self) -> float:
        """``-d/q'``, the power of r in the Morrey weight."""
        qc = self.q_conj
        return 0.0 if math.isinf(qc) else -self.dim / qc

    def phi(self, r, diam: float):
        """Critical weight ``log^{q/d'}(diam/r)``."""
        return np.log(diam / np.asarray(r, float)) ** (self.q / self.d_conj)


# -- windows ----------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Euclidean ball ``|x - center| < radius``."""

    dim: int
    radius: float
    center: tuple | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgument("empty window: ball radius must be positive")

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    @property
    def origin_centred(self) -> bool:
        return self.center is None or not any(self.center)

    def radial_range(self) -> tuple[float, float]:
        return 0.0, self.radius

    def contains(self, x):
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)
        return np.linalg.norm(np.asarray(x) - c, axis=-1) < self.radius

    def bounding_box(self):
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Annulus:
    """``inner_factor R <= |x|_{A^-1} < outer_factor R``; defaults give ``R/2 <= |x| < 3R/2``."""

    matrix: AnisotropyMatrix
    R: float
    inner_factor: float = 0.5
    outer_factor: float = 1.5

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidArgument("annulus radius must be positive")
        if not (0 <= self.inner_factor < 1 < self.outer_factor):
            raise InvalidArgument("annulus needs inner_factor < 1 < outer_factor")

    @classmethod
    def euclidean(cls, dim: int, R: float, inner_factor: float = 0.5, outer_factor: float = 1.5):
        return cls(AnisotropyMatrix.identity(dim), R, inner_factor, outer_factor)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def inner(self) -> float:
        return self.inner_factor * self.R

    @property
    def outer(self) -> float:
        return self.outer_factor * self.R

    @property
    def diam(self) -> float:
        return 2.0 * self.outer * math.sqrt(self.matrix.eig_max)

    @property
    def origin_centred(self) -> bool:
        return self.matrix.is_identity()

    def radial_range(self) -> tuple[float, float]:
        return self.inner, self.outer

    def scaled(self, factor: float) -> "Annulus":
        return Annulus(self.matrix, self.R * factor, self.inner_factor, self.outer_factor)

    def contains(self, x):
        rho = anorm_inv(self.matrix, x)
        return (rho >= self.inner) & (rho < self.outer)

    def bounding_box(self):
        half = self.outer * np.sqrt(np.diag(self.matrix.entries))
        return -half, half


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= x < hi``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(b <= a for a, b in zip(self.lo, self.hi)):
            raise InvalidArgument("empty window: box needs lo < hi in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diam(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    origin_centred = False

    def contains(self, x):
        x = np.asarray(x)
        return np.all((x >= np.asarray(self.lo)) & (x < np.asarray(self.hi)), axis=-1)

    def bounding_box(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)


# -- the finite (center, radius) family -------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Finite family over which the Morrey supremum is taken.

    Level ``l`` uses ``centers * 2^l`` center intervals across the window
    and ``radii_per_octave * 2^l`` radii per octave over ``octaves`` octaves
    below diam.  Level l+1 contains level l.  Refinement stops when two
    consecutive levels agree to ``refine_rtol`` or ``max_levels`` is hit.
    """

    centers: int = 8
    radii_per_octave: int = 4
    octaves: int = 10
    max_levels: int = 4
    refine_rtol: float = 0.01
    rtol: float = 1e-6
    generic_samples: int = 0

    def radii(self, diam: float, level: int) -> np.ndarray:
        m = self.radii_per_octave * 2**level
        j = np.arange(1, self.octaves * m + 1)
        return diam * 2.0 ** (-j / m)

    def n_centers(self, level: int) -> int:
        return self.centers * 2**level


@dataclass
class MorreyEstimate:
    """Lower-bound estimate of a Morrey-type supremum."""

    value: float
    center: float | tuple | None
    radius: float | None
    levels: list = field(default_factory=list)
    converged: bool = True


# -- ball / sphere geometry -------------------------------------------------


def ball_sphere_fraction(d: int, rho, s, r):
    """Fraction of the sphere ``|x| = rho`` lying in ``B_r(y)`` with ``|y| = s``."""
    rho = np.asarray(rho, float)
    s = np.asarray(s, float)
    r = np.asarray(r, float)
    rho, s, r = np.broadcast_arrays(rho, s, r)
    out = np.zeros(rho.shape)
    full = rho + s <= r
    out[full] = 1.0
    cap = ~full & (rho < s + r) & (rho > s - r) & (s > 0) & (rho > 0)
    if np.any(cap):
        c = (rho[cap] ** 2 + s[cap] ** 2 - r[cap] ** 2) / (2 * rho[cap] * s[cap])
        c = np.clip(c, -1.0, 1.0)
        sin2 = 1.0 - c * c
        half = 0.5 * betainc((d - 1) / 2.0, 0.5, sin2)
        out[cap] = np.where(c >= 0, half, 1.0 - half)
    return out


_GL = {n: np.polynomial.legendre.leggauss(n) for n in (32, 64)}


def _piece_integrals(d, prof, a, b, s, r, sing, kind, n):
    """Integrate ``rho^{d-1} prof(rho) F(rho; s, r)`` over pieces [a, b].

    ``kind`` 1 marks a piece starting at 0 with ``|prof| ~ rho^{-sing}``,
    mapped by ``rho = b t^m`` with ``m = 1/(d - sing)`` so the integrand is
    regular in t.  Other pieces use ``rho = mid - half cos(phi)``, which
    absorbs square-root behaviour at tangencies.
    """
    x, w = _GL[n]
    K = a.size
    out = np.zeros(K)
    reg = kind == 0
    if np.any(reg):
        phi = 0.5 * math.pi * (x + 1.0)
        mid = 0.5 * (a[reg] + b[reg])[:, None]
        half = 0.5 * (b[reg] - a[reg])[:, None]
        rho = mid - half * np.cos(phi)[None, :]
        jac = half * np.sin(phi)[None, :] * (0.5 * math.pi)
        f = rho ** (d - 1) * prof(rho) * ball_sphere_fraction(d, rho, s[reg][:, None], r[reg][:, None])
        out[reg] = (f * jac) @ w
    if np.any(~reg):
        m = 1.0 / (d - sing)
        t = 0.5 * (x + 1.0)
        bb = b[~reg][:, None]
        rho = bb * t[None, :] ** m
        # rho^{d-1} |prof| d rho = (b^{d-sing} m) * (rho^{sing} |prof|) * t^{m(d-sing)-1} dt, the last power is 0
        g = rho**sing * prof(rho)
        f = g * bb ** (d - sing) * m * ball_sphere_fraction(d, rho, s[~reg][:, None], r[~reg][:, None])
        out[~reg] = 0.5 * (f @ w)
    return out


def _radial_ball_integrals(d, prof, window_lo, window_hi, breaks, sing, s, r, rtol):
    """``int_{w cap B_r(y)} prof(|x|) dx`` for all pairs (s, r), w = {lo <= |x| < hi}."""
    pieces_a, pieces_b, owner, kinds = [], [], [], []
    for k, (sk, rk) in enumerate(zip(s, r)):
        lo = max(window_lo, sk - rk, 0.0)
        hi = min(window_hi, sk + rk)
        if hi <= lo:
            continue
        cuts = {lo, hi, abs(sk - rk), sk + rk}
        cuts.update(breaks)
        pts = sorted(c for c in cuts if lo <= c <= hi)
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a <= 1e-15 * hi:
                continue
            if a == 0.0 and sing > 0:
                pieces_a += [0.0, 0.5 * b]
                pieces_b += [0.5 * b, b]
                owner += [k, k]
                kinds += [1, 0]
            else:
                pieces_a.append(a)
                pieces_b.append(b)
                owner.append(k)
                kinds.append(0)
    total = np.zeros(len(s))
    if not pieces_a:
        return total
    a = np.asarray(pieces_a)
    b = np.asarray(pieces_b)
    own = np.asarray(owner)
    kind = np.asarray(kinds)
    ss = np.asarray(s)[own]
    rr = np.asarray(r)[own]
    coarse = _piece_integrals(d, prof, a, b, ss, rr, sing, kind, 32)
    fine = _piece_integrals(d, prof, a, b, ss, rr, sing, kind, 64)
    bad = np.abs(fine - coarse) > rtol * np.maximum(np.abs(fine), 1e-300) + 1e-300
    for i in np.flatnonzero(bad):
        if kind[i] == 1:
            m = 1.0 / (d - sing)

            def h(t, i=i):
                rho = b[i] * t**m
                return (rho**sing * prof(np.array([rho]))[0] * b[i] ** (d - sing) * m
                        * ball_sphere_fraction(d, rho, ss[i], rr[i]))
            val = integrate.quad(h, 0.0, 1.0, epsabs=0.0, epsrel=rtol * 0.1, limit=200)[0]
        else:
            def h(rho, i=i):
                return rho ** (d - 1) * prof(np.array([rho]))[0] * ball_sphere_fraction(d, rho, ss[i], rr[i])
            val = integrate.quad(h, a[i], b[i], epsabs=0.0, epsrel=rtol * 0.1, limit=200)[0]
        fine[i] = val
    np.add.at(total, own, fine)
    return total * sphere_area(d)


def _is_radial_case(f: Potential, window) -> bool:
    if not f.is_radial:
        return False
    if f.matrix is not None and not f.matrix.is_identity():
        return False
    return isinstance(window, (Ball, Annulus)) and window.origin_centred


def _generic_setup(f: Potential, window, n: int):
    lo, hi = window.bounding_box()
    d = window.dim
    h = (hi - lo) / n
    axes = [lo[i] + h[i] * (np.arange(n) + 0.5) for i in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    inside = window.contains(pts)
    pts = pts[inside]
    vals = np.abs(np.asarray(f(pts), float)) * float(np.prod(h))
    return pts, vals


# -- the estimator ----------------------------------------------------------


def _family_sup(d, window, grid: GridSpec, weight: Callable, f: Potential, level: int):
    """Sup of ``weight(r) * int_{w cap B_r(y)} |f|`` over the level-``level`` family."""
    radii = grid.radii(window.diam, level)
    nc = grid.n_centers(level)
    if _is_radial_case(f, window):
        lo, hi = window.radial_range()
        s_vals = lo + (hi - lo) * np.arange(nc) / nc
        S, Rr = np.meshgrid(s_vals, radii, indexing="ij")
        S, Rr = S.ravel(), Rr.ravel()
        prof = lambda rho: np.abs(f.radial(rho))  # noqa: E731
        vals = _radial_ball_integrals(d, prof, lo, hi, f.breakpoints(), f.singular_exponent(),
                                      S, Rr, grid.rtol)
        cand = weight(Rr) * vals
        k = int(np.argmax(cand))
        return float(cand[k]), float(S[k]), float(Rr[k])
    n = grid.generic_samples or (128 if d == 2 else 40)
    pts, vals = _generic_setup(f, window, 2 * (n // 2))
    lo, hi = window.bounding_box()
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(nc) + 0.5) / nc for i in range(d)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    centers = centers[window.contains(centers)]
    best = (0.0, None, None)
    for c in centers:
        dist = np.linalg.norm(pts - c, axis=-1)
        order = np.argsort(dist)
        cum = np.cumsum(vals[order])
        idx = np.searchsorted(dist[order], radii, side="left")
        masses = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        cand = weight(radii) * masses
        k = int(np.argmax(cand))
        if cand[k] > best[0]:
            best = (float(cand[k]), tuple(c), float(radii[k]))
    return best


def _check_divergence(f: Potential, window) -> None:
    k = f.singular_exponent()
    if k <= 0:
        return
    contains_origin = isinstance(window, Ball) and window.origin_centred
    if isinstance(window, Box):
        contains_origin = bool(window.contains(np.zeros(window.dim)))
    if isinstance(window, Annulus) and window.inner_factor == 0:
        contains_origin = True
    if contains_origin and k >= window.dim:
        raise Diverged(f"|x|^-{k} is not integrable near the origin in dimension {window.dim}")


def _estimate(ctx: MorreyContext, f: Potential, window, grid: GridSpec, weight: Callable) -> MorreyEstimate:
    if window.dim != ctx.dim:
        raise InvalidArgument("window dimension does not match the context")
    if f.is_zero:
        return MorreyEstimate(0.0, None, None, [0.0], True)
    _check_divergence(f, window)
    levels = []
    best = (0.0, None, None)
    converged = False
    for level in range(grid.max_levels):
        cur = _family_sup(ctx.dim, window, grid, weight, f, level)
        if not math.isfinite(cur[0]):
            raise Diverged("Morrey functional is not finite on the sampled family")
        prev = best[0]
        if cur[0] > best[0]:
            best = cur
        levels.append(best[0])
        if level > 0 and best[0] - prev <= grid.refine_rtol * best[0]:
            converged = True
            break
    if not converged and len(levels) >= 2:
        # the last increments keep growing: refinement is chasing a singularity
        steps = np.diff(levels)
        if len(steps) >= 2 and steps[-1] > steps[-2] > 0:
            raise Diverged("Morrey estimate grows under refinement")
    return MorreyEstimate(best[0], best[1], best[2], levels, converged)


def morrey_estimate(ctx: MorreyContext, f, window, grid: GridSpec | None = None) -> MorreyEstimate:
    """Full estimate (value, maximizing center and radius, level history)."""
    grid = grid or GridSpec()
    f = as_potential(f, ctx.dim)
    if math.isinf(ctx.q_eff):
        return _sup_norm(ctx, f, window, grid)
    power = ctx.radius_power()
    return _estimate(ctx, f, window, grid, lambda r: np.asarray(r, float) ** power)


def _sup_norm(ctx, f: Potential, window, grid: GridSpec) -> MorreyEstimate:
    if _is_radial_case(f, window):
        lo, hi = window.radial_range()
        n = 64 * grid.n_centers(grid.max_levels)
        rho = lo + (hi - lo) * (np.arange(n) + 0.5) / n
        vals = np.abs(f.radial(rho))
        k = int(np.argmax(vals))
        return MorreyEstimate(float(vals[k]), float(rho[k]), None, [float(vals[k])])
    pts, _ = _generic_setup(f, window, grid.generic_samples or (128 if ctx.dim == 2 else 40))
    vals = np.abs(np.asarray(f(pts), float))
    k = int(np.argmax(vals))
    return MorreyEstimate(float(vals[k]), tuple(pts[k]), None, [float(vals[k])])


def morrey_norm(ctx: MorreyContext, f, window, grid: GridSpec | None = None) -> float:
    """``sup_{y, r} r^{-d/q'} int_{w cap B_r(y)} |f|`` over the finite family."""
    return morrey_estimate(ctx, f, window, grid).value


def morrey_norm_critical(ctx: MorreyContext, f, window, grid: GridSpec | None = None) -> float:
    """``sup_{y, r} log^{q/d'}(diam/r) int_{w cap B_r(y)} |f|`` (p = d).

    Radii are strictly below diam by construction of the family.
    """
    if ctx.regime != "critical":
        raise InvalidArgument("the log-weighted norm is defined for p = d")
    grid = grid or GridSpec()
    f = as_potential(f, ctx.dim)
    diam = window.diam
    return _estimate(ctx, f, window, grid, lambda r: ctx.phi(r, diam)).value


def special_norm(ctx: MorreyContext, f, window, grid: GridSpec | None = None) -> float:
    """Norm of ``M^q(p; w)``: Morrey for p<d, log-weighted for p=d, L^1 for p>d."""
    if ctx.regime == "critical":
        return morrey_norm_critical(ctx, f, window, grid)
    return morrey_norm(ctx, f, window, grid)


def weighted_fuchsian_norm(ctx: MorreyContext, V, annulus: Annulus, grid: GridSpec | None = None) -> float:
    """``|| |x|^{p-d/q} V ||`` on the annulus for p != d, ``||V||`` with the log weight for p = d."""
    if annulus.dim != ctx.dim:
        raise InvalidArgument("annulus dimension does not match the context")
    V = as_potential(V, ctx.dim)
    if ctx.regime == "critical":
        return morrey_norm_critical(ctx, V, annulus, grid)
    return morrey_norm(ctx, V.times_power(ctx.weight_exponent), annulus, grid)


@dataclass
class FuchsianReport:
    """Weighted norms on annuli ``A_R`` along a ladder toward the singular point."""

    radii: list
    norms: list
    bound: float
    is_fuchsian: bool
    regime: str
    zeta: str
    stability_factor: float
    ratio: float
    diverged_radius: float | None = None

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii), "norms": list(self.norms), "bound": self.bound,
            "is_fuchsian": self.is_fuchsian, "regime": self.regime, "zeta": self.zeta,
            "stability_factor": self.stability_factor, "ratio": self.ratio,
            "diverged_radius": self.diverged_radius,
        }


def dyadic_ladder(zeta: str, count: int = 6, start: float = 1.0) -> list[float]:
    if zeta not in ("origin", "infinity"):
        raise InvalidArgument("zeta must be 'origin' or 'infinity'")
    f = 0.5 if zeta == "origin" else 2.0
    return [start * f**n for n in range(count)]


def stability_ratio(norms: Sequence[float]) -> float:
    """max/min, with 0/0 read as 1."""
    hi, lo = max(norms), min(norms)
    if hi == 0.0:
        return 1.0
    if lo == 0.0:
        return math.inf
    return hi / lo


def fuchsian_check(ctx: MorreyContext, V, zeta: str = "origin", radii: Sequence[float] | None = None,
                   *, stability_factor: float = 10.0, grid: GridSpec | None = None) -> FuchsianReport:
    """Evaluate the weighted norm on each ``A_R`` and test uniform boundedness."""
    V = as_potential(V, ctx.dim)
    radii = list(radii) if radii is not None else dyadic_ladder(zeta)
    if len(radii) < 4:
        raise InvalidArgument("the ladder needs at least 4 radii")
    toward = np.diff(radii)
    if zeta == "origin" and not np.all(toward < 0) or zeta == "infinity" and not np.all(toward > 0):
        raise InvalidArgument(f"ladder must tend monotonically to {zeta}")
    matrix = V.matrix if V.matrix is not None else AnisotropyMatrix.identity(ctx.dim)
    norms = []
    for R in radii:
        try:
            val = weighted_fuchsian_norm(ctx, V, Annulus(matrix, R), grid)
        except (Diverged, NumericError):
            return FuchsianReport(radii, norms + [math.inf], math.inf, False, ctx.regime, zeta,
                                  stability_factor, math.inf, R)
        norms.append(val)
    bound = max(norms)
    ratio = stability_ratio(norms)
    ok = all(math.isfinite(v) for v in norms) and ratio <= stability_factor
    return FuchsianReport(radii, norms, bound, ok, ctx.regime, zeta, stability_factor, ratio)


def dilate_potential(V: Potential, R: float, *, p: float) -> Potential:
    """``V_R(x) = R^p V(R x)``."""
    return V.dilate(R, p)


def dilation_norm_sequence(ctx: MorreyContext, V, R_seq: Sequence[float], test_region,
                           grid: GridSpec | None = None) -> list[float]:
    """``||V_R||`` in ``M^q(p; test_region)`` for each R of the sequence."""
    V = as_potential(V, ctx.dim)
    return [special_norm(ctx, V.dilate(R, ctx.p), test_region, grid) for R in R_seq]


def morrey_adams_min_constant(ctx: MorreyContext, V, delta: float, *, u: Callable | None = None,
                              profile: Callable | None = None,
                              support: tuple[float, float] = (0.0, 1.0), rtol: float = 1e-9) -> float:
    """Smallest C with ``int |V||u|^p <= delta ||grad u||_p^p + C ||u||_p^p`` for this u.

    ``u`` is a field on points of shape (n, d), or ``profile`` a radial profile,
    supported in ``support[0] <= |x| <= support[1]``; V must be radial when a
    profile is given.
    """
    if not delta > 0:
        raise InvalidArgument("delta must be positive")
    V = as_potential(V, ctx.dim)
    p, d = ctx.p, ctx.dim
    lo, hi = support
    if profile is not None:
        def dprof(t):
            h = 1e-6 * max(t, 1e-3)
            return (profile(t + h) - profile(t - h)) / (2 * h)
        up = radial_integral(d, lambda t: abs(profile(t)) ** p, lo, hi, rtol=rtol)
        gp = radial_integral(d, lambda t: abs(dprof(t)) ** p, lo, hi, rtol=rtol)
        vp = radial_integral(d, lambda t: abs(float(V.radial(t))) * abs(profile(t)) ** p, lo, hi, rtol=rtol)
    elif u is not None:
        up = shell_integral(d, lambda x: np.abs(u(x)) ** p, lo, hi, rtol=rtol)
        gp = shell_integral(d, lambda x: np.linalg.norm(fd_gradient(u, x), axis=-1) ** p, lo, hi, rtol=rtol)
        vp = shell_integral(d, lambda x: np.abs(V(x)) * np.abs(u(x)) ** p, lo, hi, rtol=rtol)
    else:
        raise InvalidArgument("pass a test function u or a radial profile")
    if up == 0.0:
        raise InvalidArgument("the test function has zero L^p norm")
    return (vp - delta * gp) / up
