"""Discrete energy minimization for Q_{p,A,V} on planar elliptic annuli.

The domain ``inner < |x|_{A^-1} < outer`` is cut out of a uniform Cartesian
lattice.  Nodes strictly inside are unknowns; the active nodes just outside
(those in the 3x3 neighbourhood of an unknown) carry Dirichlet data.  Each
lattice cell whose four corners are active contributes

    h^2/4 * sum_corners w(x_k) W(g_k),   W(g) = (|g|_A^2 + eps^2)^{p/2} - eps^p

where ``g_k`` is the one-sided difference gradient at corner k, built from
the two cell edges meeting there.  The potential term is lumped onto nodes,
``sum_i m_i V(x_i) |u_i|^p`` with ``m_i = h^2/4`` per touching cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .anisotropy import AnisotropyMatrix, anorm_inv, invert_point
from .errors import BudgetExceeded, InvalidArgument, UnboundedBelow
from .potentials import Potential

__all__ = [
    "AnnularGrid2D",
    "DiscreteField2D",
    "MinimizerSpec",
    "HarnackRung",
    "discrete_energy",
    "energy_gradient",
    "el_residual",
    "minimize_dirichlet",
    "harnack_ratio",
    "kelvin_image",
    "kelvin_residual",
    "cubic_interpolate",
]

# corner k of a cell with local nodes [00, 10, 01, 11]: (x-difference, y-difference, node)
_CORNERS = (
    ((0, 1), (0, 2), 0),
    ((0, 1), (1, 3), 1),
    ((2, 3), (0, 2), 2),
    ((2, 3), (1, 3), 3),
)


@dataclass
class AnnularGrid2D:
    """Lattice nodes covering ``inner < |x|_{A^-1} < outer`` plus a Dirichlet band."""

    matrix: AnisotropyMatrix
    inner: float
    outer: float
    h: float
    shape: tuple = field(init=False)
    origin: np.ndarray = field(init=False, repr=False)
    index: np.ndarray = field(init=False, repr=False)
    ij: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)
    rho: np.ndarray = field(init=False, repr=False)
    interior: np.ndarray = field(init=False, repr=False)
    cells: np.ndarray = field(init=False, repr=False)
    mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.matrix.dim != 2:
            raise InvalidArgument("planar grids need a 2x2 matrix")
        if not (0 < self.inner < self.outer):
            raise InvalidArgument("need 0 < inner < outer")
        if not self.h > 0:
            raise InvalidArgument("mesh spacing must be positive")
        h = self.h
        half = self.outer * np.sqrt(np.diag(self.matrix.entries))
        n = np.ceil(half / h).astype(int) + 2
        ax = [h * np.arange(-n[i], n[i] + 1) for i in range(2)]
        X, Y = np.meshgrid(ax[0], ax[1], indexing="ij")
        rho = anorm_inv(self.matrix, np.stack([X, Y], axis=-1))
        inside = (rho > self.inner) & (rho < self.outer)
        # active = inside dilated by one lattice step in every direction
        act = inside.copy()
        pad = np.pad(inside, 1)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                act |= pad[1 + di:1 + di + inside.shape[0], 1 + dj:1 + dj + inside.shape[1]]
        index = -np.ones(act.shape, dtype=np.int64)
        I, J = np.nonzero(act)
        index[I, J] = np.arange(I.size)
        self.shape = act.shape
        self.origin = np.array([ax[0][0], ax[1][0]])
        self.index = index
        self.ij = np.stack([I, J], axis=-1)
        self.points = np.stack([X[I, J], Y[I, J]], axis=-1)
        self.rho = rho[I, J]
        self.interior = inside[I, J]
        c00 = index[:-1, :-1]
        c10 = index[1:, :-1]
        c01 = index[:-1, 1:]
        c11 = index[1:, 1:]
        ok = (c00 >= 0) & (c10 >= 0) & (c01 >= 0) & (c11 >= 0)
        self.cells = np.stack([c00[ok], c10[ok], c01[ok], c11[ok]], axis=-1)
        touch = np.bincount(self.cells.ravel(), minlength=I.size)
        self.mass = 0.25 * h * h * touch

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    @property
    def band(self) -> np.ndarray:
        return ~self.interior

    def lattice(self, values: np.ndarray) -> np.ndarray:
        """Node values scattered onto the full lattice, NaN where inactive."""
        out = np.full(self.shape, np.nan)
        out[self.ij[:, 0], self.ij[:, 1]] = values
        return out

    def describe(self) -> dict:
        return {"inner": self.inner, "outer": self.outer, "h": self.h, "nodes": self.n_nodes,
                "interior": self.n_interior, "cells": int(self.cells.shape[0])}


@dataclass
class DiscreteField2D:
    grid: AnnularGrid2D
    values: np.ndarray
    energy_trace: list = field(default_factory=list)
    residual: float = math.nan
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def dirichlet(self) -> np.ndarray:
        return self.values[self.grid.band]

    def band_extrema(self, r: float) -> tuple[float, float]:
        """inf and sup over nodes within one lattice step (in rho) of ``|x|_{A^-1} = r``."""
        sel = self._band(r)
        v = self.values[sel]
        return float(v.min()), float(v.max())

    def _band(self, r):
        width = self.grid.h / math.sqrt(self.grid.matrix.eig_min)
        sel = np.abs(self.grid.rho - r) <= width
        if not np.any(sel):
            raise InvalidArgument(f"no nodes near r={r}")
        return sel

    def band_ratio_extrema(self, other, r: float) -> tuple[float, float]:
        sel = self._band(r)
        a = self.values[sel]
        b = other.values[sel] if isinstance(other, DiscreteField2D) else np.asarray(other(self.grid.points[sel]))
        if np.any(a <= 0) or np.any(b <= 0):
            raise InvalidArgument(f"nonpositive sample near r={r}")
        q = a / b
        return float(q.min()), float(q.max())

    def as_series(self) -> dict:
        return {"x": self.grid.points[:, 0].tolist(), "y": self.grid.points[:, 1].tolist(),
                "u": self.values.tolist()}


# -- the discrete functional ------------------------------------------------


class _Functional:
    """Energy, gradient and Hessian of the lattice functional."""

    def __init__(self, grid: AnnularGrid2D, p: float, V: Potential | None, weight: Callable | None,
                 eps: float):
        self.g = grid
        self.p = float(p)
        self.A = grid.matrix.entries
        self.eps = float(eps)
        pts = grid.points
        w_node = np.ones(grid.n_nodes) if weight is None else np.asarray(weight(pts), float)
        self.w = [w_node[grid.cells[:, node]] for _, _, node in _CORNERS]
        if V is None or (isinstance(V, Potential) and V.is_zero):
            self.Vm = None
        else:
            vals = np.asarray(V(pts), float)
            if not np.all(np.isfinite(vals)):
                raise InvalidArgument("potential is not finite on the grid")
            self.Vm = grid.mass * vals

    def _corner_grads(self, u):
        c = self.g.cells
        uc = u[c]
        h = self.g.h
        out = []
        for (a, b), (e, f), _ in _CORNERS:
            gx = (uc[:, b] - uc[:, a]) / h
            gy = (uc[:, f] - uc[:, e]) / h
            out.append((gx, gy))
        return out

    def _q(self, gx, gy):
        A = self.A
        return A[0, 0] * gx * gx + 2 * A[0, 1] * gx * gy + A[1, 1] * gy * gy

    def cell_energies(self, u):
        p, e2 = self.p, self.eps**2
        tot = np.zeros(self.g.cells.shape[0])
        for k, (gx, gy) in enumerate(self._corner_grads(u)):
            tot += self.w[k] * ((self._q(gx, gy) + e2) ** (p / 2) - self.eps**p)
        return 0.25 * self.g.h**2 * tot

    def energy(self, u) -> float:
        E = float(np.sum(self.cell_energies(u)))
        if self.Vm is not None:
            E += float(np.sum(self.Vm * np.abs(u) ** self.p))
        return E

    def gradient(self, u) -> np.ndarray:
        p, e2, h = self.p, self.eps**2, self.g.h
        A = self.A
        c = self.g.cells
        n = u.size
        grad = np.zeros(n)
        coef = 0.25 * h  # h^2/4 * F . dg/du with dg/du = +-1/h
        for k, ((gx, gy), ((a, b), (e, f), _)) in enumerate(zip(self._corner_grads(u), _CORNERS)):
            s = coef * p * (self._q(gx, gy) + e2) ** (p / 2 - 1) * self.w[k]
            Fx = s * (A[0, 0] * gx + A[0, 1] * gy)
            Fy = s * (A[1, 0] * gx + A[1, 1] * gy)
            grad += np.bincount(c[:, b], Fx, n) - np.bincount(c[:, a], Fx, n)
            grad += np.bincount(c[:, f], Fy, n) - np.bincount(c[:, e], Fy, n)
        if self.Vm is not None:
            grad += p * self.Vm * np.sign(u) * np.abs(u) ** (p - 1)
        return grad

    def energy_change(self, u, d, alpha) -> float:
        """``E(u + alpha d) - E(u)`` without the cancellation of subtracting totals."""
        p, e2 = self.p, self.eps**2
        tot = np.zeros(self.g.cells.shape[0])
        dg = self._corner_grads(alpha * d)
        for k, ((gx, gy), (dx, dy)) in enumerate(zip(self._corner_grads(u), dg)):
            q = self._q(gx, gy) + e2
            A = self.A
            dq = 2 * (gx * (A[0, 0] * dx + A[0, 1] * dy) + gy * (A[1, 0] * dx + A[1, 1] * dy)) \
                + self._q(dx, dy)
            with np.errstate(divide="ignore", invalid="ignore"):
                dw = q ** (p / 2) * np.expm1((p / 2) * np.log1p(dq / q))
            zero = q <= 0
            if np.any(zero):
                dw[zero] = np.maximum(dq[zero], 0.0) ** (p / 2)
            tot += self.w[k] * dw
        dE = 0.25 * self.g.h**2 * float(np.sum(tot))
        if self.Vm is not None:
            du = alpha * d
            un = u + du
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = du / u
                dv = np.abs(u) ** p * np.expm1(p * np.log1p(ratio))
            direct = ~(np.isfinite(ratio) & (ratio > -1))
            dv[direct] = np.abs(un[direct]) ** p - np.abs(u[direct]) ** p
            dE += float(np.sum(self.Vm * dv))
        return dE

    def hessian(self, u) -> sp.csr_matrix:
        p, e2 = self.p, self.eps**2
        A = self.A
        c = self.g.cells
        n = u.size
        blocks = np.zeros((c.shape[0], 4, 4))
        for k, ((gx, gy), ((a, b), (e, f), _)) in enumerate(zip(self._corner_grads(u), _CORNERS)):
            q = self._q(gx, gy) + e2
            s1 = 0.25 * self.w[k] * p * q ** (p / 2 - 1)
            s2 = 0.25 * self.w[k] * p * (p - 2) * q ** (p / 2 - 2)
            ax = A[0, 0] * gx + A[0, 1] * gy
            ay = A[1, 0] * gx + A[1, 1] * gy
            # local 2x2 Hessian of W, pulled back through dg = D du (h^2 factors cancel)
            hxx = s1 * A[0, 0] + s2 * ax * ax
            hxy = s1 * A[0, 1] + s2 * ax * ay
            hyy = s1 * A[1, 1] + s2 * ay * ay
            for i, si in ((a, -1.0), (b, 1.0)):
                for j, sj in ((a, -1.0), (b, 1.0)):
                    blocks[:, i, j] += si * sj * hxx
            for i, si in ((e, -1.0), (f, 1.0)):
                for j, sj in ((e, -1.0), (f, 1.0)):
                    blocks[:, i, j] += si * sj * hyy
            for i, si in ((a, -1.0), (b, 1.0)):
                for j, sj in ((e, -1.0), (f, 1.0)):
                    blocks[:, i, j] += si * sj * hxy
                    blocks[:, j, i] += si * sj * hxy
        rows = np.repeat(c, 4, axis=1).ravel()
        cols = np.tile(c, (1, 4)).ravel()
        M = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()
        if self.Vm is not None:
            au = np.abs(u)
            if p < 2:
                # |u|^{p-2} is unbounded at 0; clamp so Newton steps stay finite
                au = np.maximum(au, max(self.eps, 1e-8))
            diag = p * (p - 1) * self.Vm * au ** (p - 2)
            M = M + sp.diags(diag)
        return M


def _ctx_p(ctx) -> float:
    return float(getattr(ctx, "p", ctx))


def discrete_energy(field: DiscreteField2D, ctx, V: Potential | None = None, *, weight=None,
                    eps: float = 0.0) -> float:
    """Lattice energy of the field (``ctx`` is p or any object with a ``p`` attribute)."""
    return _Functional(field.grid, _ctx_p(ctx), V, weight, eps).energy(field.values)


def energy_gradient(field: DiscreteField2D, ctx, V: Potential | None = None, *, weight=None,
                    eps: float = 0.0) -> np.ndarray:
    """Derivative of the lattice energy with respect to every active node value."""
    return _Functional(field.grid, _ctx_p(ctx), V, weight, eps).gradient(field.values)


def el_residual(field: DiscreteField2D, ctx, V: Potential | None = None, *, weight=None,
                eps: float = 0.0) -> float:
    """Max over unknowns of ``|dE/du_i| / h^2``, the discrete Euler-Lagrange residual."""
    g = energy_gradient(field, ctx, V, weight=weight, eps=eps)
    return float(np.max(np.abs(g[field.grid.interior]))) / field.grid.h**2


# -- minimization ---------------------------------------------------------------


@dataclass(frozen=True)
class MinimizerSpec:
    tol: float = 1e-8
    ncg_iters: int = 8
    max_newton: int = 60
    eps_rel: float = 1e-10
    armijo: float = 1e-4
    min_step: float = 1e-10
    blowup: float = 1e12


def _dirichlet_values(grid: AnnularGrid2D, dirichlet) -> np.ndarray:
    pts = grid.points
    band = grid.band
    vals = np.zeros(grid.n_nodes)
    if callable(dirichlet):
        vals[band] = np.asarray(dirichlet(pts[band]), float)
        return vals
    if isinstance(dirichlet, (tuple, list)) and len(dirichlet) == 2:
        inner_band = band & (grid.rho <= grid.inner)
        outer_band = band & (grid.rho >= grid.outer)
        for sel, data in ((inner_band, dirichlet[0]), (outer_band, dirichlet[1])):
            vals[sel] = np.asarray(data(pts[sel]), float) if callable(data) else float(data)
        return vals
    if isinstance(dirichlet, (int, float)):
        vals[band] = float(dirichlet)
        return vals
    raise InvalidArgument("dirichlet data must be a callable, a constant, or an (inner, outer) pair")


def _initial_guess(grid: AnnularGrid2D, vals: np.ndarray) -> np.ndarray:
    """Blend the mean inner and outer band values linearly in rho."""
    inner_band = grid.band & (grid.rho <= grid.inner)
    outer_band = grid.band & (grid.rho >= grid.outer)
    a = float(np.mean(vals[inner_band])) if np.any(inner_band) else 0.0
    b = float(np.mean(vals[outer_band])) if np.any(outer_band) else a
    u = vals.copy()
    s = (grid.rho - grid.inner) / (grid.outer - grid.inner)
    u[grid.interior] = (1 - s[grid.interior]) * a + s[grid.interior] * b
    return u


def minimize_dirichlet(grid: AnnularGrid2D, ctx, V: Potential | None, dirichlet,
                       spec: MinimizerSpec | None = None, *, weight=None,
                       initial: np.ndarray | None = None) -> DiscreteField2D:
    """Minimize the lattice energy with the band fixed to the Dirichlet data.

    A Jacobi-preconditioned Polak-Ribiere phase is followed by Newton steps
    with an Armijo line search; an indefinite Hessian is shifted until the
    step is a descent direction.  Steps are taken only if the energy does not
    increase, so ``energy_trace`` is nonincreasing.
    """
    spec = spec or MinimizerSpec()
    p = _ctx_p(ctx)
    vals = _dirichlet_values(grid, dirichlet)
    scale = max(float(np.max(np.abs(vals))), 1e-300) / (grid.outer - grid.inner)
    F = _Functional(grid, p, V, weight, spec.eps_rel * scale)
    u = _initial_guess(grid, vals) if initial is None else np.array(initial, float)
    u[grid.band] = vals[grid.band]
    free = grid.interior
    h2 = grid.h**2
    E = F.energy(u)
    # later entries are E plus exactly computed decrements, so the trace is
    # monotone even when the decrements are far below the rounding of E
    trace = [E]
    E0 = abs(E) + 1.0

    def res_of(g):
        return float(np.max(np.abs(g[free]))) / h2 if np.any(free) else 0.0

    def line_search(u, g, d, alpha):
        slope = float(np.dot(g[free], d[free]))
        while alpha >= spec.min_step:
            un = u + alpha * d
            # overflow here means a runaway step, which the watchdog below reports
            with np.errstate(over="ignore", invalid="ignore"):
                dE = F.energy_change(u, d, alpha)
            if not math.isfinite(dE) or trace[-1] + dE < -spec.blowup * E0 \
                    or np.max(np.abs(un)) > spec.blowup:
                raise UnboundedBelow("energy is not bounded below along the iteration")
            if dE <= spec.armijo * alpha * slope:
                return un, dE
            alpha *= 0.5
        return None, None

    def accept(un, dE):
        trace.append(trace[-1] + min(dE, 0.0))
        return un

    g = F.gradient(u)
    res = res_of(g)
    iters = 0
    # Jacobi-preconditioned nonlinear conjugate gradients
    if spec.ncg_iters > 0 and res > spec.tol:
        dinv = np.zeros_like(u)
        diag = F.hessian(u).diagonal()
        dinv[free] = 1.0 / np.maximum(diag[free], 1e-300)
        d = -dinv * g
        for _ in range(spec.ncg_iters):
            slope = float(np.dot(g[free], d[free]))
            if slope >= 0:
                d = -dinv * g
                slope = float(np.dot(g[free], d[free]))
            # curvature along d from a gradient difference
            tau = 1e-6 / max(float(np.max(np.abs(d))), 1e-300)
            curv = float(np.dot(d[free], (F.gradient(u + tau * d) - g)[free])) / tau
            alpha = -slope / curv if curv > 0 else 1.0
            un, dE = line_search(u, g, d, alpha)
            if un is None:
                break
            u = accept(un, dE)
            iters += 1
            gn = F.gradient(u)
            res = res_of(gn)
            if res <= spec.tol:
                g = gn
                break
            beta = max(0.0, float(np.dot(gn[free], ((gn - g) * dinv)[free])) /
                       max(float(np.dot(g[free], (g * dinv)[free])), 1e-300))
            g = gn
            d = -dinv * g + beta * d
    # Newton refinement
    idx = np.flatnonzero(free)
    for _ in range(spec.max_newton):
        if res <= spec.tol:
            break
        H = F.hessian(u)[idx][:, idx].tocsc()
        rhs = -g[idx]
        shift = 0.0
        dmean = float(np.mean(np.abs(H.diagonal()))) if idx.size else 1.0
        while True:
            M = H if shift == 0 else H + shift * sp.identity(idx.size, format="csc")
            step = spsolve(M, rhs)
            if np.all(np.isfinite(step)) and float(np.dot(step, rhs)) > 0:
                break
            shift = dmean * 1e-6 if shift == 0 else shift * 10
            if shift > 1e12 * dmean:
                raise BudgetExceeded("no descent direction found", residual=res)
        d = np.zeros_like(u)
        d[idx] = step
        un, dE = line_search(u, g, d, 1.0)
        if un is None:
            break
        u = accept(un, dE)
        iters += 1
        g = F.gradient(u)
        res = res_of(g)
    if res > spec.tol:
        raise BudgetExceeded(f"residual {res:.3e} above tolerance {spec.tol:.1e}", residual=res)
    return DiscreteField2D(grid, u, trace, res, iters,
                           {"p": p, "eps": F.eps, "energy": F.energy(u)})


# -- Harnack ratios -------------------------------------------------------------


@dataclass
class HarnackRung:
    R: float
    inf: float
    sup: float
    ratio: float


def harnack_ratio(field: DiscreteField2D, ladder: Sequence[float]) -> list[HarnackRung]:
    """Per rung R, inf and sup of the field over nodes with ``R/2 <= |x|_{A^-1} < 3R/2``."""
    out = []
    for R in ladder:
        sel = (field.grid.rho >= 0.5 * R) & (field.grid.rho < 1.5 * R)
        if not np.any(sel):
            raise InvalidArgument(f"no nodes in the annulus of rung {R}")
        v = field.values[sel]
        if np.any(v <= 0):
            raise InvalidArgument("the field must be positive on every rung")
        lo, hi = float(v.min()), float(v.max())
        out.append(HarnackRung(float(R), lo, hi, hi / lo))
    return out


# -- Kelvin transform on the lattice ------------------------------------------


def cubic_interpolate(grid: AnnularGrid2D, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Tensor 4x4 Lagrange interpolation of node values at points x (n, 2).

    Any stencil touching an inactive node yields NaN.
    """
    lat = grid.lattice(values)
    h = grid.h
    t = (np.asarray(x, float) - grid.origin) / h
    base = np.floor(t).astype(int) - 1
    s = t - (base + 1)
    nx, ny = grid.shape

    def weights(s):
        return np.stack([-s * (s - 1) * (s - 2) / 6, (s + 1) * (s - 1) * (s - 2) / 2,
                         -(s + 1) * s * (s - 2) / 2, (s + 1) * s * (s - 1) / 6], axis=-1)

    wx = weights(s[:, 0])
    wy = weights(s[:, 1])
    out = np.zeros(len(t))
    bad = (base[:, 0] < 0) | (base[:, 1] < 0) | (base[:, 0] + 3 >= nx) | (base[:, 1] + 3 >= ny)
    bi = np.clip(base, 0, [nx - 4, ny - 4])
    for a in range(4):
        for b in range(4):
            out += wx[:, a] * wy[:, b] * lat[bi[:, 0] + a, bi[:, 1] + b]
    out[bad] = np.nan
    return out


def kelvin_image(u, grid: AnnularGrid2D | None = None, h: float | None = None) -> DiscreteField2D:
    """``K[u]`` on the lattice of the image annulus ``1/outer < |x|_{A^-1} < 1/inner``.

    ``u`` is a DiscreteField2D (interpolated with cubic Lagrange stencils; nodes
    whose stencil leaves the source lattice become NaN) or a callable on
    points of shape (n, 2), in which case ``grid`` gives the source annulus.
    """
    src = u.grid if isinstance(u, DiscreteField2D) else grid
    if src is None:
        raise InvalidArgument("a callable u needs the source grid")
    img = AnnularGrid2D(src.matrix, 1.0 / src.outer, 1.0 / src.inner, h or src.h)
    pre = invert_point(src.matrix, img.points)
    if isinstance(u, DiscreteField2D):
        vals = cubic_interpolate(src, u.values, pre)
    else:
        vals = np.asarray(u(pre), float)
    return DiscreteField2D(img, vals, info={"kelvin_of": src.describe()})


def kelvin_residual(ctx, matrix: AnisotropyMatrix, u, *, grid: AnnularGrid2D | None = None,
                    detail: bool = False):
    """Discrete Euler-Lagrange residual of ``K[u]`` for the transformed operator.

    p = d = 2: the unweighted (2, A)-Laplacian.  p > 2: the operator with
    weight ``|x|_{A^-1}^{2(p-2)}``.  Unknowns whose cells touch a NaN value
    are left out of the max.
    """
    p = _ctx_p(ctx)
    d = int(getattr(ctx, "d", getattr(ctx, "dim", 2)))
    if d != 2:
        raise InvalidArgument("the planar Kelvin check is for d = 2")
    if p < d:
        raise InvalidArgument("the Kelvin check covers p >= d")
    src = u.grid if isinstance(u, DiscreteField2D) else grid
    if src is None:
        raise InvalidArgument("a callable u needs the source grid")
    if src.matrix != matrix:
        raise InvalidArgument("field grid and matrix disagree")
    img = kelvin_image(u, src)
    beta = 2.0 * (p - d)
    weight = None if beta == 0 else (lambda x: anorm_inv(matrix, x) ** beta)
    vals = img.values
    bad_cells = np.any(~np.isfinite(vals[img.grid.cells]), axis=1)
    bad_nodes = np.zeros(img.grid.n_nodes, dtype=bool)
    bad_nodes[img.grid.cells[bad_cells].ravel()] = True
    clean = np.where(np.isfinite(vals), vals, 0.0)
    F = _Functional(img.grid, p, None, weight, 0.0)
    g = F.gradient(clean)
    sel = img.grid.interior & ~bad_nodes
    res = float(np.max(np.abs(g[sel]))) / img.grid.h**2 if np.any(sel) else math.nan
    if detail:
        return res, {"valid_nodes": int(sel.sum()), "interior": img.grid.n_interior, "h": img.grid.h}
    return res
