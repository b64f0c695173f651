"""Limiting dilation of operator data and norm-trace classification.

``(A, V) -> (A_R, V_R)`` with ``A_R(x) = A(R x)`` and ``V_R(x) = R^p V(R x)``.
A weak limit of ``V_R`` along a ladder is not computed; instead the norm of
``V_R`` on a fixed test annulus is followed and the trace is classified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .anisotropy import AnisotropyMatrix
from .errors import Diverged, InvalidArgument, NumericError
from .morrey import Annulus, GridSpec, MorreyContext, special_norm
from .potentials import Potential
from .radial import RadialProblem, SolverSpec, solve_radial_dirichlet

__all__ = [
    "OperatorData",
    "DilationTrace",
    "WeakFuchsianResult",
    "dilate_operator",
    "classify_trace",
    "solution_dilation_check",
    "weak_fuchsian_probe",
]


@dataclass(frozen=True)
class OperatorData:
    """``Q(u) = -Delta_{p,A} u + V |u|^{p-2} u`` with a singular point at 0 or infinity.

    ``matrix`` is an AnisotropyMatrix or a callable ``A(x)`` returning a
    d x d array; the callable form is only dilated, never solved with.
    """

    p: float
    d: int
    matrix: AnisotropyMatrix | Callable
    potential: Potential
    singular_point: str = "origin"

    def __post_init__(self):
        if self.singular_point not in ("origin", "infinity"):
            raise InvalidArgument("singular point must be 'origin' or 'infinity'")
        if self.potential.dim != self.d:
            raise InvalidArgument("potential dimension does not match d")
        if isinstance(self.matrix, AnisotropyMatrix) and self.matrix.dim != self.d:
            raise InvalidArgument("matrix dimension does not match d")

    def A(self, x) -> np.ndarray:
        if isinstance(self.matrix, AnisotropyMatrix):
            x = np.asarray(x, float)
            return np.broadcast_to(self.matrix.entries, x.shape[:-1] + (self.d, self.d))
        return np.asarray(self.matrix(np.asarray(x, float)))


def _scaled_matrix(fn: Callable, R: float) -> Callable:
    # flatten nested scalings into one factor so repeated dilation stays shallow
    base, factor = getattr(fn, "_base", fn), getattr(fn, "_factor", 1.0) * R

    def scaled(x):
        return base(factor * np.asarray(x, float))

    scaled._base = base
    scaled._factor = factor
    return scaled


def dilate_operator(data: OperatorData, R: float) -> OperatorData:
    """``(A_R, V_R)``; a constant matrix is unchanged."""
    if not R > 0:
        raise InvalidArgument("dilation factor must be positive")
    A = data.matrix if isinstance(data.matrix, AnisotropyMatrix) else _scaled_matrix(data.matrix, R)
    return replace(data, matrix=A, potential=data.potential.dilate(R, data.p))


@dataclass
class DilationTrace:
    R_seq: list
    dilated_norms: list
    limit_classification: str
    vanish_tol: float
    fixed_tol: float
    growth_limit: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify_trace(norms: Sequence[float], *, vanish_tol: float = 1e-3, fixed_tol: float = 0.01,
                   growth_limit: float = 1e3) -> str:
    """vanishing | fixed_point | bounded_nonvanishing | unbounded.

    vanishing: the last three entries decrease and sit below ``vanish_tol``
    times the first entry (or every entry is 0).  fixed_point: all entries
    within ``fixed_tol`` of each other.  unbounded: a non-finite entry or
    growth beyond ``growth_limit`` times the first entry.
    """
    x = np.asarray(norms, dtype=float)
    if x.size < 3:
        raise InvalidArgument("need at least 3 norms to classify")
    if not np.all(np.isfinite(x)):
        return "unbounded"
    if np.all(x == 0):
        return "vanishing"
    first = x[0]
    tail = x[-3:]
    if first > 0 and np.all(np.diff(tail) < 0) and np.all(tail < vanish_tol * first):
        return "vanishing"
    hi, lo = np.max(x), np.min(x)
    if hi > 0 and (hi - lo) <= fixed_tol * hi:
        return "fixed_point"
    if first > 0 and hi > growth_limit * first or first == 0 and hi > 0:
        return "unbounded"
    return "bounded_nonvanishing"


@dataclass
class WeakFuchsianResult:
    traces: list
    weak_fuchsian: bool
    final_potential: Potential = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"traces": [t.to_dict() for t in self.traces], "weak_fuchsian": self.weak_fuchsian}


def weak_fuchsian_probe(data: OperatorData, R_ladders: Sequence[Sequence[float]],
                        test_annulus: Annulus | None = None, ctx: MorreyContext | None = None,
                        grid: GridSpec | None = None, **thresholds) -> WeakFuchsianResult:
    """Apply dilation ladders in sequence and classify each stage's norm trace.

    After a vanishing stage the next stage starts from the zero potential;
    otherwise it starts from the potential at the last rung, which stands in
    for the weak limit.  The verdict is true iff the last stage vanishes.
    """
    if not R_ladders:
        raise InvalidArgument("at least one ladder is required")
    ctx = ctx or MorreyContext.create(data.p, data.d)
    test_annulus = test_annulus or Annulus.euclidean(data.d, 1.0)
    V = data.potential
    traces = []
    for ladder in R_ladders:
        ladder = list(ladder)
        steps = np.diff(ladder)
        if not (np.all(steps < 0) or np.all(steps > 0)):
            raise InvalidArgument("each ladder must be monotone")
        norms = []
        last = V
        for R in ladder:
            last = V.dilate(R, data.p)
            try:
                norms.append(special_norm(ctx, last, test_annulus, grid))
            except (Diverged, NumericError):
                norms.append(math.inf)
                break
        if len(norms) < len(ladder):
            cls = "unbounded"
        else:
            cls = classify_trace(norms, **thresholds)
        traces.append(DilationTrace(ladder, norms, cls, thresholds.get("vanish_tol", 1e-3),
                                    thresholds.get("fixed_tol", 0.01), thresholds.get("growth_limit", 1e3)))
        if cls == "unbounded":
            return WeakFuchsianResult(traces, False, last)
        V = Potential.zero(data.d) if cls == "vanishing" else last
    return WeakFuchsianResult(traces, traces[-1].limit_classification == "vanishing", V)


def solution_dilation_check(problem: RadialProblem, s: float, spec: SolverSpec | None = None) -> float:
    """sup |u(s r) - u_s(r)| where u_s solves the dilated problem on the dilated interval.

    Both solves use the same number of cells, so the t-grids coincide up to a
    shift and nodes compare one to one.
    """
    if not s > 0:
        raise InvalidArgument("scale must be positive")
    u = solve_radial_dirichlet(problem, spec)
    us = solve_radial_dirichlet(problem.dilated(s), spec)
    if np.max(np.abs(s * us.grid - u.grid) / u.grid) > 1e-12:
        raise NumericError("dilated grids do not align")
    return float(np.max(np.abs(u.values - us.values)))
