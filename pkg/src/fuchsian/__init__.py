"""Numerical diagnostics for (p, A)-Laplacian equations with Fuchsian-type singular potentials.

The operator is ``Q(u) = -div(|grad u|_A^{p-2} A grad u) + V |u|^{p-2} u``
with a constant symmetric positive definite matrix A.
"""

__version__ = "0.1.0"

from .anisotropy import AnisotropyMatrix, Ellipsoid, anorm, anorm_inv, invert_point, kelvin_transform
from .errors import (BudgetExceeded, Diverged, DomainError, FuchsianError, InvalidArgument, NoSolution,
                     NumericError, UnboundedBelow, UnsupportedDimension)
from .fundamental import (FundamentalSolution, flux_integral, hardy_constant, hardy_inequality_check,
                          indicial_roots, mu, weighted_capacity)
from .morrey import (Annulus, Ball, FuchsianReport, GridSpec, MorreyContext, fuchsian_check,
                     morrey_norm, weighted_fuchsian_norm)
from .planar import AnnularGrid2D, DiscreteField2D, harnack_ratio, kelvin_residual, minimize_dirichlet
from .potentials import Potential
from .radial import (RadialProblem, SolverSpec, criticality_probe, ratio_limit, solve_radial_dirichlet,
                     solve_radial_ivp)
from .dilation import OperatorData, dilate_operator, weak_fuchsian_probe

__all__ = [name for name in dir() if not name.startswith("_")]
