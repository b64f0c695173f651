"""Small quadrature helpers shared by the diagnostics."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate

from .anisotropy import sphere_rule
from .errors import NumericError

__all__ = ["fd_gradient", "shell_integral", "radial_integral"]


def fd_gradient(u: Callable, x: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of ``u`` at points ``x`` of shape (n, d)."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    h = rel * np.maximum(np.linalg.norm(x, axis=-1), 1e-3)[..., None]
    cols = []
    for e in np.eye(d):
        cols.append((np.asarray(u(x + h * e)) - np.asarray(u(x - h * e))) / (2 * h[..., 0]))
    return np.stack(cols, axis=-1)


def shell_integral(d: int, density: Callable, lo: float, hi: float, *,
                   n_sphere: int = 24, rtol: float = 1e-9) -> float:
    """``int_{lo < |x| < hi} density(x) dx`` as a 1-d quad over spheres.

    ``density`` receives points of shape (n, d).
    """
    theta, w = sphere_rule(d, n_sphere)

    def shell(t):
        return t ** (d - 1) * float(np.dot(w, density(t * theta)))

    val = integrate.quad(shell, lo, hi, epsabs=0.0, epsrel=rtol, limit=400)[0]
    if not math.isfinite(val):
        raise NumericError("shell integral is not finite")
    return val


def radial_integral(d: int, profile: Callable, lo: float, hi: float, *, rtol: float = 1e-9) -> float:
    """``int_{lo < |x| < hi} profile(|x|) dx`` for a radial integrand."""
    from .anisotropy import sphere_area

    val = sphere_area(d) * integrate.quad(lambda t: t ** (d - 1) * profile(t), lo, hi,
                                          epsabs=0.0, epsrel=rtol, limit=400)[0]
    if not math.isfinite(val):
        raise NumericError("radial integral is not finite")
    return val
