import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuchsian.anisotropy import AnisotropyMatrix
from fuchsian.errors import DomainError, InvalidArgument
from fuchsian.fundamental import (FundamentalSolution, capacity_constant, capacity_exponent,
                                  capacity_quadrature, flux_integral, fundamental_constant,
                                  hardy_constant, hardy_inequality_check, indicial_map,
                                  indicial_roots, mu, mu_gradient_flux, weighted_capacity)

I2 = AnisotropyMatrix.identity(2)
I3 = AnisotropyMatrix.identity(3)
FULL = AnisotropyMatrix([[2.0, 1.0], [1.0, 2.0]])
D124 = AnisotropyMatrix.diagonal([1.0, 2.0, 4.0])

# constants evaluated symbolically from the closed forms, to 20 digits
CONSTANTS = [
    (2, 3, I3, 1 / (4 * math.pi)),
    (3, 2, I2, -0.79788456080286535588),
    (4, 2, FULL, -0.67687908320699561522),
    (3, 3, D124, 0.16773456674135347906),
    (2, 2, I2, 1 / (2 * math.pi)),
]


@pytest.mark.parametrize("p,d,A,expected", CONSTANTS)
def test_fundamental_constant(p, d, A, expected):
    assert fundamental_constant(p, d, A) == pytest.approx(expected, rel=1e-14)


def test_newtonian_kernel_values():
    fs = FundamentalSolution.create(2, 3)
    assert mu(fs, [1.0, 0.0, 0.0]) == pytest.approx(1 / (4 * math.pi))
    assert mu(fs, [0.0, 2.0, 0.0]) == pytest.approx(1 / (8 * math.pi))


def test_log_kernel_and_pole():
    fs = FundamentalSolution.create(2, 2, pole=(1.0, 1.0))
    assert mu(fs, [1.0 + math.e, 1.0]) == pytest.approx(-1 / (2 * math.pi))
    with pytest.raises(DomainError):
        mu(fs, [1.0, 1.0])


def test_invalid_exponents():
    with pytest.raises(InvalidArgument):
        FundamentalSolution.create(1.0, 2)
    with pytest.raises(InvalidArgument):
        FundamentalSolution.create(2, 3, I2)


@pytest.mark.parametrize("p,d,A,_", CONSTANTS)
def test_flux_is_minus_one(p, d, A, _):
    fs = FundamentalSolution.create(p, d, A)
    for r in (0.25, 1.0, 4.0):
        assert flux_integral(fs, r) == pytest.approx(-1.0, abs=1e-10)


def test_flux_field_matches_finite_differences():
    fs = FundamentalSolution.create(3, 2, FULL)
    x = np.array([0.7, -0.4])
    h = 1e-6
    g = np.array([(mu(fs, x + h * e) - mu(fs, x - h * e)) / (2 * h) for e in np.eye(2)])
    Ag = FULL.entries @ g
    eta = math.sqrt(g @ Ag) ** (3 - 2) * Ag
    assert np.allclose(mu_gradient_flux(fs, x), eta, rtol=1e-7)


def test_inverse_radial_round_trip():
    for p, d in ((2, 3), (3, 2), (2, 2)):
        fs = FundamentalSolution.create(p, d)
        assert fs.inverse_radial(float(fs.radial(1.7))) == pytest.approx(1.7, rel=1e-12)


# (3, 2, beta=2): energies of the extremal profile integrated symbolically
CAPACITY = [((0.1, 1.0), 0.33596725753753042032), ((0.01, 1.0), 0.019392547244381439744),
            ((0.1, 10.0), 0.19392547244381439744)]


@pytest.mark.parametrize("rR,expected", CAPACITY)
def test_weighted_capacity_closed_form(rR, expected):
    assert weighted_capacity(3, 2, 2, *rR) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("rR,expected", CAPACITY)
def test_capacity_quadrature(rR, expected):
    assert capacity_quadrature(3, 2, 2, *rR) == pytest.approx(expected, rel=1e-6)


def test_capacity_log_case_and_matrix():
    # gamma = 0 when beta = p - d; then the capacity is C' log(R/r)^{1-p}
    assert capacity_exponent(3, 2, 1.0) == 0.0
    val = weighted_capacity(3, 2, 1.0, 0.5, 2.0, FULL)
    assert val == pytest.approx(FULL.sqrt_det * 2 * math.pi * math.log(4.0) ** -2)
    assert capacity_quadrature(3, 2, 1.0, 0.5, 2.0, FULL) == pytest.approx(val, rel=1e-6)
    assert capacity_constant(3, 2, 2.0) == pytest.approx(2 * math.pi * 0.25)


def test_capacity_to_infinity():
    # default beta = 2(p-d) = 2 gives gamma < 0 and a finite limit
    assert weighted_capacity(3, 2, None, 0.1, math.inf) == pytest.approx(
        weighted_capacity(3, 2, None, 0.1, 1e12), rel=1e-5)


def test_hardy_constant():
    assert hardy_constant(2, 3) == pytest.approx(0.25)
    assert hardy_constant(3, 2) == pytest.approx(1 / 27)


def test_indicial_roots_example():
    data = indicial_roots(2, 3, 3 / 16)
    assert data.roots == pytest.approx((-0.75, -0.25), abs=1e-14)
    assert data.has_real_roots and not data.double_root


def test_indicial_double_and_complex():
    data = indicial_roots(2, 3, 0.25)
    assert data.double_root and data.roots == pytest.approx((-0.5, -0.5))
    assert indicial_roots(2, 3, 0.3).roots == ()
    assert indicial_roots(3, 2, 0.0).roots == pytest.approx((0.0, 0.5))


@given(st.sampled_from([(2, 3), (3, 2), (1.5, 3), (4, 2), (2.5, 3)]), st.floats(-2.0, 0.999))
def test_roots_solve_the_indicial_equation(pd, frac):
    p, d = pd
    lam = frac * hardy_constant(p, d)
    data = indicial_roots(p, d, lam)
    for g in data.roots:
        assert data.map_value(g) == pytest.approx(lam, abs=1e-11 * (1 + abs(lam)))
        assert indicial_map(p, d, g) == pytest.approx(-lam, abs=1e-11 * (1 + abs(lam)))


def test_hardy_inequality_profile_and_field_agree():
    prof = lambda t: math.exp(-1 / max(1 - (2 * t - 1) ** 2, 1e-300)) if 0 < t < 1 else 0.0  # noqa: E731
    lhs, rhs = hardy_inequality_check(2, 3, profile=prof, support=(0.0, 1.0))
    assert lhs > rhs > 0

    def u(x):
        t = np.linalg.norm(x, axis=-1)
        return np.array([prof(v) for v in np.ravel(t)]).reshape(t.shape)

    lhs2, rhs2 = hardy_inequality_check(2, 3, u, support=(0.0, 1.0), n_sphere=8, rtol=1e-6)
    assert lhs2 == pytest.approx(lhs, rel=1e-4)
    assert rhs2 == pytest.approx(rhs, rel=1e-4)


def test_hardy_inequality_needs_p_below_d():
    with pytest.raises(InvalidArgument):
        hardy_inequality_check(3, 2, profile=lambda t: 1.0)
