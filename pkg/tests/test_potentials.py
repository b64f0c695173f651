import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuchsian.anisotropy import AnisotropyMatrix
from fuchsian.errors import InvalidArgument
from fuchsian.potentials import Potential, as_potential, bump_profile

scales = st.floats(0.05, 20.0)


def test_bump_profile_support_and_peak():
    s = np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    b = bump_profile(s)
    assert b[2] == pytest.approx(1.0)
    assert b[0] == 0 and b[4] == 0 and b[5] == 0
    assert np.all(bump_profile(s, "indicator")[1:4] == 1)


def test_hardy_values():
    V = Potential.hardy(3, 2.0, 0.25)
    assert V(np.array([[2.0, 0.0, 0.0]])) == pytest.approx(-0.25 / 4)
    assert V.singular_exponent() == pytest.approx(2.0)


@given(scales, scales)
def test_dilation_semigroup(R1, R2):
    x = np.array([[0.3, 0.4, 1.2], [2.0, -1.0, 0.5]])
    for V in (Potential.power_law(3, 1.3, -1.7),
              Potential.annulus_bump(3, [1.0], [0.4], [2.0]),
              Potential.radial_table(3, [0.0, 1.0, 3.0], [1.0, 2.0, 0.5])):
        a = V.dilate(R1, 2.5).dilate(R2, 2.5)(x)
        b = V.dilate(R1 * R2, 2.5)(x)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


def test_hardy_is_dilation_fixed_point():
    V = Potential.hardy(2, 3.0, 0.1)
    assert V.dilate(0.125, 3.0).describe() == V.describe()


def test_bump_dilation_moves_center():
    V = Potential.annulus_bump(2, [1.0], [0.2], [1.0])
    W = V.dilate(0.25, 2.0)
    assert W.params["centers"][0] == pytest.approx(4.0)
    assert W(np.array([[4.0, 0.0]])) == pytest.approx(0.25**2)


def test_times_power_is_pointwise():
    V = Potential.annulus_bump(2, [1.0], [0.5], [3.0])
    W = V.times_power(1.5)
    x = np.array([[0.9, 0.3]])
    r = np.linalg.norm(x)
    assert W(x) == pytest.approx(r**1.5 * V(x))
    P = Potential.power_law(2, 2.0, -1.0).times_power(1.0)
    assert P.kind == "power_law" and P.params["exponent"] == 0.0


def test_anisotropic_potential_uses_inverse_norm():
    A = AnisotropyMatrix.diagonal([4.0, 1.0])
    V = Potential.power_law(2, 1.0, -1.0, matrix=A)
    assert V(np.array([[2.0, 0.0]])) == pytest.approx(1.0)


def test_validation():
    with pytest.raises(InvalidArgument):
        Potential.radial_table(2, [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidArgument):
        Potential.annulus_bump(2, [1.0], [0.1, 0.2], [1.0])
    with pytest.raises(InvalidArgument):
        Potential("nope", 2)


def test_as_potential_wraps_callables_and_numbers():
    V = as_potential(2.0, 3)
    assert V(np.ones((1, 3))) == pytest.approx(2.0)
    W = as_potential(lambda x: x[..., 0], 2)
    assert W.kind == "generic"
    assert W(np.array([[3.0, 1.0]])) == pytest.approx(3.0)
