import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuchsian.anisotropy import AnisotropyMatrix
from fuchsian.errors import Diverged, InvalidArgument
from fuchsian.morrey import (Annulus, Ball, Box, GridSpec, MorreyContext, ball_sphere_fraction,
                             default_q, dilation_norm_sequence, dyadic_ladder, fuchsian_check,
                             morrey_adams_min_constant, morrey_estimate, morrey_norm,
                             special_norm, stability_ratio, weighted_fuchsian_norm)
from fuchsian.potentials import Potential


def test_default_q_is_admissible():
    for p, d in ((2, 3), (1.5, 3), (2, 2), (3, 3), (3, 2)):
        ctx = MorreyContext.create(p, d)
        assert ctx.q == default_q(p, d)
    assert MorreyContext.create(2, 3).regime == "subdim"
    assert MorreyContext.create(3, 3).regime == "critical"
    assert MorreyContext.create(3, 2).regime == "superdim"


def test_context_rejects_small_q():
    with pytest.raises(InvalidArgument):
        MorreyContext(2.0, 1.5, 3)
    with pytest.raises(InvalidArgument):
        MorreyContext(2.0, 2.0, 2)


def test_exponents():
    ctx = MorreyContext.create(2, 3, q=4)
    assert ctx.q_conj == pytest.approx(4 / 3)
    assert ctx.radius_power() == pytest.approx(-3 * 3 / 4)
    assert ctx.weight_exponent == pytest.approx(2 - 3 / 4)
    assert MorreyContext.create(3, 2).weight_exponent == pytest.approx(1.0)


def test_cap_fraction_in_three_dimensions():
    rho, s, r = 1.0, 1.2, 0.7
    cos_t = (rho**2 + s**2 - r**2) / (2 * rho * s)
    assert ball_sphere_fraction(3, rho, s, r) == pytest.approx((1 - cos_t) / 2, rel=1e-12)
    assert ball_sphere_fraction(3, 0.1, 0.0, 0.5) == 1.0
    assert ball_sphere_fraction(3, 3.0, 0.0, 0.5) == 0.0


def test_cap_fraction_in_two_dimensions():
    rho, s, r = 1.0, 0.8, 0.5
    theta = math.acos((rho**2 + s**2 - r**2) / (2 * rho * s))
    assert ball_sphere_fraction(2, rho, s, r) == pytest.approx(theta / math.pi, rel=1e-12)


def test_constant_on_unit_ball():
    for q in (2.0, 4.0, 10.0):
        est = morrey_estimate(MorreyContext.create(2, 3, q), 1.0, Ball(3, 1.0))
        assert est.value == pytest.approx(4 * math.pi / 3, rel=1e-10)
        assert est.radius == pytest.approx(1.0)


def test_estimates_grow_under_refinement():
    ctx = MorreyContext.create(2, 3)
    V = Potential.annulus_bump(3, [0.6], [0.2], [1.0])
    est = morrey_estimate(ctx, V, Ball(3, 1.0), GridSpec(max_levels=4, refine_rtol=0.0))
    assert all(b >= a for a, b in zip(est.levels, est.levels[1:]))


@given(st.floats(0.1, 10.0))
def test_norm_is_homogeneous_under_scaling(R):
    # r^{-d/q'} int_{B_r} f scales like R^{d - d/q'} for f(x) = g(x/R)
    ctx = MorreyContext.create(2, 3)
    V = Potential.annulus_bump(3, [0.5], [0.25], [1.0])
    W = Potential.annulus_bump(3, [0.5 * R], [0.25 * R], [1.0])
    a = morrey_norm(ctx, V, Ball(3, 1.0))
    b = morrey_norm(ctx, W, Ball(3, R))
    assert b == pytest.approx(R ** (3 - 3 / ctx.q_conj) * a, rel=1e-9)


def test_superdim_norm_is_l1():
    ctx = MorreyContext.create(3, 2)
    V = Potential.hardy(2, 3, 0.1)
    val = weighted_fuchsian_norm(ctx, V, Annulus.euclidean(2, 1.0))
    assert val == pytest.approx(0.1 * 2 * math.pi * math.log(3), rel=1e-6)


@pytest.mark.parametrize("p,d", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_hardy_norm_is_scale_invariant(p, d):
    ctx = MorreyContext.create(p, d)
    V = Potential.hardy(d, p, 0.1)
    norms = [weighted_fuchsian_norm(ctx, V, Annulus.euclidean(d, R)) for R in (1, 1 / 8, 1 / 64)]
    assert max(norms) - min(norms) <= 0.02 * max(norms)


def test_critical_norm_needs_p_equal_d():
    from fuchsian.morrey import morrey_norm_critical
    with pytest.raises(InvalidArgument):
        morrey_norm_critical(MorreyContext.create(2, 3), 1.0, Ball(3, 1.0))


def test_nonintegrable_singularity_diverges():
    with pytest.raises(Diverged):
        morrey_norm(MorreyContext.create(2, 3), Potential.power_law(3, 1.0, -3.0), Ball(3, 1.0))


def test_fuchsian_check_verdicts():
    ctx = MorreyContext.create(2, 3)
    ok = fuchsian_check(ctx, Potential.hardy(3, 2, 0.1), "origin")
    assert ok.is_fuchsian and ok.ratio == pytest.approx(1.0, abs=1e-9)
    bad = fuchsian_check(ctx, Potential.power_law(3, 1.0, -3.0), "origin")
    assert not bad.is_fuchsian and bad.ratio == pytest.approx(32.0, rel=1e-6)
    at_inf = fuchsian_check(ctx, Potential.hardy(3, 2, 0.1), "infinity")
    assert at_inf.is_fuchsian


def test_fuchsian_check_ladder_validation():
    ctx = MorreyContext.create(2, 3)
    with pytest.raises(InvalidArgument):
        fuchsian_check(ctx, Potential.hardy(3, 2, 0.1), "origin", [1, 2, 4, 8])
    assert dyadic_ladder("origin", 3) == [1.0, 0.5, 0.25]


def test_stability_ratio_zero_cases():
    assert stability_ratio([0.0, 0.0]) == 1.0
    assert math.isinf(stability_ratio([0.0, 1.0]))
    assert stability_ratio([1.0, 4.0]) == 4.0


def test_anisotropic_annulus_uses_generic_sampler():
    A = AnisotropyMatrix.diagonal([4.0, 1.0])
    ctx = MorreyContext.create(3, 2)
    V = Potential.hardy(2, 3, 0.1, matrix=A)
    val = weighted_fuchsian_norm(ctx, V, Annulus(A, 1.0), GridSpec(generic_samples=256))
    # L^1 norm of 0.1 |x|^{-2}_{A^-1} over the elliptic annulus: 0.1 * 2 pi sqrt|A| log 3
    assert val == pytest.approx(0.1 * 2 * math.pi * 2 * math.log(3), rel=0.03)


def test_generic_path_agrees_with_radial_path():
    ctx = MorreyContext.create(2, 2, q=3)
    V = Potential.annulus_bump(2, [0.5], [0.3], [1.0])
    W = Potential.generic(2, lambda x: V(x))
    a = morrey_norm(ctx, V, Ball(2, 1.0))
    b = morrey_norm(ctx, W, Ball(2, 1.0), GridSpec(generic_samples=256))
    assert b == pytest.approx(a, rel=0.05)


def test_box_window():
    ctx = MorreyContext.create(3, 2)
    val = morrey_norm(ctx, 1.0, Box((0.0, 0.0), (1.0, 2.0)), GridSpec(generic_samples=64))
    assert val == pytest.approx(2.0, rel=1e-9)


def test_dilation_norm_sequence_vanishes_for_subcritical_power():
    ctx = MorreyContext.create(2, 3)
    seq = dilation_norm_sequence(ctx, Potential.power_law(3, 1.0, -1.0), [1, 0.5, 0.25],
                                 Annulus.euclidean(3, 1.0))
    assert seq[1] / seq[0] == pytest.approx(0.5, rel=1e-9)
    assert seq[2] / seq[1] == pytest.approx(0.5, rel=1e-9)


def test_special_norm_zero():
    assert special_norm(MorreyContext.create(2, 3), 0, Ball(3, 1.0)) == 0.0


def test_morrey_adams_constant():
    # u = (1 - |x|)^2 on B_1 in R^3: ||grad u||^2 / ||u||^2 = (16 pi/30) / (4 pi/105) = 14
    ctx = MorreyContext.create(2, 3)
    prof = lambda t: max(0.0, 1 - t) ** 2  # noqa: E731
    assert morrey_adams_min_constant(ctx, 0, 0.5, profile=prof) == pytest.approx(-7.0, rel=1e-8)
    assert morrey_adams_min_constant(ctx, 1.0, 0.5, profile=prof) == pytest.approx(-6.0, rel=1e-8)
    with pytest.raises(InvalidArgument):
        morrey_adams_min_constant(ctx, 1.0, 0.0, profile=prof)
