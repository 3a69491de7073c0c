import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from lepx.sleformula import (
    gauss_2f1_halfline,
    schramm_curve,
    schramm_pass_right,
    schramm_prefactor,
    theta_grid,
)


def euler_2f1(b, x):
    """2F1(1/2, b; 3/2; x) = int_0^1 (1 - x s^2)^(-b) ds (Euler integral with t = s^2)."""
    return integrate.quad(lambda s: (1.0 - x * s * s) ** (-b), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14)[0]


def test_empty_series():
    assert gauss_2f1_halfline(0.7, 0.0) == 1.0


def test_reduction_identity():
    assert abs(gauss_2f1_halfline(1.5, -3.0) - 0.5) < 1e-13


def test_against_euler_integral():
    assert abs(gauss_2f1_halfline(2.0 / 3.0, -1.0) - euler_2f1(2.0 / 3.0, -1.0)) < 1e-10


@given(st.floats(0.51, 3.0), st.floats(-1e4, 0.0))
def test_against_euler_integral_and_mpmath(b, x):
    got = gauss_2f1_halfline(b, x)
    assert abs(got - euler_2f1(b, x)) < 1e-9
    assert abs(got - float(mpmath.hyp2f1(0.5, b, 1.5, x))) < 1e-12


@pytest.mark.parametrize("x", [-1.0, -1.0001, -50.0, -1e8, -1e24, -1e200])
@pytest.mark.parametrize("b", [0.6, 1.0, 1.5, 2.0 / 3.0, 3.0])
def test_far_half_line_against_mpmath(b, x):
    ref = mpmath.hyp2f1(0.5, b, 1.5, mpmath.mpf(x))
    assert abs(gauss_2f1_halfline(b, x) - float(ref)) < 1e-13 * max(1.0, abs(float(ref)))


def test_positive_argument_rejected():
    with pytest.raises(ValueError):
        gauss_2f1_halfline(1.0, 0.5)


def _schramm_oracle(theta, kappa):
    cot = 1.0 / math.tan(theta)
    g = mpmath.gamma(4 / mpmath.mpf(kappa)) / (mpmath.sqrt(mpmath.pi) * mpmath.gamma((8 - mpmath.mpf(kappa)) / (2 * mpmath.mpf(kappa))))
    return 0.5 + float(g) * cot * euler_2f1(4.0 / kappa, -cot * cot)


def test_kappa6_at_pi_over_3():
    theta = math.pi / 3
    assert abs(schramm_pass_right(theta, 6.0) - _schramm_oracle(theta, 6.0)) < 1e-9


@pytest.mark.parametrize("kappa", [1.0, 2.0, 8.0 / 3.0, 4.0, 6.0, 7.5])
def test_against_oracle_on_grid(kappa):
    for theta in theta_grid(19):
        assert abs(schramm_pass_right(theta, kappa) - _schramm_oracle(theta, kappa)) < 1e-9


def test_kappa_8_3_closed_form():
    theta = theta_grid()
    c = schramm_curve(8.0 / 3.0, theta)
    assert np.max(np.abs(c.probability - (1 + np.cos(theta)) / 2)) < 1e-10


def test_prefactor_gamma_against_mpmath():
    for kappa in (1.0, 8.0 / 3.0, 6.0, 7.9):
        ref = mpmath.gamma(4 / mpmath.mpf(kappa)) / (mpmath.sqrt(mpmath.pi) * mpmath.gamma((8 - mpmath.mpf(kappa)) / (2 * mpmath.mpf(kappa))))
        assert abs(schramm_prefactor(kappa) - float(ref)) < 1e-13 * float(ref)


@pytest.mark.parametrize("kappa", [8.0 / 3.0, 6.0, 2.0, 7.0])
def test_shape_properties(kappa):
    theta = np.pi * np.arange(1, 1000) / 1000
    p = schramm_curve(kappa, theta).probability
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) < 0)  # decreasing: 1 near the positive real axis
    assert np.max(np.abs(p + p[::-1] - 1)) < 1e-10
    assert schramm_pass_right(math.pi / 2, kappa) == 0.5
    # the approach to 1 at theta -> 0 is a power law in theta, slow for large kappa
    near = [schramm_pass_right(t, kappa) for t in (1e-3, 1e-6, 1e-12)]
    assert near[0] < near[1] <= near[2] <= 1.0
    assert 1.0 - near[2] < 0.05


def test_domain_errors():
    with pytest.raises(ValueError):
        schramm_pass_right(0.0, 6.0)
    with pytest.raises(ValueError):
        schramm_pass_right(1.0, 8.0)


def test_theta_grid():
    g = theta_grid()
    assert len(g) == 199 and g[0] > 0 and g[-1] < math.pi
    assert abs(g[99] - math.pi / 2) < 1e-15
