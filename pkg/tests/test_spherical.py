import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonics.geometry import Weight, parse_space
from harmonics.spherical import (
    DomainError,
    RadialPoint,
    calibrate_derivative_constant,
    derivative_envelope,
    general_values,
    growth_bound,
    growth_constant,
    hypergeometric,
    polynomial_table,
    radial_derivative,
    spherical_at,
    spherical_values,
)

spectral = st.builds(
    complex,
    st.floats(-15, 15, allow_nan=False),
    st.floats(-15, 15, allow_nan=False),
)


@settings(max_examples=40, deadline=None)
@given(lam=spectral)
def test_normalized_at_base_point(lam):
    for spec in ("S2", "CP2", "S3"):
        assert abs(spherical_at(parse_space(spec), lam, 0.0) - 1) < 1e-12


def test_legendre_values():
    s2 = parse_space("S2")
    assert spherical_at(s2, 1, math.pi / 3) == pytest.approx(0.5, abs=1e-14)
    assert spherical_at(s2, 0, 2.0) == pytest.approx(1.0)
    t = np.linspace(0, math.pi, 9)
    np.testing.assert_allclose(polynomial_table(s2.factors[0], 3, t)[3], 0.5 * (5 * np.cos(t) ** 3 - 3 * np.cos(t)), atol=1e-14)


def test_cp2_polynomials_match_jacobi():
    from scipy.special import eval_jacobi

    factor = parse_space("CP2").factors[0]
    a, b = factor.polynomial_params
    t = np.linspace(0.1, 3.0, 7)
    for k in range(6):
        expected = eval_jacobi(k, a, b, np.cos(t)) / eval_jacobi(k, a, b, 1.0)
        np.testing.assert_allclose(polynomial_table(factor, k, t)[k], expected, rtol=1e-12, atol=1e-14)


def test_circle_rows_are_cosines():
    circle = parse_space("S2xT1").factors[1]
    t = np.linspace(0, math.pi, 5)
    np.testing.assert_allclose(polynomial_table(circle, 4, t)[4], np.cos(4 * t))


def test_hypergeometric_matches_mpmath():
    z = np.array([0.05, 0.3, 0.6, 0.95, 0.4 + 0.3j])
    values = hypergeometric(-3.7, 4.7, 1.0, z)
    expected = [complex(mpmath.hyp2f1(-3.7, 4.7, 1, complex(v))) for v in z]
    np.testing.assert_allclose(values, expected, rtol=1e-10, atol=1e-12)


def test_non_integer_degree_against_closed_form():
    s2 = parse_space("S2")
    expected = complex(mpmath.hyp2f1(-3.7, 4.7, 1, math.sin(0.2) ** 2))
    assert abs(spherical_at(s2, 3.7, 0.4) - expected) < 1e-8


@pytest.mark.parametrize("spec", ["S2", "S3", "CP2"])
def test_shifted_recurrence_reproduces_polynomials(spec):
    factor = parse_space(spec).factors[0]
    t = np.linspace(0.1, 2.0, 11)
    table = polynomial_table(factor, 9, t)
    for k in (2, 5, 9):
        np.testing.assert_allclose(general_values(factor, complex(k) + 0j, t), table[k], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(lam=spectral, t=st.floats(0.0, 2.5))
def test_weyl_symmetry_in_spectral_parameter(lam, t):
    s2 = parse_space("S2")
    value = spherical_at(s2, lam, t)
    image = spherical_at(s2, -lam - 1, t)
    assert abs(value - image) <= 1e-10 * max(1.0, abs(value))


def test_product_factorizes():
    space = parse_space("S2xT1")
    value = spherical_at(space, (2, 3), RadialPoint.of(0.7, 0.4))
    assert value == pytest.approx(0.5 * (3 * math.cos(0.7) ** 2 - 1) * math.cos(1.2))


def test_domain_checks():
    s2 = parse_space("S2")
    with pytest.raises(DomainError):
        spherical_values(s2, 1.5, np.array([[1.6 + 0.1j]]))
    with pytest.raises(DomainError):
        spherical_values(s2, 1.5, np.array([[3.5]]))
    with pytest.raises(DomainError):
        spherical_values(parse_space("S2xT1"), (1, 1), np.array([[0.1, 0.2, 0.3]]))


def test_radial_derivative_examples():
    s2 = parse_space("S2")
    assert radial_derivative(s2, 2, 0.7, 0) == pytest.approx(spherical_at(s2, 2, 0.7))
    assert abs(radial_derivative(s2, 2, math.pi / 2, 1)) < 1e-9
    assert radial_derivative(s2, 1, 0.4, 1) == pytest.approx(-math.sin(0.4), abs=1e-10)
    assert radial_derivative(s2, 2, 0.4, 2) == pytest.approx(-3 * math.cos(0.8), abs=1e-9)


@pytest.mark.parametrize("lam", [0.3, 2.5 + 1j, 7.0])
def test_radial_derivative_vanishes_at_origin(lam):
    for spec in ("S2", "CP2"):
        assert abs(radial_derivative(parse_space(spec), lam, 0.0, 1)) < 1e-9


def test_radial_derivative_product_multi_index():
    space = parse_space("S2xT1")
    value = radial_derivative(space, (1, 2), (0.4, 0.3), (1, 1))
    assert value == pytest.approx(math.sin(0.4) * 2 * math.sin(0.6), abs=1e-9)


def test_radial_derivative_rejects_bad_orders():
    s2 = parse_space("S2")
    with pytest.raises(DomainError):
        radial_derivative(s2, 1, 0.4, 9)
    with pytest.raises(DomainError):
        radial_derivative(parse_space("S2xT1"), (1, 1), (0.4, 0.1), 1)
    with pytest.raises(DomainError):
        radial_derivative(s2, 1, 0.4 + 0.1j, 1)


def test_growth_bound_examples():
    s2 = parse_space("S2")
    constant = 1.05 * growth_constant(s2)
    for k in range(6):
        bound = growth_bound(s2, Weight((k,)), 0.8)
        assert bound >= 1 >= abs(spherical_at(s2, k, 0.8)) - 1e-12
    assert growth_bound(s2, 6.5, 0.4) == pytest.approx(constant)
    for sigma in (5, 10, 20):
        bound = growth_bound(s2, 1j * sigma, 0.4)
        assert bound == pytest.approx(constant * math.exp(0.4 * sigma))
        assert abs(spherical_at(s2, 1j * sigma, 0.4)) <= bound


@settings(max_examples=60, deadline=None)
@given(
    re_lam=st.floats(-20, 20),
    im_lam=st.floats(-20, 20),
    x=st.floats(0, 0.95 * math.pi / 2),
    y=st.floats(-1, 1),
)
def test_growth_bound_dominates(re_lam, im_lam, x, y):
    for spec in ("S2", "CP2"):
        space = parse_space(spec)
        lam = complex(re_lam, im_lam)
        point = complex(x, y)
        assert abs(spherical_at(space, lam, point)) <= growth_bound(space, lam, point)


@pytest.mark.parametrize("spec", ["S2", "CP2", "RP2"])
def test_derivative_constant_extends_beyond_calibration(spec):
    space = parse_space(spec)
    points, orders = [0.3, 0.8, 1.2], [0, 1, 2]
    constant = calibrate_derivative_constant(space, points, orders, [1, 5, 10, 15, 20, 25])
    for sigma in (30, 40, 50):
        for lam in (complex(sigma), complex(0, sigma)):
            for t in points:
                for j in orders:
                    value = abs(radial_derivative(space, lam, t, j))
                    assert value <= 1.05 * derivative_envelope(lam, t, j, constant)
