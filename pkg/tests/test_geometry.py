import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonics.geometry import (
    FactorKind,
    GeometryError,
    SpectralPoint,
    Weight,
    check_radius,
    contragredient,
    dimension,
    eigenvalue,
    is_spherical_weight,
    lattice_points,
    longest_weyl_image,
    parse_space,
    weights_from,
    weyl_images,
    within_lattice,
)

SPACES = ["S2", "S3", "RP2", "CP2", "S2xT1"]

complex_numbers = st.builds(
    complex,
    st.floats(-20, 20, allow_nan=False),
    st.floats(-20, 20, allow_nan=False),
)


def test_parse_space_registry():
    space = parse_space("S2xT1")
    assert space.rank == 2
    assert space.label == "S2xT1"
    assert space.factors[0].kind is FactorKind.SPHERE
    assert space.factors[1].is_circle
    assert parse_space("CP2").factors[0].root_scale == 2
    assert parse_space("RP3").factors[0].p == 2


@pytest.mark.parametrize("spec", ["", "Q3", "S1", "S2x", "CP"])
def test_parse_space_rejects_garbage(spec):
    with pytest.raises(GeometryError):
        parse_space(spec)


@pytest.mark.parametrize(
    "spec, rho",
    [("S2", 0.5), ("S3", 1.0), ("RP2", 0.5), ("CP2", 1.0), ("S2xT1", (0.5, 0.0))],
)
def test_rho_in_longest_root_units(spec, rho):
    np.testing.assert_allclose(parse_space(spec).rho, np.atleast_1d(rho))


def test_validity_radius():
    assert parse_space("S2").validity_radius == pytest.approx(math.pi / 2)
    assert parse_space("S2xT1").validity_radius == pytest.approx(math.pi / 2)
    check_radius(parse_space("S2"), 1.5)
    with pytest.raises(GeometryError, match="support"):
        check_radius(parse_space("S2"), math.pi / 2, "support")


def test_lattice_sphere():
    assert [w.coords for w in lattice_points(parse_space("S2"), 3.5)] == [(0,), (1,), (2,), (3,)]


def test_lattice_real_projective():
    assert [w.coords for w in lattice_points(parse_space("RP2"), 5)] == [(0,), (2,), (4,)]


@pytest.mark.parametrize("spec", SPACES)
def test_lattice_zero_bound(spec):
    space = parse_space(spec)
    assert lattice_points(space, 0) == [Weight((0,) * space.rank)]


def test_lattice_product_signed_circle():
    points = lattice_points(parse_space("S2xT1"), 1)
    assert {w.coords for w in points} == {(0, 0), (1, 0), (0, 1), (0, -1)}


def test_lattice_negative_bound():
    with pytest.raises(GeometryError):
        lattice_points(parse_space("S2"), -1)


@pytest.mark.parametrize("spec", SPACES)
def test_lattice_closed_under_addition(spec):
    space = parse_space(spec)
    points = lattice_points(space, 8)
    assert all(is_spherical_weight(space, mu + nu) for mu in points for nu in points)


@pytest.mark.parametrize("spec", SPACES)
def test_lattice_sorted_by_norm(spec):
    norms = [w.norm for w in lattice_points(parse_space(spec), 12)]
    assert norms == sorted(norms)


def test_weyl_images_sphere():
    s2 = parse_space("S2")
    assert weyl_images(s2, 0) == {SpectralPoint.of(0), SpectralPoint.of(-1)}
    assert weyl_images(s2, -0.5) == {SpectralPoint.of(-0.5)}


def test_weyl_images_product():
    images = weyl_images(parse_space("S2xT1"), (1, 3))
    assert images == {
        SpectralPoint.of(1, 3),
        SpectralPoint.of(-2, 3),
        SpectralPoint.of(1, -3),
        SpectralPoint.of(-2, -3),
    }


@settings(max_examples=50, deadline=None)
@given(z=complex_numbers, w=complex_numbers)
def test_eigenvalue_is_weyl_invariant(z, w):
    space = parse_space("S2xT1")
    value = eigenvalue(space, (z, w))
    for image in weyl_images(space, (z, w)):
        assert abs(eigenvalue(space, image) - value) <= 1e-9 * max(1.0, abs(value))


@settings(max_examples=50, deadline=None)
@given(z=complex_numbers)
def test_longest_image_is_an_involution(z):
    space = parse_space("CP2")
    twice = longest_weyl_image(space, longest_weyl_image(space, z))
    assert abs(twice[0] - z) < 1e-12


def test_dimension_values():
    s2, s3, cp2 = parse_space("S2"), parse_space("S3"), parse_space("CP2")
    assert [dimension(s2, Weight((k,))) for k in range(5)] == [1, 3, 5, 7, 9]
    assert [dimension(s3, Weight((k,))) for k in range(5)] == [1, 4, 9, 16, 25]
    assert dimension(cp2, Weight((1,))) == 8
    assert dimension(parse_space("S2xT1"), Weight((2, -7))) == 5


@pytest.mark.parametrize("k", [97, 500, 1000])
def test_dimension_exact_at_high_degree(k):
    assert dimension(parse_space("S2"), Weight((k,))) == 2 * k + 1
    assert dimension(parse_space("S3"), Weight((k,))) == (k + 1) ** 2
    assert dimension(parse_space("S5"), Weight((k,))) == math.comb(k + 5, 5) - math.comb(k + 3, 5)
    assert dimension(parse_space("CP2"), Weight((k,))) == (k + 1) ** 3
    assert dimension(parse_space("CP3"), Weight((k,))) == (2 * k + 3) * (k + 1) ** 2 * (k + 2) ** 2 // 12
    assert dimension(parse_space("RP2"), Weight((2 * k,))) == 4 * k + 1


def test_dimension_rejects_non_spherical():
    with pytest.raises(GeometryError):
        dimension(parse_space("RP2"), Weight((1,)))


def test_eigenvalue_examples():
    s2 = parse_space("S2")
    assert eigenvalue(s2, 0) == 0
    assert eigenvalue(s2, 2) == pytest.approx(6)
    assert eigenvalue(s2, -1) == pytest.approx(0)


def test_contragredient():
    assert contragredient(parse_space("S2"), Weight((3,))) == Weight((3,))
    assert contragredient(parse_space("S2xT1"), Weight((2, -5))) == Weight((2, 5))
    assert contragredient(parse_space("S2xT1"), Weight((0, 0))) == Weight((0, 0))


def test_within_lattice():
    s2 = parse_space("S2")
    assert within_lattice(s2, -1) == Weight((0,))
    assert within_lattice(s2, 3) == Weight((3,))
    assert within_lattice(s2, 0.5) is None
    assert within_lattice(parse_space("RP2"), 1) is None


def test_weights_from():
    space = parse_space("RP2")
    assert weights_from(space, [(0,), (2,)]) == [Weight((0,)), Weight((2,))]
    with pytest.raises(GeometryError):
        weights_from(space, [(3,)])
