import math

import numpy as np
import pytest
from scipy.special import eval_legendre

from harmonics.distributions import (
    DistributionError,
    InvariantDistribution,
    PairingDivergenceError,
    atom,
    delta,
    density_distribution,
    dist_table,
    dist_transform,
    pair,
    pairing_series,
    seminorm_certificate,
    validate,
)
from harmonics.geometry import GeometryError, Weight, lattice_points, parse_space
from harmonics.transform import (
    CoefficientTable,
    RadialProfile,
    bump,
    coefficient_table,
    constant_profile,
    forward,
    schur_probe,
    shell_bump,
)


def test_delta_pairs_to_value_at_origin():
    s2 = parse_space("S2")
    assert pair(s2, delta(s2), bump(s2, 0.5)) == pytest.approx(1.0)
    assert pair(s2, delta(s2), schur_probe(s2, Weight((4,)))) == pytest.approx(1.0)


def test_constant_density_is_orthogonal_to_spherical_functions():
    s2 = parse_space("S2")
    ones = density_distribution(constant_profile(s2))
    for k in range(4):
        expected = 1.0 if k == 0 else 0.0
        assert abs(pair(s2, ones, schur_probe(s2, Weight((k,)))) - expected) < 1e-10


def test_derivative_atom_against_legendre():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.4, 1),))
    assert pair(s2, F, schur_probe(s2, Weight((1,)))) == pytest.approx(-math.sin(0.4), abs=1e-8)


def test_second_derivative_atom():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.4, 2, 2.0),))
    assert pair(s2, F, schur_probe(s2, Weight((2,)))) == pytest.approx(2 * -3 * math.cos(0.8), abs=1e-5)


def test_atom_validation():
    s2 = parse_space("S2")
    with pytest.raises(DistributionError):
        atom(s2, -0.1)
    with pytest.raises(DistributionError):
        atom(parse_space("S2xT1"), (0.1, 0.2), (1, 0, 0))
    F = InvariantDistribution((atom(s2, 1.6),))
    with pytest.raises(GeometryError):
        validate(s2, F)


def test_derivative_atom_needs_smooth_profile():
    s2 = parse_space("S2")
    rough = RadialProfile(lambda t: np.abs(t[:, 0] - 0.4), math.pi, smooth=False, name="kink")
    with pytest.raises(DistributionError):
        pair(s2, InvariantDistribution((atom(s2, 0.4, 1),)), rough)
    assert pair(s2, InvariantDistribution((atom(s2, 0.7),)), rough) == pytest.approx(0.3)


def test_dist_transform_examples():
    s2 = parse_space("S2")
    for k in range(8):
        mu = Weight((k,))
        assert dist_transform(s2, delta(s2), mu) == pytest.approx(1.0)
        orbit = InvariantDistribution((atom(s2, 0.6),))
        assert dist_transform(s2, orbit, mu) == pytest.approx(eval_legendre(k, math.cos(0.6)), abs=1e-12)
        density = density_distribution(bump(s2, 0.5))
        assert abs(dist_transform(s2, density, mu) - forward(s2, bump(s2, 0.5), mu)) < 1e-10


def test_dist_transform_uses_contragredient():
    space = parse_space("S2xT1")
    F = InvariantDistribution((atom(space, (0.3, 0.2), (0, 1)),))
    value = dist_transform(space, F, Weight((1, 2)))
    assert value == pytest.approx(math.cos(0.3) * -2 * math.sin(0.4), abs=1e-9)


def test_dist_table_matches_pointwise_transform():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.3), atom(s2, 0.5, 1, -2.0)), bump(s2, 0.4))
    table = dist_table(s2, F, 10)
    for w in table.weights():
        assert abs(table[w] - dist_transform(s2, F, w)) < 1e-9


def test_pairing_series_recovers_point_evaluation():
    s2 = parse_space("S2")
    f = bump(s2, 0.5)
    F = delta(s2)
    value = pairing_series(s2, dist_table(s2, F, 400), coefficient_table(s2, f, 400))
    assert value == pytest.approx(pair(s2, F, f), abs=1e-6)


def test_pairing_series_with_atom_and_density():
    s2 = parse_space("S2")
    f = bump(s2, 0.8)
    F = InvariantDistribution((atom(s2, 0.3),), bump(s2, 0.4))
    value = pairing_series(s2, dist_table(s2, F, 400), coefficient_table(s2, f, 400))
    assert value == pytest.approx(pair(s2, F, f), abs=1e-6)


def test_pairing_series_collapses_on_spherical_function():
    s2 = parse_space("S2")
    nu = Weight((3,))
    F = InvariantDistribution((atom(s2, 0.3),))
    F_table = dist_table(s2, F, 20)
    value = pairing_series(s2, F_table, coefficient_table(s2, schur_probe(s2, nu), 20))
    assert value == pytest.approx(F_table[nu], abs=1e-12)


def test_pairing_series_of_zero_transform():
    s2 = parse_space("S2")
    zero = CoefficientTable(s2, {w: 0j for w in lattice_points(s2, 40)}, 40)
    assert pairing_series(s2, zero, coefficient_table(s2, bump(s2, 0.5), 40)) == 0


def test_pairing_series_detects_divergence():
    s2 = parse_space("S2")
    ones = dist_table(s2, delta(s2), 40)
    with pytest.raises(PairingDivergenceError):
        pairing_series(s2, ones, ones)


def test_seminorm_certificates():
    s2 = parse_space("S2")
    point = seminorm_certificate(s2, delta(s2))
    assert point.holds and point.m == 0
    assert point.constant == pytest.approx(1.0)

    density = seminorm_certificate(s2, density_distribution(bump(s2, 0.5)))
    assert density.holds and density.m == 0

    second = seminorm_certificate(s2, InvariantDistribution((atom(s2, 0.4, 2),)))
    assert second.holds and second.m <= 1


def test_support_radius_and_sum():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.3),)) + density_distribution(bump(s2, 0.6))
    assert F.support_radius == pytest.approx(0.6)
    assert len(F.atoms) == 1
    assert pair(s2, F.scaled(2.0), bump(s2, 0.8)) == pytest.approx(2 * pair(s2, F, bump(s2, 0.8)))


@pytest.mark.parametrize("spec", ["S2", "CP2"])
def test_dist_table_grows_at_most_polynomially(spec):
    space = parse_space(spec)
    F = InvariantDistribution((atom(space, 0.3, 2), atom(space, 0.0), atom(space, 0.5, 1, -1.5)), bump(space, 0.4))
    table = dist_table(space, F, 60)
    norms = np.array([w.norm for w in table.weights()])
    scaled = np.array([abs(table[w]) for w in table.weights()]) / (1 + norms) ** 2
    assert np.max(scaled) <= 1.05 * np.max(scaled[norms <= 20])


def test_pair_is_linear_in_the_test_function():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.2), atom(s2, 0.3, 1, 0.5j)), bump(s2, 0.4))
    f, g = bump(s2, 0.5), shell_bump(s2, 0.1, 0.5)
    a, b = 2 - 1j, 0.25 + 3j
    combined = RadialProfile(lambda t: a * f.evaluator(t) + b * g.evaluator(t), 0.5, name="a*f+b*g")
    expected = a * pair(s2, F, f) + b * pair(s2, F, g)
    assert abs(pair(s2, F, combined) - expected) < 1e-9 * max(1.0, abs(expected))


def test_dist_transform_is_linear_in_the_distribution():
    s2 = parse_space("S2")
    F = InvariantDistribution((atom(s2, 0.3, 1),))
    G = density_distribution(bump(s2, 0.4))
    a, b = -0.5 + 2j, 3.0
    combined = F.scaled(a) + G.scaled(b)
    for w in lattice_points(s2, 15):
        expected = a * dist_transform(s2, F, w) + b * dist_transform(s2, G, w)
        assert abs(dist_transform(s2, combined, w) - expected) < 1e-10 * max(1.0, abs(expected))
