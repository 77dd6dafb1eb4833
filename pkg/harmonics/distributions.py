"""
Invariant Distributions
K-invariant distributions of small support modelled as radial atoms
(orbit averages of point evaluations and their radial derivatives) plus a
smooth density. Pairing, lattice transforms, the pairing series and
Laplacian seminorm certificates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb

from harmonics.geometry import (
    SpaceDescriptor,
    Weight,
    check_radius,
    contragredient,
    dimension,
    lattice_points,
)
from harmonics.spherical import polynomial_table, radial_derivative
from harmonics.transform import (
    CoefficientTable,
    RadialProfile,
    coefficient_table,
    forward,
    integrate,
    laplacian_seminorms,
    schur_probe,
)

CAUCHY_TOLERANCE = 1e-6


class DistributionError(ValueError):
    """Malformed distribution or a pairing the model cannot evaluate."""


class PairingDivergenceError(ArithmeticError):
    """Partial sums of the pairing series fail the Cauchy test."""


@dataclass(frozen=True)
class Atom:
    position: tuple[float, ...]
    order: tuple[int, ...]
    coefficient: complex = 1.0

    @property
    def radius(self) -> float:
        return math.sqrt(sum(p * p for p in self.position))


def atom(space: SpaceDescriptor, s, j=0, c: complex = 1.0) -> Atom:
    """Atom c * (d/ds)^j at radial position s; s and j may be per-factor tuples."""
    position = tuple(float(v) for v in np.broadcast_to(np.atleast_1d(s), (space.rank,)))
    if isinstance(j, int):
        order = (j,) + (0,) * (space.rank - 1)
    else:
        order = tuple(int(v) for v in j)
    if len(order) != space.rank:
        raise DistributionError(f"Atom order needs {space.rank} entries, got {len(order)}")
    if any(o < 0 for o in order) or any(p < 0 for p in position):
        raise DistributionError("Atom positions and orders must be nonnegative")
    return Atom(position, order, complex(c))


def _sum_profiles(first: RadialProfile | None, second: RadialProfile | None) -> RadialProfile | None:
    if first is None or second is None:
        return first or second
    return RadialProfile(
        evaluator=lambda t: first.evaluator(t) + second.evaluator(t),
        support_radius=max(first.support_radius, second.support_radius),
        smooth=first.smooth and second.smooth,
        name=f"{first.name}+{second.name}",
    )


@dataclass(frozen=True, eq=False)
class InvariantDistribution:
    atoms: tuple[Atom, ...] = field(default_factory=tuple)
    density: RadialProfile | None = None

    @property
    def support_radius(self) -> float:
        radii = [a.radius for a in self.atoms]
        if self.density is not None:
            radii.append(self.density.support_radius)
        return max(radii, default=0.0)

    def __add__(self, other: InvariantDistribution) -> InvariantDistribution:
        return InvariantDistribution(self.atoms + other.atoms, _sum_profiles(self.density, other.density))

    def scaled(self, c: complex) -> InvariantDistribution:
        atoms = tuple(Atom(a.position, a.order, c * a.coefficient) for a in self.atoms)
        density = self.density.scaled(c) if self.density is not None else None
        return InvariantDistribution(atoms, density)


def delta(space: SpaceDescriptor) -> InvariantDistribution:
    """Point evaluation at the base point o."""
    return InvariantDistribution((atom(space, 0.0),))


def density_distribution(profile: RadialProfile) -> InvariantDistribution:
    return InvariantDistribution((), profile)


def validate(space: SpaceDescriptor, F: InvariantDistribution) -> None:
    check_radius(space, F.support_radius, "support radius")


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------

def _step(position: float, order: int) -> float:
    if order == 1:
        return 1e-5 * (1 + position)
    return (1 + position) * np.finfo(float).eps ** (1 / (order + 4))


def _stencil(order: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Central difference delta^order: offsets and coefficients (divide by h^order)."""
    k = np.arange(order + 1)
    offsets = (order / 2 - k) * h
    coeffs = (-1.0) ** k * comb(order, k)
    return offsets, coeffs


def _difference(f: Callable[[np.ndarray], np.ndarray], position: np.ndarray, orders: Sequence[int], scale: float) -> complex:
    stencils = []
    denominator = 1.0
    for s, o in zip(position, orders):
        h = _step(s, o) * scale if o else 0.0
        stencils.append(_stencil(o, h))
        if o:
            denominator *= h ** o

    points, weights = [], []
    for combo in itertools.product(*[range(len(st[0])) for st in stencils]):
        points.append([position[j] + stencils[j][0][i] for j, i in enumerate(combo)])
        weights.append(np.prod([stencils[j][1][i] for j, i in enumerate(combo)]))
    values = f(np.array(points))
    return complex(np.dot(weights, values) / denominator)


def atom_derivative(f: RadialProfile, a: Atom) -> complex:
    """Mixed radial derivative of f at the atom, one Richardson step."""
    position = np.array(a.position)
    if not any(a.order):
        return complex(f(position.reshape(1, -1))[0])
    coarse = _difference(f, position, a.order, 1.0)
    fine = _difference(f, position, a.order, 0.5)
    return (4 * fine - coarse) / 3


def pair(space: SpaceDescriptor, F: InvariantDistribution, f: RadialProfile, nodes: int | None = None) -> complex:
    """F(f): atom terms by finite differences plus the density integral."""
    if not f.smooth and any(any(a.order) for a in F.atoms):
        raise DistributionError(f"Profile {f.name} is not smooth; derivative atoms cannot be paired")

    total = sum((a.coefficient * atom_derivative(f, a) for a in F.atoms), 0j)
    if F.density is not None:
        g = F.density
        product = RadialProfile(
            evaluator=lambda t: g.evaluator(t) * f.evaluator(t),
            support_radius=min(g.support_radius, f.support_radius),
            name=f"{g.name}*{f.name}",
        )
        total += integrate(space, product, nodes)
    return complex(total)


# ---------------------------------------------------------------------------
# Transforms on the lattice
# ---------------------------------------------------------------------------

def dist_transform(space: SpaceDescriptor, F: InvariantDistribution, mu: Weight) -> complex:
    """F~(mu) = F(psi_{mu*})."""
    dual = contragredient(space, mu)
    total = 0j
    for a in F.atoms:
        total += a.coefficient * radial_derivative(space, dual, a.position, a.order)
    if F.density is not None:
        total += forward(space, F.density, mu)
    return complex(total)


def dist_table(space: SpaceDescriptor, F: InvariantDistribution, max_norm: float) -> CoefficientTable:
    weights = lattice_points(space, max_norm)
    values = {w: 0j for w in weights}

    for a in F.atoms:
        if any(a.order):
            for w in weights:
                values[w] += a.coefficient * radial_derivative(space, contragredient(space, w), a.position, a.order)
            continue
        rows = [
            polynomial_table(factor, max(abs(w.coords[j]) for w in weights), np.array([a.position[j]]))[:, 0]
            for j, factor in enumerate(space.factors)
        ]
        for w in weights:
            values[w] += a.coefficient * np.prod([rows[j][abs(k)] for j, k in enumerate(w.coords)])

    if F.density is not None:
        density_table = coefficient_table(space, F.density, max_norm)
        for w in weights:
            values[w] += density_table[w]
    return CoefficientTable(space, values, max_norm)


def pairing_series(
    space: SpaceDescriptor,
    F_table: CoefficientTable,
    f_table: CoefficientTable,
    tolerance: float = CAUCHY_TOLERANCE,
) -> complex:
    """sum_mu d(mu) f~(mu*) F~(mu), with a Cauchy test on the outer shells."""
    bound = min(F_table.max_norm, f_table.max_norm)
    terms = []
    for w in F_table.weights():
        if w.norm > bound + 1e-9:
            continue
        dual = contragredient(space, w)
        terms.append((w.norm, dimension(space, w) * f_table.get(dual) * F_table[w]))

    norms = np.array([n for n, _ in terms])
    values = np.array([v for _, v in terms], dtype=complex)
    total = complex(np.sum(values))

    outer = abs(np.sum(values[norms > 0.75 * bound]))
    inner = abs(np.sum(values[(norms > 0.5 * bound) & (norms <= 0.75 * bound)]))
    if outer > tolerance * max(1.0, abs(total)) and outer >= inner:
        raise PairingDivergenceError(
            f"Pairing series not Cauchy at max_norm {bound:g}: outer shell {outer:.3e} >= inner shell {inner:.3e}"
        )
    return total


# ---------------------------------------------------------------------------
# Seminorm certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeminormCertificate:
    m: int
    constant: float
    holds: bool
    ratios: tuple[float, ...] = ()


def default_probes(space: SpaceDescriptor, count: int = 30) -> list[RadialProfile]:
    weights = lattice_points(space, 4 * count)[:count]
    return [schur_probe(space, w) for w in weights]


def seminorm_certificate(
    space: SpaceDescriptor,
    F: InvariantDistribution,
    probes: Sequence[RadialProfile] | None = None,
    m_max: int = 8,
    growth_factor: float = 2.0,
) -> SeminormCertificate:
    """Smallest m with |F(f)| <= C max_{j<=m} sup|Delta^j f| on the probe family.

    Probes are ordered from smooth to rough; m is accepted when the ratio
    does not grow by more than ``growth_factor`` from the first half of the
    family to the second.
    """
    probes = list(probes) if probes is not None else default_probes(space)
    if len(probes) < 2:
        raise DistributionError("Seminorm certificate needs at least two probes")

    values = np.array([abs(pair(space, F, f)) for f in probes])
    seminorms = [laplacian_seminorms(space, f, m_max) for f in probes]
    half = len(probes) // 2

    ratios = values
    for m in range(m_max + 1):
        scale = np.array([max(float(np.max(s[: m + 1])), 1e-300) for s in seminorms])
        ratios = values / scale
        early, late = float(np.max(ratios[:half])), float(np.max(ratios[half:]))
        if late <= growth_factor * early + 1e-300:
            return SeminormCertificate(m, float(np.max(ratios)), True, tuple(ratios))
    return SeminormCertificate(m_max, float(np.max(ratios)), False, tuple(ratios))
