"""
Geometry
Restricted root data, the spherical weight semilattice and the Weyl action
for compact rank-one symmetric spaces and their products.

Registry:
    - S<n>   sphere,                  m_alpha = n-1, m_2alpha = 0, p = 1
    - RP<n>  real projective space,   m_alpha = n-1, m_2alpha = 0, p = 2
    - CP<n>  complex projective space, m_alpha = 2(n-1), m_2alpha = 1, p = 1
    - T1     circle factor, no roots

Units: every rooted factor is measured in units of its longest root
(2*alpha when m_2alpha > 0, otherwise alpha). The radial coordinate t is the
value of that root, the lattice is p*Z+ and omega_radius is pi/2 throughout.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    """Invalid space description, weight or radius."""


class FactorKind(Enum):
    SPHERE = "S"
    REAL_PROJECTIVE = "RP"
    COMPLEX_PROJECTIVE = "CP"
    CIRCLE = "T"


@dataclass(frozen=True)
class Factor:
    kind: FactorKind
    n: int
    m_alpha: int
    m_2alpha: int
    p: int                  # sublattice scale
    rho_coordinate: float   # (m_alpha + 2 m_2alpha)/2, short-root units
    omega_radius: float
    diameter: float

    @property
    def is_circle(self) -> bool:
        return self.kind is FactorKind.CIRCLE

    @property
    def root_scale(self) -> int:
        return 2 if self.m_2alpha > 0 else 1

    @property
    def rho(self) -> float:
        """rho in longest-root units, the shift used by every formula."""
        return self.rho_coordinate / self.root_scale

    @property
    def jacobi_params(self) -> tuple[float, float]:
        """Jacobi function parameters (a, b) in short-root units."""
        if self.is_circle:
            return (-0.5, -0.5)
        return ((self.m_alpha + self.m_2alpha - 1) / 2, (self.m_2alpha - 1) / 2)

    @property
    def polynomial_params(self) -> tuple[float, float]:
        """Jacobi polynomial parameters (alpha', beta') in the variable cos t."""
        a, _ = self.jacobi_params
        if self.is_circle:
            return (-0.5, -0.5)
        return (a, 2 * self.rho - a - 1)

    @property
    def validity_radius(self) -> float:
        return min(self.omega_radius, math.pi)

    @property
    def label(self) -> str:
        return "T1" if self.is_circle else f"{self.kind.value}{self.n}"


def make_factor(kind: FactorKind, n: int = 1) -> Factor:
    """Build a registry factor, validating the dimension."""
    if kind is FactorKind.CIRCLE:
        return Factor(kind, 1, 0, 0, 1, 0.0, math.inf, math.pi)
    if n < 2:
        raise GeometryError(f"{kind.value}{n}: dimension must be at least 2")

    if kind is FactorKind.SPHERE:
        m_alpha, m_2alpha, p, diameter = n - 1, 0, 1, math.pi
    elif kind is FactorKind.REAL_PROJECTIVE:
        m_alpha, m_2alpha, p, diameter = n - 1, 0, 2, math.pi / 2
    else:
        m_alpha, m_2alpha, p, diameter = 2 * (n - 1), 1, 1, math.pi

    rho_coordinate = (m_alpha + 2 * m_2alpha) / 2
    return Factor(kind, n, m_alpha, m_2alpha, p, rho_coordinate, math.pi / 2, diameter)


@dataclass(frozen=True)
class SpaceDescriptor:
    factors: tuple[Factor, ...]

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def label(self) -> str:
        return "x".join(f.label for f in self.factors)

    @property
    def rho(self) -> np.ndarray:
        return np.array([f.rho for f in self.factors])

    @property
    def validity_radius(self) -> float:
        """R: supports must stay strictly inside this radius."""
        return min(f.validity_radius for f in self.factors)

    @property
    def diameter(self) -> float:
        return math.sqrt(sum(f.diameter ** 2 for f in self.factors))

    def __str__(self) -> str:
        return self.label


_TOKEN = re.compile(r"^(S|RP|CP)(\d+)$|^T1?$")


def parse_space(spec: str) -> SpaceDescriptor:
    """Parse "S2", "RP3", "CP2", "S2xT1" into a SpaceDescriptor."""
    tokens = [tok.strip() for tok in spec.strip().split("x")]
    if not tokens or any(not tok for tok in tokens):
        raise GeometryError(f"Empty factor in space spec '{spec}'")

    factors = []
    for tok in tokens:
        match = _TOKEN.match(tok)
        if not match:
            raise GeometryError(f"Unknown factor '{tok}' in space spec '{spec}'")
        if match.group(1) is None:
            factors.append(make_factor(FactorKind.CIRCLE))
        else:
            factors.append(make_factor(FactorKind(match.group(1)), int(match.group(2))))
    return SpaceDescriptor(tuple(factors))


@dataclass(frozen=True, order=True)
class Weight:
    coords: tuple[int, ...]

    def __add__(self, other: Weight) -> Weight:
        return Weight(tuple(a + b for a, b in zip(self.coords, other.coords)))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.coords))

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.coords)


@dataclass(frozen=True)
class SpectralPoint:
    coords: tuple[complex, ...]

    @classmethod
    def of(cls, *values: complex) -> SpectralPoint:
        return cls(tuple(complex(v) for v in values))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.coords, dtype=complex)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=complex)


SpectralLike = SpectralPoint | Weight | Sequence[complex] | complex | float | int


def spectral_coords(space: SpaceDescriptor, value: SpectralLike) -> np.ndarray:
    """Normalize any spectral argument to a complex coordinate array."""
    if isinstance(value, (SpectralPoint, Weight)):
        arr = np.asarray(value.coords, dtype=complex)
    elif np.isscalar(value):
        arr = np.full(space.rank, complex(value))
    else:
        arr = np.asarray(value, dtype=complex).reshape(-1)
    if arr.shape != (space.rank,):
        raise GeometryError(f"Expected {space.rank} spectral coordinates, got {arr.shape[0]}")
    return arr


def is_spherical_weight(space: SpaceDescriptor, mu: Weight) -> bool:
    if len(mu.coords) != space.rank:
        return False
    for factor, k in zip(space.factors, mu.coords):
        if factor.is_circle:
            continue
        if k < 0 or k % factor.p:
            return False
    return True


def lattice_points(space: SpaceDescriptor, max_norm: float) -> list[Weight]:
    """All spherical weights with |mu| <= max_norm, sorted by norm then coordinates."""
    if max_norm < 0:
        raise GeometryError(f"max_norm must be nonnegative, got {max_norm}")

    bound = int(math.floor(max_norm + 1e-9))
    ranges = []
    for factor in space.factors:
        if factor.is_circle:
            ranges.append(range(-bound, bound + 1))
        else:
            ranges.append(range(0, bound + 1, factor.p))

    limit = max_norm * max_norm + 1e-9
    points = [
        Weight(coords) for coords in itertools.product(*ranges)
        if sum(c * c for c in coords) <= limit
    ]
    return sorted(points, key=lambda w: (w.norm, w.coords))


def weyl_images(space: SpaceDescriptor, lam: SpectralLike) -> set[SpectralPoint]:
    """The orbit {w(lam + rho) - rho}; circle coordinates reflect to -lam."""
    coords = spectral_coords(space, lam)
    choices = []
    for factor, z in zip(space.factors, coords):
        z = complex(z)
        choices.append({z, complex(-z - 2 * factor.rho)})
    return {SpectralPoint(tuple(c)) for c in itertools.product(*choices)}


def longest_weyl_image(space: SpaceDescriptor, lam: SpectralLike) -> np.ndarray:
    """-lam - 2 rho, the spectral argument of the contragredient function."""
    return -spectral_coords(space, lam) - 2 * space.rho


_RISING_RATIOS: dict[Factor, list[Fraction]] = {}


def _factor_dimension(factor: Factor, k: int) -> int:
    """(2k+s)/s * (s)_k (a+1)_k / (k! (b+1)_k) with s = a+b+1, in exact rationals."""
    k = int(k)
    a, b = (Fraction(x) for x in factor.polynomial_params)
    s = a + b + 1
    ratios = _RISING_RATIOS.setdefault(factor, [Fraction(1)])
    while len(ratios) <= k:
        i = len(ratios) - 1
        ratios.append(ratios[-1] * (s + i) * (a + 1 + i) / ((i + 1) * (b + 1 + i)))
    value = ratios[k] * (2 * k + s) / s
    if value.denominator != 1:
        raise GeometryError(f"Non-integral dimension {value} for {factor.kind.value}{factor.n} at k={k}")
    return value.numerator


def dimension(space: SpaceDescriptor, mu: Weight) -> int:
    """d(mu) = dim V_mu; products multiply, circle factors contribute 1."""
    if not is_spherical_weight(space, mu):
        raise GeometryError(f"{mu} is not a spherical weight of {space}")
    d = 1
    for factor, k in zip(space.factors, mu.coords):
        if factor.is_circle or k == 0:
            continue
        d *= _factor_dimension(factor, k)
    return d


def eigenvalue(space: SpaceDescriptor, lam: SpectralLike) -> complex:
    """omega(lam) = sum_j lam_j (lam_j + 2 rho_j); Delta psi_lam = -omega psi_lam."""
    z = spectral_coords(space, lam)
    return complex(np.sum(z * (z + 2 * space.rho)))


def contragredient(space: SpaceDescriptor, mu: Weight) -> Weight:
    if not is_spherical_weight(space, mu):
        raise GeometryError(f"{mu} is not a spherical weight of {space}")
    return Weight(tuple(-k if f.is_circle else k for f, k in zip(space.factors, mu.coords)))


def radial_density(factor: Factor, t: np.ndarray) -> np.ndarray:
    """Unnormalized invariant density on the radial slice."""
    if factor.is_circle:
        return np.ones_like(np.asarray(t, dtype=float))
    a, b = factor.polynomial_params
    half = np.asarray(t, dtype=float) / 2
    return np.sin(half) ** (2 * a + 1) * np.cos(half) ** (2 * b + 1)


def radial_drift(factor: Factor, t: np.ndarray) -> np.ndarray:
    """First-order coefficient of the radial Laplacian."""
    t = np.asarray(t, dtype=float)
    if factor.is_circle:
        return np.zeros_like(t)
    a, b = factor.polynomial_params
    return (a + 0.5) / np.tan(t / 2) - (b + 0.5) * np.tan(t / 2)


def check_radius(space: SpaceDescriptor, radius: float, name: str = "radius") -> None:
    """Raise GeometryError unless radius < R(space)."""
    R = space.validity_radius
    if not radius < R:
        raise GeometryError(f"{name}={radius:g} must be below the validity radius R={R:.6g} of {space}")


def within_lattice(space: SpaceDescriptor, lam: SpectralLike, tol: float = 1e-9) -> Weight | None:
    """Return the spherical weight Weyl-equivalent to lam, if any."""
    for image in weyl_images(space, lam):
        z = image.as_array()
        if np.max(np.abs(z.imag), initial=0.0) > tol:
            continue
        rounded = np.rint(z.real)
        if np.max(np.abs(z.real - rounded), initial=0.0) > tol:
            continue
        mu = Weight(tuple(int(v) for v in rounded))
        if is_spherical_weight(space, mu):
            return mu
    return None


def weights_from(space: SpaceDescriptor, rows: Iterable[Sequence[int]]) -> list[Weight]:
    weights = [Weight(tuple(int(c) for c in row)) for row in rows]
    bad = [w for w in weights if not is_spherical_weight(space, w)]
    if bad:
        raise GeometryError(f"Not spherical weights of {space}: {', '.join(map(str, bad))}")
    return weights
