"""
Spherical Transform
Forward spherical Fourier transform of K-invariant functions by radial
quadrature, Fourier-series synthesis and decay diagnostics.

Features:
    - Gauss-Jacobi rules with the invariant density, tensored over factors
    - Support-adapted Gauss-Legendre rules for compactly supported profiles
    - Whole coefficient tables by per-factor recurrence tables and tensor contraction
    - Profile families: bump, shell bump, von Mises, mollifier, Schur probe
    - Radial Laplacian (finite differences and spectral) and Sugiura seminorms
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import betaln, roots_jacobi, roots_legendre

from harmonics.geometry import (
    Factor,
    FactorKind,
    SpaceDescriptor,
    Weight,
    dimension,
    eigenvalue,
    lattice_points,
    radial_density,
    radial_drift,
)
from harmonics.spherical import polynomial_table, radial_grid

SUPPORT_NODES = 256


class ResolutionError(ValueError):
    """Quadrature too coarse for the requested spectral range."""


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialProfile:
    evaluator: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    smooth: bool = True
    name: str = "profile"
    grid: np.ndarray | None = None
    eigenvalue: complex | None = None   # set for spherical functions

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 1:
            t = t.reshape(-1, 1)
        return np.asarray(self.evaluator(t))

    def scaled(self, factor: complex, name: str | None = None) -> RadialProfile:
        return RadialProfile(
            evaluator=lambda t: factor * self.evaluator(t),
            support_radius=self.support_radius,
            smooth=self.smooth,
            name=name or f"{factor}*{self.name}",
            grid=self.grid,
            eigenvalue=self.eigenvalue,
        )


def fold(space: SpaceDescriptor, t: np.ndarray) -> np.ndarray:
    """Map coordinates onto the radial slice using evenness and periodicity."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    for j, factor in enumerate(space.factors):
        col = t[:, j]
        if factor.kind is FactorKind.REAL_PROJECTIVE:
            col = np.mod(col, math.pi)
            out[:, j] = np.minimum(col, math.pi - col)
        else:
            col = np.mod(col, 2 * math.pi)
            out[:, j] = np.minimum(col, 2 * math.pi - col)
    return out


def radial_norm(space: SpaceDescriptor, t: np.ndarray) -> np.ndarray:
    return np.linalg.norm(fold(space, radial_grid(space, t).real), axis=1)


def _bump_shape(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1 - 1 / (1 - x[inside] ** 2))
    return out


def bump(space: SpaceDescriptor, r: float) -> RadialProfile:
    """exp(1 - 1/(1 - (|t|/r)^2)) on |t| < r, zero outside."""
    if r <= 0:
        raise ValueError(f"Bump radius must be positive, got {r}")
    return RadialProfile(
        evaluator=lambda t: _bump_shape(np.linalg.norm(fold(space, t), axis=1) / r),
        support_radius=r,
        name=f"bump(r={r:g})",
    )


def shell_bump(space: SpaceDescriptor, inner: float, outer: float) -> RadialProfile:
    """Bump supported in the annulus inner < |t| < outer."""
    if not 0 <= inner < outer:
        raise ValueError(f"Shell needs 0 <= inner < outer, got ({inner}, {outer})")
    center, width = (inner + outer) / 2, (outer - inner) / 2
    return RadialProfile(
        evaluator=lambda t: _bump_shape((np.linalg.norm(fold(space, t), axis=1) - center) / width),
        support_radius=outer,
        name=f"shell({inner:g},{outer:g})",
    )


def von_mises(space: SpaceDescriptor, kappa: float = 4.0) -> RadialProfile:
    """Analytic full-support profile prod_j exp(kappa (cos(pi t_j / diameter_j) - 1))."""
    scales = np.array([math.pi / f.diameter for f in space.factors])

    def evaluate(t):
        return np.exp(kappa * np.sum(np.cos(fold(space, t) * scales) - 1, axis=1))

    return RadialProfile(evaluate, space.diameter, name=f"von_mises(kappa={kappa:g})")


def constant_profile(space: SpaceDescriptor, value: complex = 1.0) -> RadialProfile:
    return RadialProfile(
        evaluator=lambda t: np.full(np.asarray(t).shape[0], value),
        support_radius=space.diameter,
        name=f"constant({value})",
        eigenvalue=0.0 if value else None,
    )


def schur_probe(space: SpaceDescriptor, nu: Weight) -> RadialProfile:
    """The spherical function psi_nu as a profile."""
    ks = [abs(k) for k in nu.coords]

    def evaluate(t):
        folded = fold(space, t)
        out = np.ones(folded.shape[0])
        for j, (factor, k) in enumerate(zip(space.factors, ks)):
            out = out * polynomial_table(factor, k, folded[:, j])[k]
        return out

    return RadialProfile(
        evaluate, space.diameter, name=f"psi({nu})", eigenvalue=eigenvalue(space, nu)
    )


def mollifier(space: SpaceDescriptor, eps: float) -> RadialProfile:
    """f_eps: nonnegative bump in D_eps(o) with unit integral."""
    base = bump(space, eps)
    mass = forward(space, base, Weight((0,) * space.rank)).real
    return base.scaled(1 / mass, name=f"mollifier(eps={eps:g})")


def support_violations(space: SpaceDescriptor, f: RadialProfile, samples: int = 400) -> int:
    """Count grid points beyond the declared support where f does not vanish."""
    if f.support_radius >= space.diameter:
        return 0
    bad = 0
    for factor_index in range(space.rank):
        t = np.zeros((samples, space.rank))
        t[:, factor_index] = np.linspace(f.support_radius, space.factors[factor_index].diameter, samples)
        outside = radial_norm(space, t) > f.support_radius + 1e-12
        bad += int(np.count_nonzero(np.abs(f(t)[outside]) > 0))
    return bad


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FactorRule:
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class Quadrature:
    rules: tuple[FactorRule, ...]

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*[r.nodes for r in self.rules], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def weights(self) -> np.ndarray:
        w = self.rules[0].weights
        for rule in self.rules[1:]:
            w = np.multiply.outer(w, rule.weights)
        return np.asarray(w).ravel()

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.dot(self.weights, values))


def adequate_nodes(max_norm: float) -> int:
    return max(64, int(math.ceil(2 * max_norm)) + 16)


def _density_mass(factor: Factor) -> float:
    if factor.is_circle:
        return math.pi
    a, b = factor.polynomial_params
    mass = math.exp(betaln(a + 1, b + 1))
    return mass / 2 if factor.kind is FactorKind.REAL_PROJECTIVE else mass


@lru_cache(maxsize=256)
def factor_rule(factor: Factor, n: int) -> FactorRule:
    """Full-slice rule exact for polynomials in cos t of degree <= 2n - 1."""
    if factor.is_circle:
        theta = (np.arange(n) + 0.5) * math.pi / n
        return FactorRule(theta, np.full(n, 1.0 / n))
    a, b = factor.polynomial_params
    u, w = roots_jacobi(n, a, b)
    t = np.arccos(np.clip(u, -1.0, 1.0))
    if factor.kind is FactorKind.REAL_PROJECTIVE:
        t = np.minimum(t, math.pi - t)
    return FactorRule(t, w / np.sum(w))


@lru_cache(maxsize=256)
def support_rule(factor: Factor, n: int, radius: float) -> FactorRule:
    """Gauss-Legendre on [0, radius] carrying the normalized invariant density."""
    length = min(radius, factor.diameter)
    x, w = roots_legendre(n)
    t = (x + 1) * length / 2
    weights = w * length / 2 * radial_density(factor, t) / _density_mass(factor)
    return FactorRule(t, weights)


def quadrature(space: SpaceDescriptor, n: int) -> Quadrature:
    if n < 1:
        raise ResolutionError(f"Node count must be positive, got {n}")
    return Quadrature(tuple(factor_rule(f, n) for f in space.factors))


@dataclass(frozen=True, eq=False)
class ProfileGrid:
    """Profile values times quadrature weights on a tensor grid."""
    rules: tuple[FactorRule, ...]
    weighted: np.ndarray

    def contract(self, tables: Sequence[np.ndarray]) -> np.ndarray:
        """Contract factor j's node axis against tables[j] of shape (K_j, n_j)."""
        out = self.weighted
        for table in tables:
            out = np.tensordot(out, table, axes=([0], [1]))
        return out


def _rules_for(space: SpaceDescriptor, f: RadialProfile, n: int) -> tuple[FactorRule, ...]:
    rules = []
    for factor in space.factors:
        if f.support_radius < factor.diameter:
            rules.append(support_rule(factor, max(SUPPORT_NODES, n), float(f.support_radius)))
        else:
            rules.append(factor_rule(factor, n))
    return tuple(rules)


@lru_cache(maxsize=64)
def profile_grid(space: SpaceDescriptor, f: RadialProfile, n: int) -> ProfileGrid:
    rules = _rules_for(space, f, n)
    quad = Quadrature(rules)
    values = f(quad.nodes) * quad.weights
    shape = tuple(len(r.nodes) for r in rules)
    return ProfileGrid(rules, np.asarray(values).reshape(shape))


def integrate(space: SpaceDescriptor, f: RadialProfile, n: int | None = None) -> complex:
    grid = profile_grid(space, f, n or adequate_nodes(0))
    return complex(np.sum(grid.weighted))


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------

@dataclass
class CoefficientTable:
    space: SpaceDescriptor
    values: dict[Weight, complex]
    max_norm: float

    def __getitem__(self, mu: Weight) -> complex:
        return self.values[mu]

    def __len__(self) -> int:
        return len(self.values)

    def get(self, mu: Weight, default: complex = 0.0) -> complex:
        return self.values.get(mu, default)

    def weights(self) -> list[Weight]:
        return sorted(self.values, key=lambda w: (w.norm, w.coords))

    def restricted(self, max_norm: float) -> CoefficientTable:
        kept = {mu: c for mu, c in self.values.items() if mu.norm <= max_norm + 1e-9}
        return CoefficientTable(self.space, kept, max_norm)


def forward(space: SpaceDescriptor, f: RadialProfile, mu: Weight, nodes: int | None = None) -> complex:
    """f~(mu) = integral of f times conj(psi_mu) against the normalized measure."""
    need = adequate_nodes(mu.norm)
    if nodes is not None and nodes < need:
        raise ResolutionError(f"{nodes} nodes cannot resolve |mu|={mu.norm:g}; need at least {need}")
    grid = profile_grid(space, f, nodes or need)
    rows = [
        polynomial_table(factor, abs(k), rule.nodes)[abs(k)].reshape(1, -1)
        for factor, k, rule in zip(space.factors, mu.coords, grid.rules)
    ]
    return complex(grid.contract(rows).ravel()[0])


def coefficient_table(space: SpaceDescriptor, f: RadialProfile, max_norm: float, nodes: int | None = None) -> CoefficientTable:
    need = adequate_nodes(max_norm)
    if nodes is not None and nodes < need:
        raise ResolutionError(f"{nodes} nodes cannot resolve max_norm={max_norm:g}; need at least {need}")
    weights = lattice_points(space, max_norm)
    grid = profile_grid(space, f, nodes or need)
    k_max = [max(abs(w.coords[j]) for w in weights) for j in range(space.rank)]
    tables = [
        polynomial_table(factor, k, rule.nodes)
        for factor, k, rule in zip(space.factors, k_max, grid.rules)
    ]
    block = grid.contract(tables)
    values = {w: complex(block[tuple(abs(k) for k in w.coords)]) for w in weights}
    return CoefficientTable(space, values, max_norm)


def schur_table(space: SpaceDescriptor, nu: Weight, max_norm: float) -> CoefficientTable:
    """Exact transform of psi_nu: delta_{nu, mu} / d(nu)."""
    values = {w: 0j for w in lattice_points(space, max_norm)}
    values[nu] = 1 / dimension(space, nu)
    return CoefficientTable(space, values, max_norm)


def _factor_dimension(factor: Factor, k: int) -> int:
    return dimension(SpaceDescriptor((factor,)), Weight((k,)))


def schur_overlap(space: SpaceDescriptor, mu: Weight, nu: Weight) -> float:
    """Exact integral of psi_mu psi_nu; circle factors pair +k with -k."""
    value = 1.0
    for factor, a, b in zip(space.factors, mu.coords, nu.coords):
        if factor.is_circle:
            if abs(a) != abs(b):
                return 0.0
            value *= 1.0 if a == 0 else 0.5
        else:
            if a != b:
                return 0.0
            value /= _factor_dimension(factor, a)
    return value


def schur_matrix(space: SpaceDescriptor, max_norm: float, nodes: int | None = None) -> tuple[list[Weight], np.ndarray]:
    """Weights and the matrix d(mu) * forward(psi_nu)(mu) over |mu|, |nu| <= max_norm."""
    weights = lattice_points(space, max_norm)
    quad = quadrature(space, nodes or adequate_nodes(max_norm))
    grams = []
    for j, (factor, rule) in enumerate(zip(space.factors, quad.rules)):
        k = max(abs(w.coords[j]) for w in weights)
        table = polynomial_table(factor, k, rule.nodes)
        grams.append((table * rule.weights) @ table.T)

    index = [tuple(abs(k) for k in w.coords) for w in weights]
    matrix = np.ones((len(weights), len(weights)))
    for j, gram in enumerate(grams):
        rows = np.array([ix[j] for ix in index])
        matrix *= gram[np.ix_(rows, rows)]
    dims = np.array([dimension(space, w) for w in weights], dtype=float)
    return weights, dims[:, None] * matrix


def synthesize_values(space: SpaceDescriptor, c: CoefficientTable, t) -> np.ndarray:
    """Truncated series sum_mu d(mu) c(mu) psi_mu at every row of t."""
    grid = radial_grid(space, t)
    weights = c.weights()
    if not weights:
        return np.zeros(grid.shape[0], dtype=complex)
    coef = np.array([dimension(space, w) * c[w] for w in weights], dtype=complex)
    product = np.ones((len(weights), grid.shape[0]), dtype=complex)
    for j, factor in enumerate(space.factors):
        idx = np.array([abs(w.coords[j]) for w in weights])
        table = polynomial_table(factor, int(idx.max()), grid[:, j])
        product *= table[idx]
    return coef @ product


def synthesize(space: SpaceDescriptor, c: CoefficientTable, x) -> complex:
    return complex(synthesize_values(space, c, x)[0])


def synthesized_profile(space: SpaceDescriptor, c: CoefficientTable, support_radius: float | None = None) -> RadialProfile:
    """Profile given by the truncated series, cut to a declared support."""
    radius = space.diameter if support_radius is None else support_radius

    def evaluate(t):
        values = synthesize_values(space, c, t)
        if radius < space.diameter:
            values = np.where(radial_norm(space, t) < radius, values, 0)
        return values

    return RadialProfile(evaluate, radius, name=f"series(B={c.max_norm:g})")


# ---------------------------------------------------------------------------
# Decay and norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    max_norm: float
    sups: tuple[float, ...] = field(default_factory=tuple)

    def stabilizes_against(self, longer: DecayReport, k_max: int, ratio: float = 1.1) -> bool:
        """True when every sup for k <= k_max grows by less than ``ratio``."""
        for k in range(k_max + 1):
            base = self.sups[k]
            if base == 0:
                if longer.sups[k] > 0:
                    return False
                continue
            if longer.sups[k] / base >= ratio:
                return False
        return True


def decay_profile(c: CoefficientTable, k_max: int = 8) -> DecayReport:
    sizes = np.array([abs(v) for v in c.values.values()])
    norms = np.array([w.norm for w in c.values])
    sups = tuple(float(np.max((1 + norms) ** k * sizes, initial=0.0)) for k in range(k_max + 1))
    return DecayReport(c.max_norm, sups)


def parseval_sum(c: CoefficientTable) -> float:
    return float(sum(dimension(c.space, w) * abs(v) ** 2 for w, v in c.values.items()))


def absolute_sum(c: CoefficientTable) -> float:
    return float(sum(dimension(c.space, w) * abs(v) for w, v in c.values.items()))


def l2_norm_squared(space: SpaceDescriptor, f: RadialProfile, nodes: int | None = None) -> float:
    n = nodes or adequate_nodes(0)
    quad = Quadrature(_rules_for(space, f, n))
    return float(np.dot(quad.weights, np.abs(f(quad.nodes)) ** 2))


def lattice_count_exponent(space: SpaceDescriptor, max_norm: float) -> float:
    """Slope of log #{|mu| <= B} against log B over B up to max_norm."""
    bounds = np.geomspace(max(2.0, max_norm / 8), max_norm, 8)
    counts = [len(lattice_points(space, b)) for b in bounds]
    slope, _ = np.polyfit(np.log(bounds), np.log(counts), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Laplacian
# ---------------------------------------------------------------------------

def radial_laplacian(space: SpaceDescriptor, f: RadialProfile, t, h: float = 1e-4) -> np.ndarray:
    """Finite-difference radial Laplacian of f at the rows of t."""
    grid = radial_grid(space, t).real
    center = f(grid)
    total = np.zeros(grid.shape[0], dtype=np.result_type(center, float))
    for j, factor in enumerate(space.factors):
        step = np.zeros(space.rank)
        step[j] = h
        plus, minus = f(grid + step), f(grid - step)
        second = (plus - 2 * center + minus) / h ** 2
        if factor.is_circle:
            total = total + second
            continue
        first = (plus - minus) / (2 * h)
        a, b = factor.polynomial_params
        col = grid[:, j]
        at_origin = np.abs(col) < 1e-6
        at_antipode = np.abs(col - math.pi) < 1e-6
        regular = ~(at_origin | at_antipode)
        drift = np.zeros_like(col)
        drift[regular] = radial_drift(factor, col[regular])
        term = second + drift * first
        term = np.where(at_origin, (2 * a + 2) * second, term)
        term = np.where(at_antipode, (2 * b + 2) * second, term)
        total = total + term
    return total


def laplacian_profile(space: SpaceDescriptor, f: RadialProfile, h: float = 1e-4) -> RadialProfile:
    return RadialProfile(
        evaluator=lambda t: radial_laplacian(space, f, t, h),
        support_radius=f.support_radius,
        smooth=f.smooth,
        name=f"laplacian({f.name})",
    )


def spectral_laplacian(c: CoefficientTable, power: int = 1) -> CoefficientTable:
    """Table of Delta^power f: multiply by (-omega(mu))^power."""
    values = {w: (-eigenvalue(c.space, w)) ** power * v for w, v in c.values.items()}
    return CoefficientTable(c.space, values, c.max_norm)


def laplacian_seminorms(space: SpaceDescriptor, f: RadialProfile, m: int, max_norm: float = 40.0) -> np.ndarray:
    """sup |Delta^j f| for j = 0..m."""
    if f.eigenvalue is not None:
        peak = float(np.max(np.abs(f(np.zeros((1, space.rank))))))
        return np.array([abs(f.eigenvalue) ** j * peak for j in range(m + 1)])

    table = coefficient_table(space, f, max_norm)
    points = np.vstack([np.zeros((1, space.rank)), quadrature(space, 64).nodes])
    return np.array([
        float(np.max(np.abs(synthesize_values(space, spectral_laplacian(table, j), points))))
        for j in range(m + 1)
    ])


def sugiura_seminorm(space: SpaceDescriptor, f: RadialProfile, m: int, max_norm: float = 40.0) -> float:
    """max_{j <= m} sup |Delta^j f|."""
    return float(np.max(laplacian_seminorms(space, f, m, max_norm)))


def profiles_from(space: SpaceDescriptor, weights: Iterable[Weight]) -> list[RadialProfile]:
    return [schur_probe(space, w) for w in weights]
