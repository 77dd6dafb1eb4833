"""
Paley-Wiener
Holomorphic extension of spherical transforms, growth-type estimation,
reconstruction of distributions from spectral data, the singular-support
test and solvability of invariant differential equations P(Delta) T = F.

Spectral coordinates follow geometry: a growth ray is lam = i*sigma*xi and
the exponential factor of an envelope is exp(r |Im lam|).
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field

from harmonics.distributions import InvariantDistribution, pair
from harmonics.geometry import (
    GeometryError,
    SpaceDescriptor,
    SpectralLike,
    SpectralPoint,
    Weight,
    check_radius,
    contragredient,
    dimension,
    eigenvalue,
    lattice_points,
    longest_weyl_image,
    spectral_coords,
    within_lattice,
)
from harmonics.spherical import factor_values, spherical_values
from harmonics.transform import (
    CoefficientTable,
    ProfileGrid,
    Quadrature,
    RadialProfile,
    adequate_nodes,
    bump,
    coefficient_table,
    factor_rule,
    fold,
    profile_grid,
    shell_bump,
)

CIRCLE_NODES = 32
TYPE_SIGMA = 320.0


class CertificateError(ValueError):
    """Reconstruction requested without a usable Paley-Wiener certificate."""


class TailBoundError(ArithmeticError):
    """Series tail above the requested tolerance."""


class Provenance(Enum):
    FUNCTION = "function"
    DISTRIBUTION = "distribution"
    SYNTHETIC = "synthetic"
    QUOTIENT = "quotient"


class TransformKind(str, Enum):
    SMOOTH = "smooth"               # PW_r
    DISTRIBUTION = "distribution"   # PW*_r


@dataclass(frozen=True, eq=False)
class HoloTransform:
    space: SpaceDescriptor
    evaluator: Callable[[np.ndarray], complex]
    provenance: Provenance
    weyl_symmetric: bool = True
    name: str = "transform"

    def __call__(self, lam: SpectralLike) -> complex:
        return complex(self.evaluator(spectral_coords(self.space, lam)))

    def on_lattice(self, max_norm: float) -> CoefficientTable:
        values = {w: self(w) for w in lattice_points(self.space, max_norm)}
        return CoefficientTable(self.space, values, max_norm)


def evaluate_grid(phi: HoloTransform, points: Sequence[SpectralLike], workers: int | None = None) -> np.ndarray:
    """Evaluate phi at every point; map order is preserved so reductions stay deterministic."""
    points = list(points)
    if not workers or workers == 1 or len(points) < 32:
        return np.array([phi(p) for p in points], dtype=complex)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(phi, points)), dtype=complex)


# ---------------------------------------------------------------------------
# Holomorphic extensions
# ---------------------------------------------------------------------------

def _grid_evaluator(space: SpaceDescriptor, grid: ProfileGrid) -> Callable[[np.ndarray], complex]:
    def evaluate(z: np.ndarray) -> complex:
        image = longest_weyl_image(space, z)
        rows = [
            factor_values(factor, image[j], rule.nodes).reshape(1, -1)
            for j, (factor, rule) in enumerate(zip(space.factors, grid.rules))
        ]
        return complex(grid.contract(rows).ravel()[0])
    return evaluate


def extend_function(space: SpaceDescriptor, f: RadialProfile, nodes: int | None = None) -> HoloTransform:
    """lam -> integral of f psi_{-lam-2rho}; entire in lam for supports below R."""
    check_radius(space, f.support_radius, "support radius")
    grid = profile_grid(space, f, nodes or adequate_nodes(0))
    return HoloTransform(space, _grid_evaluator(space, grid), Provenance.FUNCTION, name=f"ext({f.name})")


def synthetic_transform(space: SpaceDescriptor, f: RadialProfile, nodes: int = 512) -> HoloTransform:
    """Entire extension of a full-support profile by full-slice quadrature."""
    quad = Quadrature(tuple(factor_rule(factor, nodes) for factor in space.factors))
    shape = tuple(len(r.nodes) for r in quad.rules)
    weighted = (f(quad.nodes) * quad.weights).reshape(shape)
    grid = ProfileGrid(quad.rules, weighted)
    return HoloTransform(space, _grid_evaluator(space, grid), Provenance.SYNTHETIC, name=f"synthetic({f.name})")


def smooth_step(x: np.ndarray) -> np.ndarray:
    """1 for x <= 1/3, 0 for x >= 2/3, C-infinity in between."""
    x = np.asarray(x, dtype=float)
    up = np.where(x < 2 / 3, np.exp(-1 / np.maximum(2 / 3 - x, 1e-300)), 0.0)
    down = np.where(x > 1 / 3, np.exp(-1 / np.maximum(x - 1 / 3, 1e-300)), 0.0)
    return up / (up + down)


@lru_cache(maxsize=None)
def step_derivative_constants(j_max: int = 4) -> tuple[float, ...]:
    """sup |h^(j)| for j = 0..j_max, computed once on a fine grid."""
    x = np.linspace(0.0, 1.0, 20001)
    values = smooth_step(x)
    constants = [float(np.max(np.abs(values)))]
    for _ in range(j_max):
        values = np.gradient(values, x)
        constants.append(float(np.max(np.abs(values))))
    return tuple(constants)


def cutoff(space: SpaceDescriptor, r: float, delta: float) -> RadialProfile:
    """phi = h((d(x, o) - r)/delta): 1 on D_{r+delta/3}, 0 outside D_{r+2delta/3}."""
    if delta <= 0:
        raise ValueError(f"Cutoff margin must be positive, got {delta}")
    check_radius(space, r + delta, "r + delta")

    def evaluate(t):
        distance = np.linalg.norm(fold(space, t), axis=1)
        return smooth_step((distance - r) / delta)

    return RadialProfile(evaluate, r + delta, name=f"cutoff(r={r:g},delta={delta:g})")


def extend_distribution(space: SpaceDescriptor, F: InvariantDistribution, lam: SpectralLike, eps: float = 0.05) -> complex:
    """F~(lam) = F(phi psi_lam^vee) with the cutoff phi around supp F."""
    radius = F.support_radius
    check_radius(space, radius + eps, "support radius + cutoff margin")
    phi = cutoff(space, radius, eps)
    image = longest_weyl_image(space, lam)

    def evaluate(t):
        return phi.evaluator(t) * spherical_values(space, image, t, check=False)

    return pair(space, F, RadialProfile(evaluate, radius + eps, name="cutoff*psi"))


def distribution_transform(space: SpaceDescriptor, F: InvariantDistribution, eps: float = 0.05) -> HoloTransform:
    check_radius(space, F.support_radius + eps, "support radius + cutoff margin")
    return HoloTransform(
        space,
        lambda z: extend_distribution(space, F, z, eps),
        Provenance.DISTRIBUTION,
        name="ext(distribution)",
    )


# ---------------------------------------------------------------------------
# Growth type
# ---------------------------------------------------------------------------

class GrowthProfile(BaseModel):
    kind: TransformKind = Field(description="smooth (PW_r) or distribution (PW*_r)")
    order: int = Field(description="decay order k for PW_r, growth order N for PW*_r")
    constant: float = Field(description="fitted envelope constant C")
    type_radius: float = Field(description="fitted exponential type r")
    residual: float = Field(description="RMS residual of the type fit")
    grid: str = Field(description="description of the evaluation grid")
    fit_ok: bool = Field(default=True, description="False when the tail could not be fitted")


def default_directions(space: SpaceDescriptor) -> list[np.ndarray]:
    """Unit axes plus the diagonal directions."""
    if space.rank == 1:
        return [np.array([1.0])]
    directions = [row for row in np.eye(space.rank)]
    for signs in itertools.product((1.0, -1.0), repeat=space.rank - 1):
        directions.append(np.array((1.0,) + signs) / math.sqrt(space.rank))
    return directions


def _fit_type(sigma: np.ndarray, log_values: np.ndarray) -> tuple[float, float]:
    design = np.column_stack([sigma, np.sqrt(sigma), np.log(sigma), np.ones_like(sigma)])
    coef, *_ = np.linalg.lstsq(design, log_values, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - log_values) ** 2)))
    return float(coef[0]), residual


def _admissible(sigma: np.ndarray, values: np.ndarray, power: float, split: float) -> bool:
    envelope = (1 + sigma) ** power * values
    lower, upper = envelope[sigma <= split], envelope[sigma > split]
    return float(np.max(upper)) <= float(np.max(lower)) * (1 + 1e-9) + 1e-300


def _real_envelope(phi: HoloTransform, directions: Sequence[np.ndarray], sigma: np.ndarray, workers: int | None) -> np.ndarray:
    values = np.zeros(len(sigma))
    for xi in directions:
        values = np.maximum(values, np.abs(evaluate_grid(phi, [s * xi for s in sigma], workers)))
    return values


def estimate_type(
    phi: HoloTransform,
    directions: Sequence[np.ndarray] | None = None,
    sigma_max: float = 40.0,
    samples: int = 161,
    k_max: int = 8,
    workers: int | None = None,
    type_sigma: float = TYPE_SIGMA,
) -> GrowthProfile:
    """Fit exponential type on growth rays and polynomial order on real rays.

    Growth rays run over [type_sigma/2, type_sigma], real rays over [0, sigma_max].
    """
    space = phi.space
    directions = list(directions) if directions is not None else default_directions(space)
    sigma = np.linspace(0.0, sigma_max, samples)
    growth_sigma = np.linspace(type_sigma / 2, type_sigma, (samples + 1) // 2)

    slopes, residuals, fit_ok = [], [], True
    for xi in directions:
        growth = np.abs(evaluate_grid(phi, [1j * s * xi for s in growth_sigma], workers))
        if not np.all(np.isfinite(growth)) or np.any(growth <= 0):
            fit_ok = False
            continue
        slope, residual = _fit_type(growth_sigma, np.log(growth))
        slopes.append(slope)
        residuals.append(residual)
    real_values = _real_envelope(phi, directions, sigma, workers)

    type_radius = max(0.0, max(slopes, default=0.0))
    residual = max(residuals, default=math.inf)
    if residual > 0.5:
        fit_ok = False

    split = sigma_max / 2
    if _admissible(sigma, real_values, 1, split):
        kind = TransformKind.SMOOTH
        order = 1
        while order < k_max and _admissible(sigma, real_values, order + 1, split):
            order += 1
        constant = float(np.max((1 + sigma) ** order * real_values))
    else:
        kind = TransformKind.DISTRIBUTION
        order = 0
        while order < k_max and not _admissible(sigma, real_values, -order, split):
            order += 1
        if not _admissible(sigma, real_values, -order, split):
            fit_ok = False
        constant = float(np.max((1 + sigma) ** (-order) * real_values))

    return GrowthProfile(
        kind=kind,
        order=order,
        constant=constant,
        type_radius=type_radius,
        residual=residual,
        grid=(
            f"growth sigma in [{type_sigma / 2:g}, {type_sigma:g}] x {len(growth_sigma)}, "
            f"real sigma in [0, {sigma_max:g}] x {samples}, {len(directions)} directions"
        ),
        fit_ok=fit_ok,
    )


def decay_order(
    phi: HoloTransform,
    sigma_max: float = 40.0,
    samples: int = 161,
    lowest: float = -2.0,
    highest: float = 8.0,
    workers: int | None = None,
) -> float:
    """Smallest half-integer N with (1+sigma)^(-N) |Phi(sigma xi)| not rising past sigma_max/2.

    Negative N means Phi decays on the real rays; highest is returned when
    no candidate in [lowest, highest] bounds the tail.
    """
    sigma = np.linspace(0.0, sigma_max, samples)
    real_values = _real_envelope(phi, default_directions(phi.space), sigma, workers)
    for order in np.arange(lowest, highest + 0.25, 0.5):
        if _admissible(sigma, real_values, -float(order), sigma_max / 2):
            return float(order)
    return float(highest)


@dataclass(frozen=True)
class PWCertificate:
    k: int
    constant: float
    holds: bool
    worst_ratio: float


def pw_certificate(phi: HoloTransform, k: int, r: float, sigma_max: float = 40.0, samples: int = 41) -> PWCertificate:
    """Check |Phi| <= C (1+|lam|)^(-k) exp(r |Im lam|) on a complex grid.

    C is fitted on |lam| <= sigma_max/2; the outer part must obey 1.05 C.
    """
    xi = default_directions(phi.space)[0]
    u = np.linspace(0.0, sigma_max, samples)
    v = np.linspace(-sigma_max / 2, sigma_max / 2, samples)
    points = [complex(a, b) for a in u for b in v]
    values = np.abs(evaluate_grid(phi, [p * xi for p in points]))
    lam = np.array(points)
    ratio = values * (1 + np.abs(lam)) ** k * np.exp(-r * np.abs(lam.imag))
    inner = np.abs(lam) <= sigma_max / 2
    constant = float(np.max(ratio[inner]))
    worst = float(np.max(ratio[~inner]) / constant) if constant > 0 else 0.0
    return PWCertificate(k, constant, worst <= 1.05, worst)


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReconstructedDistribution:
    space: SpaceDescriptor
    table: CoefficientTable
    certificate: GrowthProfile
    tolerance: float

    def __call__(self, f: RadialProfile) -> complex:
        """F(f) = sum_mu d(mu*) f~(mu*) Phi(mu)."""
        space = self.space
        f_table = coefficient_table(space, f, self.table.max_norm)
        bound = self.table.max_norm
        norms, terms = [], []
        for w, value in self.table.values.items():
            dual = contragredient(space, w)
            norms.append(w.norm)
            terms.append(dimension(space, dual) * f_table[dual] * value)
        norms, terms = np.array(norms), np.array(terms, dtype=complex)

        scale = max(float(np.sum(np.abs(terms))), 1e-300)
        tail = abs(np.sum(terms[norms > 0.75 * bound]))
        if tail > self.tolerance * scale:
            raise TailBoundError(
                f"Series tail {tail:.3e} exceeds {self.tolerance:g} x {scale:.3e} at max_norm {bound:g} for {f.name}"
            )
        return complex(np.sum(terms))


def reconstruct_distribution(
    space: SpaceDescriptor,
    phi: HoloTransform,
    max_norm: float,
    certificate: GrowthProfile | None = None,
    tolerance: float = 1e-6,
) -> ReconstructedDistribution:
    if certificate is None:
        raise CertificateError("Reconstruction needs a PW* certificate; run estimate_type first")
    check_radius(space, certificate.type_radius, "certified type radius")
    return ReconstructedDistribution(space, phi.on_lattice(max_norm), certificate, tolerance)


def leakage_window(space: SpaceDescriptor, r: float, eta: float = 0.1) -> tuple[float, float]:
    """Radial range (r + eta, R - 0.02) swept by the exterior shells."""
    lo, hi = r + eta, space.validity_radius - 0.02
    if not lo < hi:
        raise GeometryError(f"No room for exterior shells beyond r + eta = {lo:g} below R - 0.02 = {hi:.6g} on {space}")
    return lo, hi


def support_leakage(
    F: Callable[[RadialProfile], complex],
    space: SpaceDescriptor,
    r: float,
    eta: float = 0.1,
    interior: RadialProfile | None = None,
) -> float:
    """max |F(shell)| / |F(interior)| over wide shells inside (r + eta, R)."""
    lo, hi = leakage_window(space, r, eta)
    width = hi - lo
    shells = [(lo, hi), (lo + 0.1 * width, hi), (lo, hi - 0.1 * width)]
    if interior is None:
        interior = bump(space, max(0.5, lo))
    reference = abs(F(interior))
    leaks = [abs(F(shell_bump(space, a, b))) for a, b in shells]
    return max(leaks) / max(reference, 1e-300)


# ---------------------------------------------------------------------------
# Singular support
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingSuppEntry:
    m: int
    constants: tuple[float, ...]
    slope: float
    passed: bool


@dataclass(frozen=True)
class SingSuppReport:
    s: float
    order: float
    grid_bounds: tuple[float, ...]
    entries: tuple[SingSuppEntry, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


def singsupp_test(
    space: SpaceDescriptor,
    phi: HoloTransform,
    s: float,
    m_list: Sequence[int] = (1, 2, 4, 6),
    grid_bounds: Sequence[float] = (20, 40, 80),
    order: float | None = None,
    growth_tolerance: float = 0.25,
    radial_step: float = 1.0,
    levels: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    workers: int | None = None,
) -> SingSuppReport:
    """Fit C_m in |Phi| <= C_m (1+|lam|)^N exp(s |Im lam|) over |Im lam| <= m log(1+|lam|).

    A bound m fails when C_m grows faster than (grid bound)^growth_tolerance
    between the two largest grids.
    """
    if order is None:
        order = decay_order(phi, workers=workers)
    bounds = tuple(sorted(float(b) for b in grid_bounds))
    radii = np.concatenate([[0.0], np.arange(1.0, bounds[-1] + radial_step / 2, radial_step)])
    directions = default_directions(space)

    entries = []
    for m in m_list:
        rows = []
        for rho in radii:
            for q in levels:
                v = min(q * m * math.log1p(rho), rho)
                u = math.sqrt(max(rho * rho - v * v, 0.0))
                rows.extend((rho, v, complex(u, v) * xi) for xi in directions)
        values = np.abs(evaluate_grid(phi, [p for _, _, p in rows], workers))
        rho_arr = np.array([r for r, _, _ in rows])
        v_arr = np.array([v for _, v, _ in rows])
        ratio = values / ((1 + rho_arr) ** order * np.exp(s * v_arr))
        constants = tuple(float(np.max(ratio[rho_arr <= b])) for b in bounds)
        slope = (math.log(constants[-1]) - math.log(constants[-2])) / (math.log(bounds[-1]) - math.log(bounds[-2])) \
            if len(bounds) > 1 and constants[-2] > 0 else 0.0
        entries.append(SingSuppEntry(int(m), constants, slope, slope <= growth_tolerance))
    return SingSuppReport(s, float(order), bounds, tuple(entries))


# ---------------------------------------------------------------------------
# Solvability
# ---------------------------------------------------------------------------

def symbol(space: SpaceDescriptor, coefficients: Sequence[complex], lam: SpectralLike) -> complex:
    """P(-omega(lam)) for D = sum_k c_k Delta^k."""
    return complex(np.polynomial.polynomial.polyval(-eigenvalue(space, lam), np.asarray(coefficients, dtype=complex)))


def _symbol_gradient(space: SpaceDescriptor, coefficients: Sequence[complex], z: np.ndarray) -> np.ndarray:
    derivative = np.polynomial.polynomial.polyder(np.asarray(coefficients, dtype=complex))
    outer = complex(np.polynomial.polynomial.polyval(-eigenvalue(space, z), derivative))
    return -outer * (2 * z + 2 * space.rho)


def symbol_zeros(space: SpaceDescriptor, coefficients: Sequence[complex], probe_norm: float = 30.0) -> list[SpectralPoint]:
    """Zeros of lam -> P(-omega(lam)) pulled back from companion-matrix roots."""
    coefficients = np.trim_zeros(np.asarray(coefficients, dtype=complex), "b")
    if len(coefficients) < 2:
        return []
    roots = np.roots(coefficients[::-1])
    rho = space.rho
    found: dict[tuple, SpectralPoint] = {}

    anchors = lattice_points(space, probe_norm) if space.rank > 1 else [Weight((0,))]
    for x0 in roots:
        for anchor in anchors:
            for j in range(space.rank):
                others = sum(
                    complex(k) * (k + 2 * rho[i]) for i, k in enumerate(anchor.coords) if i != j
                )
                target = -x0 - others
                disc = np.sqrt(complex(rho[j] ** 2 + target))
                for root in (-rho[j] + disc, -rho[j] - disc):
                    z = np.array(anchor.coords, dtype=complex)
                    z[j] = root
                    if space.rank > 1 and np.linalg.norm(z) > probe_norm + 2:
                        continue
                    key = tuple(np.round(z, 9))
                    found.setdefault(key, SpectralPoint(tuple(complex(c) for c in z)))
    return sorted(found.values(), key=lambda p: (p.norm, tuple((c.real, c.imag) for c in p.coords)))


def _ring(z: np.ndarray, direction: int, radius: float, nodes: int = CIRCLE_NODES) -> tuple[list[np.ndarray], np.ndarray]:
    theta = 2 * np.pi * np.arange(nodes) / nodes
    points = []
    for angle in theta:
        p = z.copy()
        p[direction] += radius * np.exp(1j * angle)
        points.append(p)
    return points, theta


@dataclass(frozen=True)
class ZeroRecord:
    point: SpectralPoint
    lattice_weight: Weight | None
    value: complex
    removable: bool


@dataclass(frozen=True, eq=False)
class SolveReport:
    solvable: bool
    support_preserving: bool
    zeros: tuple[ZeroRecord, ...]
    offending: ZeroRecord | None
    transform: HoloTransform | None


def solve(
    space: SpaceDescriptor,
    coefficients: Sequence[complex],
    phi_F: HoloTransform,
    probe_norm: float = 30.0,
    zero_tolerance: float = 1e-8,
    radius: float = 1e-2,
    patch: str = "circle",
) -> SolveReport:
    """Decide whether P(Delta) T = F has a solution and build T~ when it does.

    Solvable iff Phi_F vanishes at every lattice-relevant zero of the symbol
    and the quotient is continuous there. support_preserving additionally
    requires a removable quotient at every zero.
    """
    if patch not in ("circle", "taylor"):
        raise ValueError(f"Unknown patch strategy '{patch}'")

    def quotient_at(z: np.ndarray) -> complex:
        return phi_F(z) / symbol(space, coefficients, z)

    def ring_peak(z: np.ndarray, r: float) -> float:
        peak = 0.0
        for j in range(space.rank):
            points, _ = _ring(z, j, r)
            peak = max(peak, max(abs(quotient_at(p)) for p in points))
        return peak

    zeros = symbol_zeros(space, coefficients, probe_norm)
    records = []
    for point in zeros:
        z = point.as_array()
        coarse, fine = ring_peak(z, radius), ring_peak(z, radius / 2)
        removable = bool(np.isfinite(fine)) and fine <= 1.5 * coarse + 1e-300
        records.append(ZeroRecord(point, within_lattice(space, z), phi_F(z), removable))

    offending = None
    for record in records:
        if record.lattice_weight is None:
            continue
        if abs(record.value) >= zero_tolerance or not record.removable:
            offending = record
            break
    solvable = offending is None
    support_preserving = all(r.removable for r in records)

    zero_points = [r.point.as_array() for r in records]

    def circle_mean(z: np.ndarray) -> complex:
        points, _ = _ring(z, 0, radius)
        return complex(np.mean([quotient_at(p) for p in points]))

    def taylor_ratio(z: np.ndarray) -> complex:
        gradient = _symbol_gradient(space, coefficients, z)
        j = int(np.argmax(np.abs(gradient)))
        points, theta = _ring(z, j, radius / 2)
        values = np.array([phi_F(p) for p in points])
        derivative = np.mean(values * np.exp(-1j * theta)) / (radius / 2)
        return complex(derivative / gradient[j])

    def evaluate(z: np.ndarray) -> complex:
        near = [zp for zp in zero_points if np.linalg.norm(z - zp) < radius / 2]
        if not near:
            return quotient_at(z)
        if patch == "taylor" and np.linalg.norm(z - near[0]) < 1e-12:
            return taylor_ratio(near[0])
        return circle_mean(z)

    transform = None
    if solvable:
        transform = HoloTransform(space, evaluate, Provenance.QUOTIENT, phi_F.weyl_symmetric, f"{phi_F.name}/P")
    return SolveReport(solvable, support_preserving, tuple(records), offending, transform)


def coefficient_residual(
    space: SpaceDescriptor,
    coefficients: Sequence[complex],
    phi_T: HoloTransform,
    phi_F: HoloTransform,
    max_norm: float = 30.0,
) -> float:
    """max over the lattice of |P(-omega(mu)) T~(mu) - F~(mu)|."""
    worst = 0.0
    for w in lattice_points(space, max_norm):
        worst = max(worst, abs(symbol(space, coefficients, w) * phi_T(w) - phi_F(w)))
    return worst
