"""
Spherical Functions
Evaluates psi_lambda on the radial slice for lattice and arbitrary complex
spectral parameters, and in complex radial points inside exp(Omega + i a).

Features:
    - Normalized Jacobi recurrence for lattice weights (whole tables at once)
    - 2F1 series in sin^2(t/2) for general lambda, shifted by the same
      recurrence so large |Re lambda| never meets cancellation
    - mpmath fallback near the singular point z = 1
    - Cauchy-contour radial derivatives and calibrated growth envelopes
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from harmonics.geometry import Factor, SpaceDescriptor, SpectralLike, spectral_coords

SERIES_TOLERANCE = 1e-14
SERIES_MAX_TERMS = 4000
SERIES_RADIUS = 0.9         # beyond this |z| the series hands over to mpmath
SHIFT_THRESHOLD = 2.0       # Re(nu) above this goes through the recurrence
CONTOUR_NODES = 64
GROWTH_MARGIN = 1.05


class DomainError(ValueError):
    """Radial point outside the admissible evaluation domain."""


class SeriesDivergenceError(ArithmeticError):
    """Hypergeometric series did not reach tolerance within the term cap."""


@dataclass(frozen=True)
class RadialPoint:
    coords: tuple[complex, ...]

    @classmethod
    def of(cls, *values: complex) -> RadialPoint:
        return cls(tuple(complex(v) for v in values))


RadialLike = RadialPoint | Sequence[complex] | complex | float


def radial_grid(space: SpaceDescriptor, x) -> np.ndarray:
    """Normalize radial input to a (M, rank) complex array."""
    if isinstance(x, RadialPoint):
        arr = np.asarray(x.coords, dtype=complex)
    else:
        arr = np.asarray(x, dtype=complex)
    if arr.ndim == 0:
        arr = np.full(space.rank, arr)
    if arr.ndim == 1:
        if space.rank == 1:
            arr = arr.reshape(-1, 1)
        else:
            arr = arr.reshape(1, -1)
    if arr.shape[1] != space.rank:
        raise DomainError(f"Expected {space.rank} radial coordinates per point, got {arr.shape[1]}")
    return arr


def check_domain(space: SpaceDescriptor, t: np.ndarray) -> None:
    for j, factor in enumerate(space.factors):
        if factor.is_circle:
            continue
        col = t[:, j]
        complex_mask = np.abs(col.imag) > 0
        if np.any(np.abs(col[complex_mask].real) >= factor.omega_radius):
            raise DomainError(
                f"Complex radial point with |Re t| >= {factor.omega_radius:.6g} on factor {factor.label}"
            )
        real = col[~complex_mask].real
        if np.any(np.abs(real) > factor.diameter + 1e-12):
            raise DomainError(f"Real radial point beyond diameter {factor.diameter:.6g} on factor {factor.label}")


# ---------------------------------------------------------------------------
# Lattice weights: normalized Jacobi recurrence in x = cos t
# ---------------------------------------------------------------------------

def _recurrence_step(factor: Factor, m, x, r_curr, r_prev):
    """R_{m+1} from R_m and R_{m-1}, normalized so that R(1) = 1."""
    a, b = factor.polynomial_params
    s = a + b
    lead = 2 * (m + s + 1) * (m + a + 1) * (2 * m + s)
    mid = (2 * m + s + 1) * ((2 * m + s + 2) * (2 * m + s) * x + a * a - b * b)
    tail = 2 * m * (m + b) * (2 * m + s + 2)
    return (mid * r_curr - tail * r_prev) / lead


def _first_degree(factor: Factor, x):
    a, b = factor.polynomial_params
    return 1 + (a + b + 2) * (x - 1) / (2 * (a + 1))


def polynomial_table(factor: Factor, k_max: int, t) -> np.ndarray:
    """Rows psi_k(t) for k = 0..k_max; circle rows are cos(k t)."""
    t = np.asarray(t)
    k_max = max(int(k_max), 0)
    if factor.is_circle:
        return np.cos(np.multiply.outer(np.arange(k_max + 1), t))

    x = np.cos(t)
    dtype = np.result_type(x, float)
    table = np.empty((k_max + 1,) + x.shape, dtype=dtype)
    table[0] = 1.0
    if k_max >= 1:
        table[1] = _first_degree(factor, x)
    for m in range(1, k_max):
        table[m + 1] = _recurrence_step(factor, m, x, table[m], table[m - 1])
    return table


# ---------------------------------------------------------------------------
# General spectral parameter
# ---------------------------------------------------------------------------

def _mp_hyp2f1(a: complex, b: complex, c: float, z: np.ndarray, dps: int) -> np.ndarray:
    out = np.empty(z.shape, dtype=complex)
    with mpmath.workdps(dps):
        for idx, value in np.ndenumerate(z):
            out[idx] = complex(mpmath.hyp2f1(
                mpmath.mpc(a), mpmath.mpc(b), mpmath.mpf(c), mpmath.mpc(value)
            ))
    return out


def hypergeometric(a: complex, b: complex, c: float, z: np.ndarray) -> np.ndarray:
    """2F1(a, b; c; z) elementwise, series where it converges quickly, mpmath otherwise."""
    z = np.asarray(z, dtype=complex)
    result = np.empty(z.shape, dtype=complex)
    far = np.abs(z) >= SERIES_RADIUS
    if np.any(far):
        result[far] = _mp_hyp2f1(a, b, c, z[far], dps=30)

    near = ~far
    if not np.any(near):
        return result

    zn = z[near]
    term = np.ones_like(zn)
    total = np.ones_like(zn)
    peak = np.ones(zn.shape)
    quiet = 0
    for n in range(SERIES_MAX_TERMS):
        term = term * ((n + a) * (n + b) / ((n + c) * (n + 1))) * zn
        total = total + term
        size = np.abs(term)
        peak = np.maximum(peak, size)
        if np.all(size <= SERIES_TOLERANCE * np.maximum(np.abs(total), 1e-300)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        raise SeriesDivergenceError(
            f"2F1({a}, {b}; {c}) series did not converge in {SERIES_MAX_TERMS} terms"
        )

    # cancellation costs digits; redo those entries in extended precision
    loss = peak / np.maximum(np.abs(total), 1e-300)
    bad = loss > 1e6
    if np.any(bad):
        digits = int(math.ceil(math.log10(float(np.max(loss[bad]))))) + 20
        total[bad] = _mp_hyp2f1(a, b, c, zn[bad], dps=digits)
    result[near] = total
    return result


def canonical_parameter(factor: Factor, nu: complex) -> complex:
    """Weyl representative with Re(nu + rho) >= 0 (circle: Re nu >= 0)."""
    nu = complex(nu)
    if (nu + factor.rho).real < 0:
        return -nu - 2 * factor.rho
    return nu


def _series_values(factor: Factor, nu: complex, t: np.ndarray) -> np.ndarray:
    a, _ = factor.polynomial_params
    z = np.sin(np.asarray(t, dtype=complex) / 2) ** 2
    return hypergeometric(-nu, nu + 2 * factor.rho, a + 1, z)


def general_values(factor: Factor, nu: complex, t) -> np.ndarray:
    """psi_nu(t) for arbitrary complex nu, without the lattice shortcut."""
    t = np.asarray(t, dtype=complex)
    if factor.is_circle:
        return np.cos(complex(nu) * t)

    nu = canonical_parameter(factor, nu)
    if nu.real < SHIFT_THRESHOLD:
        return _series_values(factor, nu, t)

    n = int(math.floor(nu.real)) - 1
    nu0 = nu - n
    x = np.cos(t)
    prev = _series_values(factor, nu0, t)
    curr = _series_values(factor, nu0 + 1, t)
    for step in range(n - 1):
        m = nu0 + 1 + step
        prev, curr = curr, _recurrence_step(factor, m, x, curr, prev)
    return curr


def _is_lattice_degree(factor: Factor, nu: complex) -> int | None:
    if abs(nu.imag) > 1e-15:
        return None
    k = round(nu.real)
    if abs(nu.real - k) > 1e-12 or k < 0:
        return None
    return int(k)


def factor_values(factor: Factor, nu: complex, t) -> np.ndarray:
    """psi_nu on one factor, dispatching lattice degrees to the recurrence."""
    t = np.asarray(t)
    if factor.is_circle:
        return np.cos(complex(nu) * t.astype(complex))
    nu = canonical_parameter(factor, nu)
    k = _is_lattice_degree(factor, nu)
    if k is not None:
        return polynomial_table(factor, k, t.astype(complex))[k]
    return general_values(factor, nu, t)


def spherical_values(space: SpaceDescriptor, lam: SpectralLike, t, check: bool = True) -> np.ndarray:
    """psi_lam at every row of t, shape (M, rank) -> (M,)."""
    coords = spectral_coords(space, lam)
    grid = radial_grid(space, t)
    if check:
        check_domain(space, grid)
    out = np.ones(grid.shape[0], dtype=complex)
    for j, factor in enumerate(space.factors):
        out *= factor_values(factor, coords[j], grid[:, j])
    return out


def spherical_at(space: SpaceDescriptor, lam: SpectralLike, x: RadialLike) -> complex:
    """psi_lam(x), normalized so psi_lam(o) = 1."""
    return complex(spherical_values(space, lam, x)[0])


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------

def _contour_radius(factor: Factor, nu: complex, t: float, order: int) -> float:
    radius = min(0.25, max(0.02, (order + 1) / (1 + abs(nu))))
    if not factor.is_circle:
        # stay clear of the antipodal singularity at t = pi
        radius = min(radius, 0.5 * (math.pi - abs(t)))
    return radius


def _factor_derivative(factor: Factor, nu: complex, t: float, order: int) -> complex:
    if order == 0:
        return complex(factor_values(factor, nu, np.array([t]))[0])
    radius = _contour_radius(factor, nu, t, order)
    theta = 2 * np.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    ring = t + radius * np.exp(1j * theta)
    values = factor_values(factor, nu, ring)
    coefficient = np.mean(values * np.exp(-1j * order * theta))
    return complex(math.factorial(order) * coefficient / radius ** order)


def radial_derivative(space: SpaceDescriptor, lam: SpectralLike, x: RadialLike, order: int | Sequence[int]) -> complex:
    """Mixed radial derivative of psi_lam at a real interior point.

    ``order`` is an int for rank one or a multi-index with one entry per factor.
    """
    coords = spectral_coords(space, lam)
    point = radial_grid(space, x)[0]
    orders = (order,) if isinstance(order, int) else tuple(int(o) for o in order)
    if len(orders) != space.rank:
        raise DomainError(f"Derivative multi-index needs {space.rank} entries")
    if any(o < 0 or o > 8 for o in orders):
        raise DomainError("Derivative orders must lie in 0..8")
    if np.any(np.abs(point.imag) > 0):
        raise DomainError("Radial derivatives are taken at real points")
    check_domain(space, point.reshape(1, -1))

    value = 1.0 + 0j
    for factor, nu, t, o in zip(space.factors, coords, point.real, orders):
        value *= _factor_derivative(factor, complex(nu), float(t), o)
    return value


# ---------------------------------------------------------------------------
# Growth envelopes
# ---------------------------------------------------------------------------

def growth_exponent(lam: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_j |Im lam_j| |Re t_j| + |Re lam_j| |Im t_j| for rows of t."""
    return np.abs(t.real) @ np.abs(lam.imag) + np.abs(t.imag) @ np.abs(lam.real)


def _reference_spectra(space: SpaceDescriptor) -> list[np.ndarray]:
    fine = np.linspace(-4.0, 4.0, 17)
    coarse = np.linspace(-20.0, 20.0, 11)
    axis = np.union1d(fine, coarse)
    points = []
    for re in axis:
        for im in axis:
            points.append(np.full(space.rank, complex(re, im)))
    for j in range(space.rank):
        for re in axis:
            z = np.zeros(space.rank, dtype=complex)
            z[j] = re
            points.append(z)
    return points


def _reference_radial(space: SpaceDescriptor) -> np.ndarray:
    per_factor = []
    for factor in space.factors:
        limit = 0.95 * min(factor.omega_radius, math.pi / 2)
        X = np.linspace(0.0, limit, 12)
        Y = np.linspace(-1.0, 1.0, 9)
        per_factor.append((X[:, None] + 1j * Y[None, :]).ravel())
    if space.rank == 1:
        return per_factor[0].reshape(-1, 1)
    # products: the diagonal pairing keeps the grid small
    size = min(len(p) for p in per_factor)
    return np.stack([p[:size] for p in per_factor], axis=1)


@lru_cache(maxsize=None)
def growth_constant(space: SpaceDescriptor) -> float:
    """Fitted C with |psi_lam(X+iY)| <= C exp(growth_exponent) on the reference grid."""
    grid = _reference_radial(space)
    best = 1.0
    for lam in _reference_spectra(space):
        values = np.abs(spherical_values(space, lam, grid, check=False))
        ratio = values / np.exp(growth_exponent(lam, grid))
        best = max(best, float(np.max(ratio)))
    return best


def growth_bound(space: SpaceDescriptor, lam: SpectralLike, x: RadialLike, constant: float | None = None) -> float:
    """Envelope C exp(max_w Re w lam(X) - min_w Im w lam(Y)) in spectral coordinates."""
    coords = spectral_coords(space, lam)
    grid = radial_grid(space, x)
    check_domain(space, grid)
    for j, factor in enumerate(space.factors):
        if not factor.is_circle and np.any(np.abs(grid[:, j].real) > factor.omega_radius):
            raise DomainError(f"X outside closure of Omega on factor {factor.label}")
    if constant is None:
        constant = GROWTH_MARGIN * growth_constant(space)
    return float(constant * np.exp(growth_exponent(coords, grid)[0]))


def derivative_envelope(lam: SpectralLike, x: float, order: int, constant: float) -> float:
    """C (1+|lam|)^j exp(|x| |Im lam|) for rank-one spectral input."""
    z = np.atleast_1d(np.asarray(lam, dtype=complex))
    size = float(np.linalg.norm(z))
    return constant * (1 + size) ** order * math.exp(abs(x) * float(np.linalg.norm(z.imag)))


def calibrate_derivative_constant(
    space: SpaceDescriptor,
    points: Sequence[float],
    orders: Sequence[int],
    sigmas: Sequence[float],
) -> float:
    """Smallest C for which derivative_envelope dominates on the given sweep.

    The sweep runs along the real and imaginary spectral axes of a rank-one space.
    """
    if space.rank != 1:
        raise DomainError("Derivative calibration is defined for rank-one spaces")
    best = 0.0
    for sigma in sigmas:
        for lam in (complex(sigma), complex(0, sigma)):
            for t in points:
                for j in orders:
                    value = abs(radial_derivative(space, lam, t, j))
                    best = max(best, value / derivative_envelope(lam, t, j, 1.0))
    return best
