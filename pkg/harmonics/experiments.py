"""
Experiments
Batch driver behind the command line: one experiment per invocation, a
tab-separated result table plus a plain-text summary per run.

Features:
    - ExperimentConfig (pydantic) with radius and max_norm validation
    - Key-value config files through python-dotenv (environment not consulted)
    - lattice, schur, eigenvalue, roundtrip, decay, type-recovery,
      reconstruct, weyl, singsupp, solve and product experiments
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from harmonics.distributions import (
    InvariantDistribution,
    atom,
    delta,
    density_distribution,
    pair,
)
from harmonics.geometry import (
    SpaceDescriptor,
    check_radius,
    dimension,
    eigenvalue,
    is_spherical_weight,
    lattice_points,
    parse_space,
    weyl_images,
)
from harmonics.paleywiener import (
    HoloTransform,
    Provenance,
    TransformKind,
    coefficient_residual,
    distribution_transform,
    estimate_type,
    extend_distribution,
    extend_function,
    leakage_window,
    pw_certificate,
    reconstruct_distribution,
    singsupp_test,
    solve,
    support_leakage,
    synthetic_transform,
)
from harmonics.records import (
    ResultRecord,
    format_certificate,
    format_results,
    read_distribution,
    write_coefficient_table,
)
from harmonics.transform import (
    bump,
    coefficient_table,
    constant_profile,
    decay_profile,
    l2_norm_squared,
    lattice_count_exponent,
    parseval_sum,
    radial_laplacian,
    schur_matrix,
    schur_overlap,
    schur_probe,
    synthesize_values,
    von_mises,
)


class ConfigError(ValueError):
    """Unreadable config file or invalid config fields."""


EXPERIMENT_NAMES = (
    "lattice", "schur", "eigenvalue", "roundtrip", "decay", "type-recovery",
    "reconstruct", "weyl", "singsupp", "solve", "product",
)

# Truncation used when the config leaves max_norm unset
DEFAULT_MAX_NORM = {
    "lattice": 5.0,
    "schur": 20.0,
    "eigenvalue": 10.0,
    "roundtrip": 40.0,
    "decay": 40.0,
    "reconstruct": 800.0,
    "solve": 30.0,
    "product": 20.0,
}

PRODUCT_SPACE = "S2xT1"
# bump error ratio err(2B)/err(B); other spaces only require no growth
HALVING_BOUNDS = {"S2": 0.5, "S2xT1": 0.5}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: str = Field(description="Experiment name")
    space: str = Field(default="S2", description="Space spec such as S2, RP3, CP2 or S2xT1")
    max_norm: Optional[float] = Field(default=None, ge=1, description="Lattice truncation |mu| <= max_norm")
    bump_r: list[float] = Field(default=[0.3, 0.5], description="Bump radii probed by type recovery and round trips")
    atom_s: list[float] = Field(default=[0.2, 0.4], description="Orbit atom radii probed by type recovery")
    sigma_max: float = Field(default=40.0, gt=0, description="Largest |lambda| on real decay rays")
    type_sigma: float = Field(default=320.0, gt=0, description="Upper end of the growth-ray window used by the type fit")
    grid_bounds: list[float] = Field(default=[20.0, 40.0, 80.0], description="Nested grid bounds for the singular-support test")
    m_list: list[int] = Field(default=[1, 2, 4, 6], description="Log-region slopes m for the singular-support test")
    probe_count: int = Field(default=200, ge=1, description="Random probes for the Weyl experiment")
    distribution: Optional[str] = Field(default=None, description="Distribution file to include in type recovery")
    seed: int = Field(default=0, description="Seed for random probe grids")
    workers: Optional[int] = Field(default=None, ge=1, description="Thread pool size for grid evaluation")
    output: str = Field(default="results", description="Directory receiving result files")
    quiet: bool = Field(default=False, description="Suppress progress lines")

    schur_tolerance: float = Field(default=1e-9, description="Max |d(mu) forward(psi_nu)(mu) - expected|")
    eigenvalue_tolerance: float = Field(default=1e-6, description="Relative error of the finite-difference Laplacian")
    roundtrip_tolerance: float = Field(default=1e-6, description="Sup error of synthesize(forward(f))")
    parseval_tolerance: float = Field(default=1e-8, description="Parseval identity error")
    decay_ratio: float = Field(default=1.1, description="Allowed growth of decay sups between truncations")
    decay_k: int = Field(default=3, ge=0, le=8, description="Largest k checked for the bump decay profile")
    type_tolerance: float = Field(default=0.05, description="Relative error of the fitted exponential type")
    reconstruct_tolerance: float = Field(default=1e-6, description="Reconstruction error and tail tolerance")
    leakage_tolerance: float = Field(default=1e-5, description="Relative pairing with exterior shells")
    weyl_tolerance: float = Field(default=1e-9, description="Weyl symmetry and cutoff independence error")
    solve_tolerance: float = Field(default=1e-8, description="Coefficient residual of solved equations")
    growth_tolerance: float = Field(default=0.25, description="Largest log-log slope of C_m in the singular-support test")

    @field_validator("bump_r", "atom_s", "grid_bounds", "m_list", mode="before")
    @classmethod
    def split_lists(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        if isinstance(value, (int, float)):
            return [value]
        return value

    @field_validator("experiment")
    @classmethod
    def known_experiment(cls, value: str) -> str:
        if value not in EXPERIMENT_NAMES:
            raise ValueError(f"unknown experiment '{value}', expected one of {', '.join(EXPERIMENT_NAMES)}")
        return value

    @field_validator("space")
    @classmethod
    def parseable_space(cls, value: str) -> str:
        parse_space(value)
        return value

    @model_validator(mode="after")
    def radii_below_validity(self) -> ExperimentConfig:
        space = parse_space(self.space)
        for name, radii in (("bump_r", self.bump_r), ("atom_s", self.atom_s)):
            for r in radii:
                if r <= 0:
                    raise ValueError(f"{name}={r:g} must be positive")
                check_radius(space, r, name)
        return self

    def space_descriptor(self) -> SpaceDescriptor:
        return parse_space(self.space)

    def max_norm_for(self, experiment: str) -> float:
        if self.max_norm is not None:
            return self.max_norm
        return DEFAULT_MAX_NORM.get(experiment, 40.0)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

def load_config_file(path: str | Path) -> dict[str, str]:
    """Read a key-value file; keys are normalized to field names."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values = dotenv_values(path)
    return {
        key.strip().lower().replace("-", "_"): value
        for key, value in values.items()
        if value not in (None, "")
    }


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """File values first, then non-None overrides (CLI flags)."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(problems) from e


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _log(config: ExperimentConfig, tag: str, message: str) -> None:
    if not config.quiet:
        print(f"[{tag}] {message}")


def _record(probe: str, inputs: str, value: float, bound: float, passed: bool | None = None) -> ResultRecord:
    value = float(value)
    return ResultRecord(probe, inputs, value, float(bound), bool(value < bound if passed is None else passed))


def _radial_atom(space: SpaceDescriptor, s: float, j: int = 0) -> InvariantDistribution:
    """Atom at radius s along the first factor."""
    position = (s,) + (0.0,) * (space.rank - 1)
    return InvariantDistribution((atom(space, position, j),))


def _sample_grid(space: SpaceDescriptor, per_axis: int) -> np.ndarray:
    axes = [np.linspace(0.0, f.diameter, per_axis) for f in space.factors]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _output_stem(config: ExperimentConfig, space: SpaceDescriptor) -> Path:
    directory = Path(config.output)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{config.experiment}_{space.label}"


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def run_lattice(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = config.max_norm_for("lattice")
    weights = lattice_points(space, B)
    _log(config, "LATTICE", f"{space}: {len(weights)} spherical weights with |mu| <= {B:g}")
    records = [
        _record("weight", str(w), w.norm, B, is_spherical_weight(space, w) and w.norm <= B + 1e-9)
        for w in weights
    ]

    closure_bound = min(B, 20.0)
    small = lattice_points(space, closure_bound)
    closed = all(is_spherical_weight(space, mu + nu) for mu in small for nu in small)
    records.append(_record("closure", f"B={closure_bound:g}", float(len(small)), float(len(small)), closed))

    if B >= 20:
        exponent = lattice_count_exponent(space, B)
        records.append(_record("count_exponent", f"B={B:g}", abs(exponent - space.rank), 0.35))
    return records


def run_schur(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = config.max_norm_for("schur")
    weights, matrix = schur_matrix(space, B)
    expected = np.array([
        [dimension(space, mu) * schur_overlap(space, mu, nu) for nu in weights]
        for mu in weights
    ])
    residual = np.abs(matrix - expected)
    off = residual.copy()
    np.fill_diagonal(off, 0.0)
    _log(config, "SCHUR", f"{space}: {len(weights)} weights, max residual {residual.max():.3e}")
    return [
        _record("schur_max", f"B={B:g} n={len(weights)}", residual.max(), config.schur_tolerance),
        _record("schur_offdiag", f"B={B:g} n={len(weights)}", off.max(), config.schur_tolerance),
    ]


def run_eigenvalue(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = min(config.max_norm_for("eigenvalue"), 10.0)
    rng = np.random.default_rng(config.seed)
    upper = [min(2.5, 0.9 * f.diameter) for f in space.factors]
    points = np.column_stack([rng.uniform(0.3, hi, 64) for hi in upper])

    records = []
    for w in lattice_points(space, B):
        probe = schur_probe(space, w)
        omega = eigenvalue(space, w).real
        values = probe(points)
        lap = radial_laplacian(space, probe, points)
        scale = abs(omega) * float(np.max(np.abs(values))) if omega else 1.0
        error = float(np.max(np.abs(lap + omega * values))) / scale
        records.append(_record("eigenvalue", str(w), error, config.eigenvalue_tolerance))
    worst = max(r.value for r in records)
    _log(config, "EIGEN", f"{space}: {len(records)} weights, worst relative error {worst:.3e}")
    return records


def run_roundtrip(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = config.max_norm_for("roundtrip")
    grid = _sample_grid(space, 201 if space.rank == 1 else 41)
    stem = _output_stem(config, space)
    records = []

    smooth = von_mises(space)
    table = coefficient_table(space, smooth, B)
    error = float(np.max(np.abs(synthesize_values(space, table, grid) - smooth(grid))))
    records.append(_record("roundtrip_von_mises", f"B={B:g}", error, config.roundtrip_tolerance))
    parseval = abs(parseval_sum(table) - l2_norm_squared(space, smooth))
    records.append(_record("parseval_von_mises", f"B={B:g}", parseval, config.parseval_tolerance))
    _log(config, "ROUNDTRIP", f"{space}: von Mises sup error {error:.3e}, Parseval gap {parseval:.3e}")

    r = max(config.bump_r)
    f = bump(space, r)
    coarse = coefficient_table(space, f, B)
    fine = coefficient_table(space, f, 2 * B)
    write_coefficient_table(fine, stem.with_suffix(".coef"))
    err_coarse = float(np.max(np.abs(synthesize_values(space, coarse, grid) - f(grid))))
    err_fine = float(np.max(np.abs(synthesize_values(space, fine, grid) - f(grid))))
    records.append(_record("roundtrip_bump", f"r={r:g} B={B:g}", err_coarse, math.inf, True))
    records.append(_record("roundtrip_bump", f"r={r:g} B={2 * B:g}", err_fine, 0.05))
    records.append(_record("roundtrip_bump_halving", f"r={r:g}", err_fine / max(err_coarse, 1e-300),
                           HALVING_BOUNDS.get(space.label, 1.0)))
    _log(config, "ROUNDTRIP", f"{space}: bump r={r:g} error {err_coarse:.3e} -> {err_fine:.3e}")
    return records


def run_decay(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = config.max_norm_for("decay")
    records = []
    cases = [(bump(space, max(config.bump_r)), config.decay_k), (von_mises(space), 8)]
    for f, k_max in cases:
        short = decay_profile(coefficient_table(space, f, B), k_max)
        long = decay_profile(coefficient_table(space, f, 2 * B), k_max)
        for k in range(k_max + 1):
            ratio = long.sups[k] / short.sups[k] if short.sups[k] else 1.0
            records.append(_record("decay", f"{f.name} k={k} B={B:g}", ratio, config.decay_ratio))
        verdict = "stable" if short.stabilizes_against(long, k_max, config.decay_ratio) else "unstable"
        _log(config, "DECAY", f"{space}: {f.name} {verdict} for k <= {k_max}")
    return records


def _write_certificate(config: ExperimentConfig, space: SpaceDescriptor, label: str, profile) -> None:
    path = Path(f"{_output_stem(config, space)}_{label}.cert")
    path.write_text(format_certificate(profile), encoding="utf-8")


def _estimate(config: ExperimentConfig, phi: HoloTransform):
    return estimate_type(phi, sigma_max=config.sigma_max, workers=config.workers, type_sigma=config.type_sigma)


def run_type_recovery(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    records = []
    for r in config.bump_r:
        phi = extend_function(space, bump(space, r))
        profile = _estimate(config, phi)
        _write_certificate(config, space, f"bump-{r:g}", profile)
        error = abs(profile.type_radius - r) / r
        _log(config, "TYPE", f"{space}: bump r={r:g} -> r_hat={profile.type_radius:.4f} ({profile.kind.value}, k={profile.order})")
        records.append(_record("type_bump", f"r={r:g}", error, config.type_tolerance))
        records.append(_record("kind_bump", f"r={r:g}", profile.order, 1, profile.kind is TransformKind.SMOOTH))
        for k in (1, 2):
            cert = pw_certificate(phi, k, r, sigma_max=config.sigma_max)
            records.append(_record("pw_certificate", f"r={r:g} k={k}", cert.worst_ratio, 1.05, cert.holds))

    for s in config.atom_s:
        check_radius(space, s + 0.05, "atom_s + cutoff margin")
        phi = distribution_transform(space, _radial_atom(space, s))
        profile = _estimate(config, phi)
        _write_certificate(config, space, f"atom-{s:g}", profile)
        error = abs(profile.type_radius - s) / s
        _log(config, "TYPE", f"{space}: atom s={s:g} -> r_hat={profile.type_radius:.4f} (N={profile.order})")
        records.append(_record("type_atom", f"s={s:g}", error, config.type_tolerance))

    if config.distribution:
        F = read_distribution(space, config.distribution)
        support = F.support_radius
        phi = distribution_transform(space, F)
        profile = _estimate(config, phi)
        _write_certificate(config, space, "file", profile)
        error = abs(profile.type_radius - support) / max(support, 1e-12)
        _log(config, "TYPE", f"{space}: {config.distribution} -> r_hat={profile.type_radius:.4f}, support {support:g}")
        records.append(_record("type_file", f"support={support:g}", error, config.type_tolerance))
    return records


def run_reconstruct(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = config.max_norm_for("reconstruct")
    tol = config.reconstruct_tolerance
    hi = min(1.4, space.validity_radius - 0.1)
    probes = [bump(space, r) for r in np.linspace(0.6, hi, 10)]
    s = min(config.atom_s)
    F = _radial_atom(space, s) + density_distribution(bump(space, min(config.bump_r)))
    leakage_window(space, F.support_radius)
    origin = np.zeros((1, space.rank))
    records = []

    one = HoloTransform(space, lambda z: 1.0, Provenance.SYNTHETIC, name="one")
    certificate = _estimate(config, one)
    point_eval = reconstruct_distribution(space, one, B, certificate, tol)
    for f in probes:
        error = abs(point_eval(f) - f(origin)[0])
        records.append(_record("delta_from_one", f.name, error, tol))
    leak = support_leakage(point_eval, space, 0.0)
    records.append(_record("leakage_delta", "r=0", leak, config.leakage_tolerance))
    _log(config, "RECON", f"{space}: Phi=1 worst error {max(r.value for r in records[:-1]):.3e}, leakage {leak:.3e}")

    phi = distribution_transform(space, F)
    certificate = _estimate(config, phi)
    rebuilt = reconstruct_distribution(space, phi, B, certificate, tol)
    for f in probes:
        direct = pair(space, F, f)
        error = abs(rebuilt(f) - direct) / max(1.0, abs(direct))
        records.append(_record("distribution_roundtrip", f.name, error, tol))
    leak = support_leakage(rebuilt, space, F.support_radius)
    records.append(_record("leakage_distribution", f"r={F.support_radius:g}", leak, config.leakage_tolerance))
    _log(config, "RECON", f"{space}: atom+bump round trip, leakage {leak:.3e}")
    return records


def _random_spectral(rng: np.random.Generator, space: SpaceDescriptor, count: int, size: float = 10.0) -> np.ndarray:
    return rng.uniform(-size, size, (count, space.rank)) + 1j * rng.uniform(-size, size, (count, space.rank))


def run_weyl(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    rng = np.random.default_rng(config.seed)
    records = []

    phi = extend_function(space, bump(space, max(config.bump_r)))
    for z in _random_spectral(rng, space, config.probe_count):
        base = phi(z)
        error = max(abs(phi(image) - base) for image in weyl_images(space, z)) / max(1.0, abs(base))
        records.append(_record("weyl", " ".join(f"{c:.6g}" for c in z), error, config.weyl_tolerance))

    s = min(config.atom_s)
    check_radius(space, max(s, min(config.bump_r)) + 0.1, "support + cutoff margin")
    F = _radial_atom(space, s, j=1) + density_distribution(bump(space, min(config.bump_r)))
    for z in _random_spectral(rng, space, config.probe_count):
        narrow, wide = extend_distribution(space, F, z, 0.05), extend_distribution(space, F, z, 0.1)
        error = abs(narrow - wide) / max(1.0, abs(narrow))
        records.append(_record("cutoff", " ".join(f"{c:.6g}" for c in z), error, config.weyl_tolerance))
    _log(config, "WEYL", f"{space}: worst error {max(r.value for r in records):.3e} over {len(records)} probes")
    return records


def run_singsupp(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    s = 0.3
    cases = [
        ("delta", delta(space), True),
        ("atom-0.5", _radial_atom(space, 0.5), False),
        ("atom-0.3+bump-0.6", _radial_atom(space, 0.3) + density_distribution(bump(space, 0.6)), True),
    ]
    records = []
    for label, F, expected in cases:
        report = singsupp_test(
            space,
            distribution_transform(space, F),
            s,
            m_list=config.m_list,
            grid_bounds=config.grid_bounds,
            growth_tolerance=config.growth_tolerance,
            workers=config.workers,
        )
        worst = max(e.slope for e in report.entries)
        verdict = "pass" if report.passed else "fail"
        _log(config, "SINGSUPP", f"{space}: {label} s={s:g} -> {verdict} (max slope {worst:.3f})")
        records.append(_record("singsupp", f"{label} s={s:g} expect={'pass' if expected else 'fail'}",
                               worst, config.growth_tolerance, report.passed == expected))
    return records


def run_solve(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    B = min(config.max_norm_for("solve"), 30.0)
    nu = next(w for w in lattice_points(space, 8) if w.norm > 0)
    cases = [
        ("laplacian_psi", [0.0, 1.0], synthetic_transform(space, schur_probe(space, nu)), True),
        ("laplacian_constant", [0.0, 1.0], synthetic_transform(space, constant_profile(space)), False),
        ("helmholtz_delta", [-1.0, 1.0], distribution_transform(space, delta(space)), True),
    ]
    records = []
    for label, coefficients, phi_F, expected in cases:
        report = solve(space, coefficients, phi_F, probe_norm=B)
        inputs = f"{label} P={coefficients}"
        records.append(_record("solvable", inputs, float(report.solvable), float(expected), report.solvable == expected))
        if report.solvable:
            residual = coefficient_residual(space, coefficients, report.transform, phi_F, B)
            records.append(_record("residual", inputs, residual, config.solve_tolerance))
            _log(config, "SOLVE", f"{space}: {label} solvable, residual {residual:.3e}")
        else:
            where = report.offending.point if report.offending else None
            _log(config, "SOLVE", f"{space}: {label} unsolvable at {where}")
    return records


def run_product(config: ExperimentConfig, space: SpaceDescriptor) -> list[ResultRecord]:
    product = parse_space(PRODUCT_SPACE)
    _log(config, "PRODUCT", f"running schur, roundtrip and type-recovery on {product}")
    return run_schur(config, product) + run_roundtrip(config, product) + run_type_recovery(config, product)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig, SpaceDescriptor], list[ResultRecord]]] = {
    "lattice": run_lattice,
    "schur": run_schur,
    "eigenvalue": run_eigenvalue,
    "roundtrip": run_roundtrip,
    "decay": run_decay,
    "type-recovery": run_type_recovery,
    "reconstruct": run_reconstruct,
    "weyl": run_weyl,
    "singsupp": run_singsupp,
    "solve": run_solve,
    "product": run_product,
}


# ---------------------------------------------------------------------------
# Entry
# ---------------------------------------------------------------------------

def summarize(config: ExperimentConfig, space: SpaceDescriptor, records: list[ResultRecord]) -> str:
    failed = [r for r in records if not r.passed]
    lines = [
        f"experiment: {config.experiment}",
        f"space: {space}",
        f"checks: {len(records) - len(failed)} passed, {len(failed)} failed",
        f"verdict: {'PASS' if not failed else 'FAIL'}",
    ]
    for r in failed:
        lines.append(f"  failed {r.probe} [{r.inputs}]: {r.value:.3e} vs bound {r.bound:.3e}")
    return "\n".join(lines) + "\n"


def run(config: ExperimentConfig) -> int:
    """Run one experiment, write <output>/<experiment>_<space>.tsv and .txt; 0 iff every check passed."""
    space = config.space_descriptor()
    runner = EXPERIMENTS[config.experiment]
    _log(config, "INFO", f"experiment {config.experiment} on {space}")

    records = runner(config, space)
    # The product experiment always reports on its own space
    label_space = parse_space(PRODUCT_SPACE) if config.experiment == "product" else space
    stem = _output_stem(config, label_space)

    config_json = config.model_dump_json(exclude={"quiet", "workers"})
    stem.with_suffix(".tsv").write_text(format_results(config.experiment, config_json, records), encoding="utf-8")
    summary = summarize(config, label_space, records)
    stem.with_suffix(".txt").write_text(summary, encoding="utf-8")

    print(summary, end="")
    _log(config, "INFO", f"results written to {stem.with_suffix('.tsv')}")
    return 0 if all(r.passed for r in records) else 1


__all__ = [
    "ConfigError",
    "EXPERIMENTS",
    "EXPERIMENT_NAMES",
    "ExperimentConfig",
    "build_config",
    "load_config_file",
    "run",
    "summarize",
]
