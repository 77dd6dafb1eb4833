"""
Records
Line-oriented text formats for coefficient tables, distribution files,
growth certificates and experiment result tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from harmonics.distributions import Atom, InvariantDistribution, atom
from harmonics.geometry import SpaceDescriptor, Weight, is_spherical_weight, parse_space
from harmonics.paleywiener import GrowthProfile, TransformKind
from harmonics.transform import (
    CoefficientTable,
    RadialProfile,
    bump,
    constant_profile,
    mollifier,
    shell_bump,
    von_mises,
)


class RecordFormatError(ValueError):
    """Malformed record line."""


# ---------------------------------------------------------------------------
# Coefficient tables: "mu_coords... re im"
# ---------------------------------------------------------------------------

def format_coefficient_table(table: CoefficientTable) -> str:
    lines = [f"# space {table.space.label} max_norm {table.max_norm:g}"]
    for w in table.weights():
        value = complex(table[w])
        coords = " ".join(str(k) for k in w.coords)
        lines.append(f"{coords} {value.real:.17g} {value.imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_coefficient_table(text: str) -> CoefficientTable:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# space "):
        raise RecordFormatError("Coefficient table must start with '# space <spec> max_norm <B>'")
    header = lines[0].split()
    try:
        space = parse_space(header[2])
        max_norm = float(header[4])
    except (IndexError, ValueError) as e:
        raise RecordFormatError(f"Bad coefficient table header: {lines[0]}") from e

    values: dict[Weight, complex] = {}
    for number, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if len(fields) != space.rank + 2:
            raise RecordFormatError(f"Line {number}: expected {space.rank + 2} fields, got {len(fields)}")
        try:
            w = Weight(tuple(int(v) for v in fields[: space.rank]))
            values[w] = complex(float(fields[-2]), float(fields[-1]))
        except ValueError as e:
            raise RecordFormatError(f"Line {number}: {e}") from e
        if not is_spherical_weight(space, w):
            raise RecordFormatError(f"Line {number}: {w} is not a spherical weight of {space}")
    return CoefficientTable(space, values, max_norm)


def write_coefficient_table(table: CoefficientTable, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(format_coefficient_table(table), encoding="utf-8")
    return path


def read_coefficient_table(path: str | Path) -> CoefficientTable:
    return parse_coefficient_table(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Distribution files: "atom s j re im" and "density <profile> <param>"
# ---------------------------------------------------------------------------

def _density(space: SpaceDescriptor, name: str, param: str) -> RadialProfile:
    values = [float(v) for v in param.split(",")]
    if name == "bump" and len(values) == 1:
        return bump(space, values[0])
    if name == "von_mises" and len(values) == 1:
        return von_mises(space, values[0])
    if name == "constant" and len(values) == 1:
        return constant_profile(space, values[0])
    if name == "mollifier" and len(values) == 1:
        return mollifier(space, values[0])
    if name == "shell" and len(values) == 2:
        return shell_bump(space, values[0], values[1])
    raise RecordFormatError(f"Unknown density profile '{name} {param}'")


def parse_distribution(space: SpaceDescriptor, text: str) -> InvariantDistribution:
    atoms: list[Atom] = []
    density = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "atom" and len(fields) == 5:
                s = [float(v) for v in fields[1].split(",")]
                j = [int(v) for v in fields[2].split(",")]
                order = j[0] if len(j) == 1 else tuple(j)
                atoms.append(atom(space, s if len(s) > 1 else s[0], order, complex(float(fields[3]), float(fields[4]))))
            elif fields[0] == "density" and len(fields) == 3:
                piece = _density(space, fields[1], fields[2])
                density = piece if density is None else (InvariantDistribution((), density) + InvariantDistribution((), piece)).density
            else:
                raise RecordFormatError(f"Line {number}: unrecognised record '{line}'")
        except ValueError as e:
            if isinstance(e, RecordFormatError):
                raise
            raise RecordFormatError(f"Line {number}: {e}") from e
    return InvariantDistribution(tuple(atoms), density)


def read_distribution(space: SpaceDescriptor, path: str | Path) -> InvariantDistribution:
    return parse_distribution(space, Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

def format_certificate(profile: GrowthProfile) -> str:
    return (
        f"kind: {profile.kind.value}\n"
        f"order: {profile.order}\n"
        f"C: {profile.constant:.12e}\n"
        f"r: {profile.type_radius:.12e}\n"
        f"residual: {profile.residual:.12e}\n"
        f"grid: {profile.grid}\n"
        f"fit_ok: {str(profile.fit_ok).lower()}\n"
    )


def parse_certificate(text: str) -> GrowthProfile:
    fields = {}
    for line in text.splitlines():
        if ":" in line:
            key, value = line.split(":", 1)
            fields[key.strip()] = value.strip()
    try:
        return GrowthProfile(
            kind=TransformKind(fields["kind"]),
            order=int(fields["order"]),
            constant=float(fields["C"]),
            type_radius=float(fields["r"]),
            residual=float(fields["residual"]),
            grid=fields["grid"],
            fit_ok=fields.get("fit_ok", "true") == "true",
        )
    except (KeyError, ValueError) as e:
        raise RecordFormatError(f"Bad certificate: {e}") from e


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRecord:
    probe: str
    inputs: str
    value: float
    bound: float
    passed: bool


def format_results(experiment: str, config_json: str, records: Iterable[ResultRecord]) -> str:
    lines = [
        f"# experiment {experiment}",
        f"# config {config_json}",
        "# columns probe inputs value bound passed",
    ]
    for r in records:
        lines.append(f"{r.probe}\t{r.inputs}\t{r.value:.12e}\t{r.bound:.12e}\t{'pass' if r.passed else 'fail'}")
    return "\n".join(lines) + "\n"


def parse_results(text: str) -> list[ResultRecord]:
    records = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise RecordFormatError(f"Result record needs 5 tab-separated fields: {line!r}")
        records.append(ResultRecord(fields[0], fields[1], float(fields[2]), float(fields[3]), fields[4] == "pass"))
    return records
