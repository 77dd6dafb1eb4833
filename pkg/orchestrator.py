"""
Harmonics Orchestrator - command-line entry point

Usage:
    python orchestrator.py schur --space S2 --max-norm 20
    python orchestrator.py type-recovery --space S2 --bump-r 0.5
    python orchestrator.py lattice --space RP2 --max-norm 5
    python orchestrator.py singsupp --config runs/singsupp.env
"""

import argparse
import sys

from harmonics.distributions import DistributionError, PairingDivergenceError
from harmonics.experiments import EXPERIMENT_NAMES, ConfigError, build_config, load_config_file, run
from harmonics.geometry import GeometryError
from harmonics.paleywiener import CertificateError, TailBoundError
from harmonics.records import RecordFormatError
from harmonics.spherical import DomainError, SeriesDivergenceError
from harmonics.transform import ResolutionError

EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

HANDLED_ERRORS = (
    ConfigError,
    GeometryError,
    DomainError,
    SeriesDivergenceError,
    ResolutionError,
    DistributionError,
    PairingDivergenceError,
    CertificateError,
    TailBoundError,
    RecordFormatError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Harmonics - spherical transforms and Paley-Wiener experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python orchestrator.py schur --space S2 --max-norm 20       Schur orthogonality residuals
  python orchestrator.py type-recovery --space CP2            Support radii from growth type
  python orchestrator.py lattice --space RP2 --max-norm 5     Spherical weights {0, 2, 4}
  python orchestrator.py solve --space S2 --quiet             Solvability of P(Delta) T = F
  python orchestrator.py weyl --config runs/weyl.env          Settings from a key-value file
        """
    )

    parser.add_argument("experiment", choices=EXPERIMENT_NAMES, help="Experiment to run")
    parser.add_argument("--space", "-s", help="Space spec: S2, RP3, CP2, S2xT1 (default: S2)")
    parser.add_argument("--max-norm", "-B", type=float, help="Lattice truncation (default depends on experiment)")
    parser.add_argument("--bump-r", help="Comma-separated bump radii (default: 0.3,0.5)")
    parser.add_argument("--atom-s", help="Comma-separated atom radii (default: 0.2,0.4)")
    parser.add_argument("--sigma-max", type=float, help="Largest |lambda| on real decay rays (default: 40)")
    parser.add_argument("--type-sigma", type=float, help="Upper end of the growth-ray window for the type fit (default: 320)")
    parser.add_argument("--grid-bounds", help="Comma-separated nested grid bounds (default: 20,40,80)")
    parser.add_argument("--m-list", help="Comma-separated log-region slopes (default: 1,2,4,6)")
    parser.add_argument("--probe-count", type=int, help="Random probes for the weyl experiment (default: 200)")
    parser.add_argument("--distribution", help="Distribution file for type-recovery")
    parser.add_argument("--seed", type=int, help="Seed for random probe grids (default: 0)")
    parser.add_argument("--workers", type=int, help="Threads for grid evaluation")
    parser.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                        help="Override a threshold, e.g. schur_tolerance=1e-10 (repeatable)")
    parser.add_argument("--config", "-c", help="Key-value config file; flags override its values")
    parser.add_argument("--output", "-o", help="Result directory (default: results)")
    parser.add_argument("--quiet", "-q", action="store_true", default=None, help="Only print the summary")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {
        "experiment": args.experiment,
        "space": args.space,
        "max_norm": args.max_norm,
        "bump_r": args.bump_r,
        "atom_s": args.atom_s,
        "sigma_max": args.sigma_max,
        "type_sigma": args.type_sigma,
        "grid_bounds": args.grid_bounds,
        "m_list": args.m_list,
        "probe_count": args.probe_count,
        "distribution": args.distribution,
        "seed": args.seed,
        "workers": args.workers,
        "output": args.output,
        "quiet": args.quiet,
    }
    for item in args.tolerance:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tolerance expects NAME=VALUE, got '{item}'")
        overrides[name.strip().replace("-", "_")] = value.strip()
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = build_config(file_values, _overrides(args))
        return run(config)
    except HANDLED_ERRORS as e:
        print(f"[ERROR] {type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
