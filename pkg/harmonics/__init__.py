"""
Harmonics

Spherical harmonic analysis and Paley-Wiener tools for compact rank-one
symmetric spaces and their products.
"""

from harmonics import geometry
from harmonics import spherical
from harmonics import transform
from harmonics import distributions
from harmonics import paleywiener
from harmonics import records
from harmonics import experiments

__version__ = "1.0.0"

__all__ = [
    "geometry",
    "spherical",
    "transform",
    "distributions",
    "paleywiener",
    "records",
    "experiments",
]
