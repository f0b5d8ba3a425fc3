"""Strength statistics of fishnet-linked fiber networks.

A library + CLI for simulating the strength of nacre-like lattices of
brittle links ("fishnets") by sequential element deletion Monte Carlo, and
for evaluating the matching closed-form failure-probability hierarchy
(weakest-link, two-term, three-term, fiber-bundle series).
"""

__version__ = "0.1.0"

from .dist import (
    GaussianStrength,
    GraftedGaussianPower,
    GraftedWeibullGaussian,
    WeibullStrength,
)
from .mesh import FishnetGeometry, FishnetMesh, build_mesh

__all__ = [
    "GaussianStrength",
    "GraftedGaussianPower",
    "GraftedWeibullGaussian",
    "WeibullStrength",
    "FishnetGeometry",
    "FishnetMesh",
    "build_mesh",
    "__version__",
]
