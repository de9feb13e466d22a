"""Numerical companion to quantitative symmetry for semilinear overdetermined problems.

Modules
-------
geometry
    Star-shaped Fourier domains, signed distance, interior radius.
movingplanes
    Critical hyperplanes, S1/S2 classification, cone certificates.
harnack
    Harnack constants and ball chains in cones.
pde
    Cut-cell solver for ``Delta u + f(u) = 0`` and boundary post-processing.
stability
    Reflected-difference bounds, symmetric sets, centres and family sweeps.
"""

from .errors import (
    CertificateFailure,
    ConvergenceError,
    NotStarShapedError,
    NumericalError,
    RegimeError,
    SerrinError,
    ValidationError,
)
from .geometry import DomainSpec

__version__ = "0.1.0"

__all__ = [
    "CertificateFailure",
    "ConvergenceError",
    "DomainSpec",
    "NotStarShapedError",
    "NumericalError",
    "RegimeError",
    "SerrinError",
    "ValidationError",
    "__version__",
]
