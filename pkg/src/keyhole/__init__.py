"""Connectivity of external wireless nodes with keyhole line of sight.

Closed-form Rician/Marcum-Q connectivity integrals with wall-reflection
contributions via billiard unfolding, validated by a Monte Carlo network
simulator.
"""

__version__ = "0.1.0"

from .channel import ChannelParams, DerivedConstants, connection_prob, derived_constants, rician_pdf
from .geometry import KeyholeDomain, KeyholeSpec, PathClass, classify_path, los_angle, region_measure
from .specfun import Tolerance, bessel_i, lower_incomplete_gamma, marcum_q1, marcum_q1_approx

__all__ = [
    "ChannelParams",
    "DerivedConstants",
    "KeyholeDomain",
    "KeyholeSpec",
    "PathClass",
    "Tolerance",
    "bessel_i",
    "classify_path",
    "connection_prob",
    "derived_constants",
    "los_angle",
    "lower_incomplete_gamma",
    "marcum_q1",
    "marcum_q1_approx",
    "region_measure",
    "rician_pdf",
]
