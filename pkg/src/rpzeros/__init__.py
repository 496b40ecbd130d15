"""Zeros of random polynomials with regularly varying coefficients."""

from .profiles import (
    CoefficientProfile,
    HyperbolicProfile,
    PhaseClass,
    SlowKind,
    SlowVariationSpec,
    parse_profile,
    phase_classify,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientProfile",
    "HyperbolicProfile",
    "PhaseClass",
    "SlowKind",
    "SlowVariationSpec",
    "parse_profile",
    "phase_classify",
]
