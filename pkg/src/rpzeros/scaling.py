"""Scaling windows ``z = r_n exp(u/n + i psi)`` and their radii/normalisers.

=================  ===========================  ================
phase              ``log r_n``                  ``c_n``
=================  ===========================  ================
liquid             0                            ``b(n) sqrt(n)``
weak crystalline   ``-W_{-1}(-n b^2/L) / 2n``   ``sqrt(L(n))``
strong cryst.      ``-W_{-1}(-n b^2) / 2n``     1
=================  ===========================  ================
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .profiles import PhaseClass, big_l, phase_classify
from .specfun import lambert_w_m1

__all__ = [
    "ScalingWindow",
    "WindowDomainError",
    "make_window",
    "to_window",
    "from_window",
    "strong_radius_asymptotic",
    "weak_radius_asymptotic",
    "lambert_argument",
]

_INV_E = math.exp(-1.0)


class WindowDomainError(ValueError):
    """The degree is too small for the Lambert-W radius of this phase."""

    def __init__(self, msg: str, minimal_n: int | None = None):
        super().__init__(msg)
        self.minimal_n = minimal_n


@dataclass(frozen=True)
class ScalingWindow:
    n: int
    psi: float
    phase: PhaseClass
    radius: float
    log_radius: float
    normalizer: float
    a_value: float

    def to_json(self) -> str:
        d = asdict(self)
        d["phase"] = str(self.phase)
        d["log_radius_times_2n"] = 2 * self.n * self.log_radius
        del d["log_radius"]
        return json.dumps(d, sort_keys=True)


def lambert_argument(profile, n: int, phase: PhaseClass | None = None) -> float:
    """``-n b(n)^2`` (strong) or ``-n b(n)^2 / L(n)`` (weak)."""
    phase = phase or phase_classify(profile)
    log_nb2 = math.log(n) + 2.0 * float(profile.log_b(n))
    if phase is PhaseClass.WEAK_CRYSTALLINE:
        log_nb2 -= math.log(big_l(profile, n))
    return -math.exp(log_nb2)


def _minimal_valid_n(profile, n: int, phase: PhaseClass) -> int | None:
    m = max(2, n)
    while m < 1 << 40:
        m *= 2
        if lambert_argument(profile, m, phase) > -_INV_E:
            return m
    return None


def make_window(profile, n: int, psi: float = 0.0) -> ScalingWindow:
    """Scaling window at angle ``psi`` for degree ``n``.

    Raises
    ------
    WindowDomainError
        When ``n b^2(n)`` (or ``n b^2(n) / L(n)``) is not below ``1/e``;
        the message names a valid degree found by doubling ``n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    psi = float(psi) % (2.0 * math.pi)
    phase = phase_classify(profile)
    if phase is PhaseClass.LIQUID:
        c_n = math.exp(float(profile.log_b(n)) + 0.5 * math.log(n))
        return ScalingWindow(n, psi, phase, 1.0, 0.0, c_n, 0.0)
    x = lambert_argument(profile, n, phase)
    if not x > -_INV_E:
        m = _minimal_valid_n(profile, n, phase)
        hint = f"; n={m} is large enough" if m else ""
        raise WindowDomainError(
            f"degree too small for this phase: Lambert argument {x:.4g} <= -1/e at n={n}{hint}", m)
    a = -lambert_w_m1(x)
    log_r = a / (2.0 * n)
    c_n = 1.0 if phase is PhaseClass.STRONG_CRYSTALLINE else math.sqrt(big_l(profile, n))
    return ScalingWindow(n, psi, phase, math.exp(log_r), log_r, c_n, a)


def to_window(w: ScalingWindow, u):
    """``z = r_n exp(u/n + i psi)`` (vectorised)."""
    u = np.asarray(u, dtype=complex)
    return np.exp(w.log_radius + u / w.n + 1j * w.psi)


def from_window(w: ScalingWindow, z):
    """Inverse of :func:`to_window`, with ``Im u`` wrapped to ``(-pi n, pi n]``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("z = 0 has no window coordinate")
    re = w.n * (np.log(np.abs(z)) - w.log_radius)
    ang = np.angle(z * np.exp(-1j * w.psi))
    return re + 1j * w.n * ang


def strong_radius_asymptotic(profile, n: int) -> float:
    """``-2 log b(n) - log n + log log n + log(-2 alpha - 1)``, the large-n form of ``a_n``."""
    if not profile.alpha < -0.5:
        raise ValueError("the asymptotic radius needs alpha < -1/2")
    return (-2.0 * float(profile.log_b(n)) - math.log(n) + math.log(math.log(n))
            + math.log(-2.0 * profile.alpha - 1.0))


def weak_radius_asymptotic(profile, n: int) -> float:
    """``y + log y`` with ``y = log(L(n) / (n b(n)^2))``; for ``b = k^{-1/2}``
    this is ``log log n + log log log n`` to leading order."""
    y = math.log(big_l(profile, n)) - math.log(n) - 2.0 * float(profile.log_b(n))
    return y + math.log(y)
