"""Regularly varying coefficient profiles ``b(x) = x**alpha * ell(x)``.

A profile couples a regular-variation index ``alpha`` with a slowly varying
factor ``ell`` drawn from a closed family (constants, powers of ``log``,
``exp(log**gamma)`` and ``log log``) and a coefficient scale ``sigma``.
Keeping the family closed lets summability questions be answered
analytically instead of by sampling partial sums.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .quadrature import QuadratureConfig, integrate_semi_infinite

__all__ = [
    "SlowKind",
    "SlowVariationSpec",
    "CoefficientProfile",
    "HyperbolicProfile",
    "PhaseClass",
    "MagnitudeError",
    "b_value",
    "log_b_value",
    "partial_power_sum",
    "log_partial_power_sum",
    "tail_sum",
    "big_l",
    "hyperbolic_weight",
    "phase_classify",
    "parse_profile",
]

# Terms whose log-magnitude exceeds this switch the summation to log-space.
LOG_SPACE_THRESHOLD = 600.0
# Largest log-magnitude representable as a finite double.
_LOG_DBL_MAX = math.log(np.finfo(float).max)
# Number of terms summed explicitly before the tail integral takes over.
_TAIL_SPLIT = 1_000_000


class MagnitudeError(OverflowError):
    """A sum whose magnitude does not fit in double precision."""


class PhaseClass(str, enum.Enum):
    LIQUID = "Liquid"
    WEAK_CRYSTALLINE = "WeakCrystalline"
    STRONG_CRYSTALLINE = "StrongCrystalline"

    def __str__(self) -> str:
        return self.value


class SlowKind(str, enum.Enum):
    CONSTANT = "const"
    LOGPOW = "logpow"
    EXPLOGPOW = "explogpow"
    ITERLOG = "iterlog"


@dataclass(frozen=True)
class SlowVariationSpec:
    """Slowly varying factor ``ell``.

    Parameters
    ----------
    kind : SlowKind
        ``CONSTANT`` (``ell = c``), ``LOGPOW`` (``log(x)**beta``),
        ``EXPLOGPOW`` (``exp(log(x)**gamma)``) or ``ITERLOG`` (``log(log(x))``).
    param : float
        ``c``, ``beta`` or ``gamma`` respectively; ignored for ``ITERLOG``.

    Notes
    -----
    Each kind is evaluated as ``ell(max(x, x0))`` where ``x0`` is 1 for
    constants, ``e`` for the two log kinds and ``e**e`` for the iterated log,
    so ``ell`` is positive and continuous on ``[0, inf)``.
    """

    kind: SlowKind = SlowKind.CONSTANT
    param: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SlowKind(self.kind))
        p = float(self.param)
        if not math.isfinite(p):
            raise ValueError("slow-variation parameter must be finite")
        if self.kind is SlowKind.CONSTANT and not p > 0:
            raise ValueError("constant slowly varying factor must be positive")
        if self.kind is SlowKind.EXPLOGPOW and not 0 < p < 1:
            raise ValueError("exp-log-power exponent must lie in (0, 1)")
        if self.kind is SlowKind.ITERLOG:
            p = 1.0
        object.__setattr__(self, "param", p)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float = 1.0) -> "SlowVariationSpec":
        return cls(SlowKind.CONSTANT, c)

    @classmethod
    def log_power(cls, beta: float) -> "SlowVariationSpec":
        return cls(SlowKind.LOGPOW, beta)

    @classmethod
    def exp_log_power(cls, gamma: float) -> "SlowVariationSpec":
        return cls(SlowKind.EXPLOGPOW, gamma)

    @classmethod
    def iter_log(cls) -> "SlowVariationSpec":
        return cls(SlowKind.ITERLOG)

    # -- evaluation ----------------------------------------------------------
    @property
    def x0(self) -> float:
        if self.kind is SlowKind.CONSTANT:
            return 1.0
        if self.kind is SlowKind.ITERLOG:
            return math.exp(math.e)
        return math.e

    @property
    def is_constant(self) -> bool:
        return self.kind is SlowKind.CONSTANT

    def log_ell(self, x):
        """``log ell(x)``, vectorised; ``x`` below ``x0`` is clamped to ``x0``."""
        x = np.maximum(np.asarray(x, dtype=float), self.x0)
        return self.log_ell_of_log(np.log(x))

    def log_ell_of_log(self, t):
        """``log ell(e**t)``; stays finite for ``t`` far beyond the double range of ``e**t``."""
        t = np.maximum(np.asarray(t, dtype=float), math.log(self.x0))
        p = self.param
        if self.kind is SlowKind.CONSTANT:
            return np.full_like(t, math.log(p))
        if self.kind is SlowKind.LOGPOW:
            return p * np.log(t)
        if self.kind is SlowKind.EXPLOGPOW:
            return t ** p
        return np.log(np.log(t))

    def elasticity(self, x):
        """``d log ell / d log x`` (zero below ``x0``)."""
        xa = np.asarray(x, dtype=float)
        xc = np.maximum(xa, self.x0)
        lx = np.log(xc)
        p = self.param
        if self.kind is SlowKind.CONSTANT:
            out = np.zeros_like(xc)
        elif self.kind is SlowKind.LOGPOW:
            out = p / lx
        elif self.kind is SlowKind.EXPLOGPOW:
            out = p * lx ** (p - 1.0)
        else:
            out = 1.0 / (lx * np.log(lx))
        return np.where(xa > self.x0, out, 0.0)

    def __call__(self, x):
        return np.exp(self.log_ell(x))

    def square_summable_at(self, gamma: float) -> bool:
        """Whether ``sum_k k**gamma * ell(k)**2`` converges (integral test)."""
        if gamma < -1:
            return True
        if gamma > -1:
            return False
        # gamma == -1: summand log^{2 beta}(k)/k is summable iff beta < -1/2
        return self.kind is SlowKind.LOGPOW and self.param < -0.5

    def literal(self) -> str:
        if self.kind is SlowKind.ITERLOG:
            return "iterlog"
        return f"{self.kind.value}:{self.param!r}"


@dataclass(frozen=True)
class CoefficientProfile:
    """Coefficient weights ``b(k) = k**alpha * ell(k)`` with ``b(0) := b(1)``.

    Examples
    --------
    >>> p = CoefficientProfile(alpha=-0.5)
    >>> float(p.b(4))
    0.5
    """

    alpha: float = 0.0
    slow: SlowVariationSpec = field(default_factory=SlowVariationSpec)
    sigma: float = 1.0

    def __post_init__(self):
        a = float(self.alpha)
        s = float(self.sigma)
        if not math.isfinite(a):
            raise ValueError("alpha must be finite")
        if not (s > 0 and math.isfinite(s)):
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "sigma", s)

    def log_b(self, k):
        """``log b(k)`` for ``k >= 0`` (real ``k`` allowed); vectorised."""
        k = np.asarray(k, dtype=float)
        if np.any(k < 0):
            raise ValueError("b(k) is defined for k >= 0")
        x = np.maximum(k, 1.0)  # b(0) := b(1); also used for fractional k < 1
        return self.alpha * np.log(x) + self.slow.log_ell(x)

    def b(self, k):
        return np.exp(self.log_b(k))

    def log_b2_range(self, n: int, start: int = 0):
        """``log b(k)**2`` for ``k = start..n``."""
        return 2.0 * self.log_b(np.arange(start, n + 1, dtype=float))

    @property
    def phase(self) -> PhaseClass:
        return phase_classify(self)

    def literal(self) -> str:
        return f"alpha={self.alpha!r},slow={self.slow.literal()},sigma={self.sigma!r}"

    def __str__(self) -> str:
        return self.literal()


@dataclass(frozen=True)
class HyperbolicProfile:
    """Weights ``b(k) = sqrt((2a+1)(2a+2)...(2a+k) / k!)`` of the hyperbolic family.

    Interchangeable with :class:`CoefficientProfile` wherever only ``log_b``,
    ``alpha`` and ``sigma`` are consulted (samplers, finite-n intensities).
    These weights are regularly varying with index ``alpha``.
    """

    alpha: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        a = float(self.alpha)
        if not a > -0.5:
            raise ValueError("hyperbolic weights need alpha > -1/2")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "sigma", float(self.sigma))

    def log_b(self, k):
        k = np.asarray(k, dtype=float)
        if np.any(k < 0):
            raise ValueError("b(k) is defined for k >= 0")
        c = 2.0 * self.alpha + 1.0
        return 0.5 * (_log_gamma_ratio(k, c) - gammaln(c))

    def b(self, k):
        return np.exp(self.log_b(k))

    def log_b2_range(self, n: int, start: int = 0):
        return 2.0 * self.log_b(np.arange(start, n + 1, dtype=float))

    @property
    def phase(self) -> PhaseClass:
        return PhaseClass.LIQUID


# ---------------------------------------------------------------------------
# functional API
# ---------------------------------------------------------------------------

_STIRLING = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0)


def _stirling_tail(z):
    w = (1.0 / z) ** 2
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING):
        acc = acc * w + c
    return acc / z


def _log_gamma_ratio(k, c: float):
    """``log Gamma(k + c) - log Gamma(k + 1)`` without the cancellation of two
    ``gammaln`` calls (each ~``k log k``) at large ``k``."""
    k = np.asarray(k, dtype=float)
    small = k < 30.0
    out = np.empty_like(k)
    ks = k[small]
    out[small] = gammaln(ks + c) - gammaln(ks + 1.0)
    kl = k[~small]
    if kl.size:
        # Stirling for both, with log(k + c) = log k + log1p(c / k)
        out[~small] = ((c - 1.0) * np.log(kl) + (kl + c - 0.5) * np.log1p(c / kl)
                       - (kl + 0.5) * np.log1p(1.0 / kl) - (c - 1.0)
                       + _stirling_tail(kl + c) - _stirling_tail(kl + 1.0))
    return out


def b_value(profile, k: int) -> float:
    """``b(k)``; ``k = 0`` returns ``b(1)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(profile.b(k))


def log_b_value(profile, k) -> float:
    """Overflow-safe ``log b(k)``; accepts real ``k >= 0``."""
    return float(profile.log_b(k))


def _log_terms(profile: CoefficientProfile, n: int, gamma: float, q: float) -> np.ndarray:
    k = np.arange(1, n + 1, dtype=float)
    return gamma * np.log(k) + 2.0 * profile.slow.log_ell(k) + k * math.log(q)


def log_partial_power_sum(profile: CoefficientProfile, n: int, gamma: float, q: float) -> float:
    """``log S_n(gamma; ell; q)`` via log-sum-exp (never overflows)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not q > 0:
        raise ValueError("q must be positive")
    return float(logsumexp(_log_terms(profile, n, gamma, q)))


def partial_power_sum(profile: CoefficientProfile, n: int, gamma: float, q: float = 1.0) -> float:
    """``S_n(gamma; ell; q) = sum_{k=1}^n k**gamma * ell(k)**2 * q**k``.

    Terms are accumulated with :func:`math.fsum`; when a term's log-magnitude
    exceeds 600 the sum is formed as ``exp(logsumexp(...))`` instead.

    Raises
    ------
    MagnitudeError
        If the sum itself exceeds the double range.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not q > 0:
        raise ValueError("q must be positive")
    logs = _log_terms(profile, n, gamma, q)
    if logs.max() <= LOG_SPACE_THRESHOLD:
        return math.fsum(np.exp(logs))
    lse = float(logsumexp(logs))
    if lse > _LOG_DBL_MAX:
        raise MagnitudeError(f"magnitude out of range: log S_n = {lse:.6g}")
    return math.exp(lse)


def big_l(profile, n: int) -> float:
    """``L(n) = sum_{k=1}^n b(k)**2`` (discrete, exactly summed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    parts = []
    # chunked so large n never allocates more than one 2^20 block; fsum of the
    # exact chunk sums equals fsum of all terms up to one final rounding
    for lo in range(1, n + 1, 1 << 20):
        hi = min(n, lo + (1 << 20) - 1)
        parts.append(math.fsum(np.exp(2.0 * profile.log_b(np.arange(lo, hi + 1, dtype=float)))))
    return math.fsum(parts)


def big_l_cumulative(profile, n: int) -> np.ndarray:
    """Array ``[L(1), ..., L(n)]`` (plain cumulative sum; for diagnostics)."""
    return np.cumsum(np.exp(profile.log_b2_range(n, start=1)))


def _tail_integrand_log(profile: CoefficientProfile, gamma: float):
    slow = profile.slow

    def f(t):
        # int_X^inf x^gamma ell^2(x) dx  with  x = e^t
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp((gamma + 1.0) * t + 2.0 * slow.log_ell_of_log(t))
        return np.nan_to_num(val, nan=0.0, posinf=0.0)

    return f


def tail_sum(profile: CoefficientProfile, gamma: float, *, return_bound: bool = False,
             split: int = _TAIL_SPLIT):
    """``S(gamma; ell) = sum_{k>=1} k**gamma * ell(k)**2``.

    Finiteness is decided analytically (``gamma < -1`` always converges,
    ``gamma = -1`` only for ``ell = log**beta`` with ``beta < -1/2``).  When
    finite, the first ``split`` terms are summed exactly and the remainder is
    the midpoint-rule integral ``int_{N+1/2}^inf f`` with its leading
    Euler-Maclaurin correction ``-f'(N+1/2)/24``.

    Returns
    -------
    float or (float, float)
        ``inf`` when divergent.  With ``return_bound`` also an error bound
        (next Euler-Maclaurin term plus the quadrature error estimate).
    """
    gamma = float(gamma)
    if not profile.slow.square_summable_at(gamma):
        return (math.inf, 0.0) if return_bound else math.inf
    n = int(split)
    k = np.arange(1, n + 1, dtype=float)
    head = math.fsum(np.exp(gamma * np.log(k) + 2.0 * profile.slow.log_ell(k)))

    x_mid = n + 0.5
    t0 = math.log(x_mid)
    decay = max(abs(gamma + 1.0), 1e-3)
    scale = 1.0 / decay if gamma != -1.0 else max(t0, 1.0)
    cfg = QuadratureConfig(abs_tol=1e-16, rel_tol=1e-13, max_subdivisions=400)
    if gamma == -1.0:
        # int_{t0}^inf t^{2 beta} dt in closed form; the integrand decays too slowly to quadrature
        e = 2.0 * profile.slow.param + 1.0
        tail, qerr = t0 ** e / -e, 0.0
    else:
        tail, qerr = integrate_semi_infinite(_tail_integrand_log(profile, gamma), t0, scale, cfg,
                                             full_output=True)
    # f(x) = x^gamma ell^2(x);  f'(x) = f(x) (gamma + 2 eps(x)) / x
    f_mid = math.exp(gamma * t0 + 2.0 * float(profile.slow.log_ell(x_mid)))
    eps = float(profile.slow.elasticity(x_mid))
    d1 = f_mid * (gamma + 2.0 * eps) / x_mid
    g = gamma + 2.0 * eps
    d3 = f_mid * abs(g * (g - 1.0) * (g - 2.0)) / x_mid ** 3
    value = head + tail - d1 / 24.0
    bound = 7.0 * d3 / 5760.0 * 2.0 + abs(qerr)
    return (value, bound) if return_bound else value


def hyperbolic_weight(alpha: float, k: int) -> float:
    """``b_{2 alpha}(k) = sqrt((2a+1)...(2a+k)/k!)`` computed from log-gamma sums."""
    if not alpha > -0.5:
        raise ValueError("hyperbolic weights need alpha > -1/2")
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(HyperbolicProfile(alpha).b(k))


def phase_classify(profile) -> PhaseClass:
    """Liquid for ``alpha > -1/2``; at ``alpha = -1/2`` weak iff ``S(-1) = inf``."""
    a = profile.alpha
    if a > -0.5:
        return PhaseClass.LIQUID
    if a < -0.5:
        return PhaseClass.STRONG_CRYSTALLINE
    slow = getattr(profile, "slow", None)
    if slow is not None and slow.square_summable_at(-1.0):
        return PhaseClass.STRONG_CRYSTALLINE
    return PhaseClass.WEAK_CRYSTALLINE


# ---------------------------------------------------------------------------
# profile literal: alpha=<f>,slow=const:<c>|logpow:<b>|explogpow:<g>|iterlog,sigma=<f>
# ---------------------------------------------------------------------------

_FIELD_RE = re.compile(r"\s*([a-z]+)\s*=\s*(.*?)\s*$")


def _parse_slow(text: str) -> SlowVariationSpec:
    text = text.strip()
    if text == "iterlog":
        return SlowVariationSpec.iter_log()
    kind, sep, arg = text.partition(":")
    if not sep:
        raise ValueError(f"slow-variation literal {text!r} needs '<kind>:<value>'")
    try:
        kind_enum = SlowKind(kind.strip())
    except ValueError:
        raise ValueError(f"unknown slow-variation kind {kind!r}") from None
    if kind_enum is SlowKind.ITERLOG:
        raise ValueError("iterlog takes no parameter")
    return SlowVariationSpec(kind_enum, float(arg))


def parse_profile(literal: str) -> CoefficientProfile:
    """Parse ``alpha=<f>,slow=<spec>,sigma=<f>``; ``slow`` and ``sigma`` are optional.

    Floats go through :func:`float`, so a literal produced by
    :meth:`CoefficientProfile.literal` round-trips bit-exactly.
    """
    if not isinstance(literal, str) or not literal.strip():
        raise ValueError("empty profile literal")
    values: dict[str, str] = {}
    for chunk in literal.split(","):
        m = _FIELD_RE.match(chunk)
        if not m:
            raise ValueError(f"malformed profile field {chunk!r}")
        key, val = m.group(1), m.group(2)
        if key not in ("alpha", "slow", "sigma"):
            raise ValueError(f"unknown profile field {key!r}")
        if key in values:
            raise ValueError(f"duplicate profile field {key!r}")
        values[key] = val
    if "alpha" not in values:
        raise ValueError("profile literal must set alpha")
    slow = _parse_slow(values["slow"]) if "slow" in values else SlowVariationSpec()
    sigma = float(values.get("sigma", "1"))
    return CoefficientProfile(alpha=float(values["alpha"]), slow=slow, sigma=sigma)
