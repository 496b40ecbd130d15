"""Special functions: Lambert ``W_{-1}``, ``Phi_beta``, ``erf``/``erfc``, ``I_0``.

Everything here is implemented from series, continued fractions and
quadrature rather than delegated, so the golden values in the test fixtures
pin down this code and not whichever library happens to be installed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln, logsumexp

from .quadrature import QuadratureConfig, QuadratureError, integrate

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "LambertDomainError",
    "LambertResult",
    "lambert_w_m1",
    "lambert_w_m1_ex",
    "lambert_seed",
    "phi",
    "log_phi_real",
    "phi_moment_ratio",
    "erf",
    "erfc",
    "erf_erfc",
    "bessel_i0",
    "bessel_i0e",
    "covariance_sum",
]

_INV_E = math.exp(-1.0)
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Lambert W, branch -1
# ---------------------------------------------------------------------------

class LambertDomainError(ValueError):
    pass


@dataclass(frozen=True)
class LambertResult:
    value: float
    near_branch_point: bool = False
    iterations: int = 0


def lambert_seed(x: float) -> float:
    """Two-term asymptotic seed ``-log(-1/x) - log(log(-1/x))`` (valid as x -> 0-)."""
    l1 = math.log(-1.0 / x)
    return -l1 - math.log(l1)


def _initial_guess(x: float) -> float:
    ex1 = 1.0 + math.e * x
    if ex1 < 0.25:
        # branch-point series in p = -sqrt(2 (1 + e x))
        p = -math.sqrt(2.0 * ex1)
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    l1 = math.log(-x)          # negative
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def lambert_w_m1_ex(x: float, max_iter: int = 30) -> LambertResult:
    """``W_{-1}(x)`` with diagnostics; see :func:`lambert_w_m1`."""
    x = float(x)
    if not (-_INV_E - 1e-15 <= x < 0.0) or math.isnan(x):
        raise LambertDomainError(f"W_-1 is defined on (-1/e, 0); got x={x!r}")
    if x + _INV_E <= 1e-15:
        return LambertResult(-1.0, True, 0)
    w = _initial_guess(x)
    log_mx = math.log(-x)
    for it in range(1, max_iter + 1):
        if w > -3.0:
            # Halley on f(w) = w e^w - x
            ew = math.exp(w)
            f = w * ew - x
            fp = ew * (w + 1.0)
            if fp == 0.0:
                break
            if abs(f) <= 2.0 * _EPS * abs(x):
                # residual at rounding level; near -1/e the step f/fp only amplifies noise
                return LambertResult(w, False, it)
            step = f / (fp - (w + 2.0) * f / (2.0 * (w + 1.0)))
        else:
            # Halley on g(w) = w + log(-w) - log(-x): same root, no underflow
            g = w + math.log(-w) - log_mx
            gp = 1.0 + 1.0 / w
            gpp = -1.0 / (w * w)
            step = g / (gp - 0.5 * g * gpp / gp)
        w_new = min(w - step, -1.0)
        if abs(w_new - w) <= 4.0 * _EPS * abs(w_new):
            return LambertResult(w_new, False, it)
        w = w_new
    raise RuntimeError(f"W_-1 Halley iteration did not converge for x={x!r}")


def lambert_w_m1(x: float) -> float:
    """Secondary real branch of the Lambert W function.

    Solves ``w * exp(w) = x`` for ``w <= -1`` on ``-1/e < x < 0``.  The seed
    is the branch-point series near ``-1/e`` and the three-term asymptotic
    expansion elsewhere; Halley's iteration (at most 30 steps) refines it.

    Parameters
    ----------
    x : float
        Argument in ``(-1/e, 0)``.

    Returns
    -------
    float
        ``W_{-1}(x)``; exactly ``-1.0`` within ``1e-15`` of the branch point
        (use :func:`lambert_w_m1_ex` to see the proximity flag).

    Raises
    ------
    LambertDomainError
        If ``x`` lies outside ``[-1/e, 0)``.

    Examples
    --------
    >>> round(lambert_w_m1(-2 * math.exp(-2)), 12)
    -2.0
    """
    return lambert_w_m1_ex(x).value


# ---------------------------------------------------------------------------
# Phi_beta(u) = int_0^1 x^beta e^{u x} dx
# ---------------------------------------------------------------------------

def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > -1.0:
        raise ValueError(f"Phi_beta needs beta > -1; got {beta!r}")
    return beta


def log_phi_real(beta: float, t: float) -> float:
    """``log Phi_beta(t)`` for real ``t`` from positive-term series.

    ``t >= 0``: ``sum_k t^k / (k! (beta+k+1))``.
    ``t < 0``: Kummer's transformation gives
    ``e^t / a * sum_k |t|^k / (a+1)_k`` with ``a = beta + 1``.
    Both have only positive terms, so the log is accurate for any ``|t|``.
    """
    beta = _check_beta(beta)
    t = float(t)
    a = beta + 1.0
    if t == 0.0:
        return -math.log(a)
    at = abs(t)
    kmax = int(at + 12.0 * math.sqrt(at) + 60)
    k = np.arange(kmax + 1, dtype=float)
    if t > 0:
        logs = k * math.log(at) - gammaln(k + 1.0) - np.log(a + k)
        return float(logsumexp(logs))
    logs = k * math.log(at) - (gammaln(a + 1.0 + k) - gammaln(a + 1.0))
    return t - math.log(a) + float(logsumexp(logs))


def _phi_quad(beta: float, u: complex, cfg: QuadratureConfig) -> tuple[complex, float]:
    """Quadrature for ``Phi_beta(u)`` with ``e^u`` factored out when ``Re u > 0``.

    Returns ``(I, shift)`` with ``Phi = exp(shift) * I``.
    """
    shift = u.real if u.real > 0 else 0.0
    nb = int(abs(u.imag) / math.pi) + 1
    brk = np.linspace(0.0, 1.0, nb + 1)[1:-1]
    if beta < 0.0:
        p = 1.0 / (beta + 1.0)

        def f(t):
            return np.exp(u * t ** p - shift) / (beta + 1.0)
    else:
        def f(x):
            return x ** beta * np.exp(u * x - shift)
    val = integrate(f, 0.0, 1.0, cfg, breakpoints=brk)
    return complex(val), shift


def phi(beta: float, u: complex, cfg: QuadratureConfig | None = None,
        method: str = "auto") -> complex:
    """``Phi_beta(u) = int_0^1 x**beta * exp(u*x) dx`` for ``beta > -1``.

    Real arguments use the series of :func:`log_phi_real` unless
    ``method="quad"``; complex arguments use adaptive Gauss-Kronrod
    quadrature (with ``x = t**(1/(beta+1))`` when ``beta < 0``).
    """
    beta = _check_beta(beta)
    u = complex(u)
    if method not in ("auto", "quad", "series"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quad" and u.imag == 0.0:
        return complex(math.exp(log_phi_real(beta, u.real)))
    if method == "series":
        raise ValueError("series evaluation needs a real argument")
    val, shift = _phi_quad(beta, u, cfg or QuadratureConfig())
    return val * cmath.exp(shift)


def phi_moment_ratio(beta: float, t: float, j: int = 1) -> float:
    """``Phi_{beta+j}(t) / Phi_beta(t)`` for real ``t`` (log-space; no overflow)."""
    return math.exp(log_phi_real(beta + j, t) - log_phi_real(beta, t))


# ---------------------------------------------------------------------------
# erf / erfc
# ---------------------------------------------------------------------------

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_ERF_SPLIT = 0.5


@numba.njit(cache=True)
def _erf_series(x):
    # erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!   (positive terms)
    x2 = x * x
    term = x
    total = x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2.0 * n + 1.0)
        total += term
        if term < 1e-17 * total or n > 500:
            break
    return 2.0 / math.sqrt(math.pi) * math.exp(-x2) * total


@numba.njit(cache=True)
def _erfc_cf(x):
    # erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # modified Lentz evaluation, x > 0
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 1
    while k < 20000:
        a = 0.5 * k
        d = x + a * d
        if d == 0.0:
            d = tiny
        c = x + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        k += 1
    return math.exp(-x * x) / math.sqrt(math.pi) / f


@numba.njit(cache=True)
def _erf_scalar(x):
    if x != x:
        return x
    ax = abs(x)
    if ax < 0.5:
        v = _erf_series(ax)
    elif ax > 6.5:
        v = 1.0 - _erfc_cf(ax) if ax < 27.0 else 1.0
    else:
        v = 1.0 - _erfc_cf(ax)
    return v if x >= 0 else -v


@numba.njit(cache=True)
def _erfc_scalar(x):
    if x != x:
        return x
    ax = abs(x)
    if ax < 0.5:
        v = 1.0 - _erf_series(ax)
    elif ax > 27.3:
        v = 0.0
    else:
        v = _erfc_cf(ax)
    return v if x >= 0 else 2.0 - v


@numba.vectorize(["float64(float64)"], cache=True)
def erf(x):
    """Error function (elementwise)."""
    return _erf_scalar(x)


@numba.vectorize(["float64(float64)"], cache=True)
def erfc(x):
    """Complementary error function (elementwise), accurate in the far tail."""
    return _erfc_scalar(x)


def erf_erfc(u: float) -> tuple[float, float]:
    """Return ``(erf(u), erfc(u))``."""
    u = float(u)
    return float(erf(u)), float(erfc(u))


# ---------------------------------------------------------------------------
# modified Bessel I_0
# ---------------------------------------------------------------------------

_I0_SERIES_MAX = 500.0


@numba.njit(cache=True)
def _i0e_scalar(x):
    ax = abs(x)
    if ax <= _I0_SERIES_MAX:
        # sum (x^2/4)^k / (k!)^2, scaled by e^{-|x|}; all terms positive
        q = 0.25 * ax * ax
        term = 1.0
        total = 1.0
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            total += term
            if term < 1e-17 * total:
                break
        return total * math.exp(-ax)
    # Hankel expansion: e^x / sqrt(2 pi x) * sum ((2k-1)!!)^2 / (k! (8x)^k)
    term = 1.0
    total = 1.0
    k = 0
    while k < 60:
        k += 1
        nxt = term * (2.0 * k - 1.0) ** 2 / (k * 8.0 * ax)
        if nxt > term:
            break
        term = nxt
        total += term
        if term < 1e-17 * total:
            break
    return total / math.sqrt(2.0 * math.pi * ax)


@numba.vectorize(["float64(float64)"], cache=True)
def bessel_i0e(x):
    """Exponentially scaled ``exp(-|x|) * I_0(x)`` (elementwise)."""
    return _i0e_scalar(x)


@numba.vectorize(["float64(float64)"], cache=True)
def bessel_i0(x):
    """Modified Bessel function ``I_0`` (elementwise; ``inf`` beyond ~713)."""
    ax = abs(x)
    if ax > 713.0:
        return math.inf
    return _i0e_scalar(x) * math.exp(ax)


# ---------------------------------------------------------------------------
# finite-n covariance kernel
# ---------------------------------------------------------------------------

def covariance_sum(profile, n: int, w: complex, psi: float = 0.0) -> complex:
    """``(1/(n b(n)^2)) * sum_{k=0}^n b(k)^2 e^{k w/n} e^{i psi k}``.

    The limit as ``n -> inf`` is ``Phi_{2 alpha}(w)`` for ``psi`` in
    ``2 pi Z`` and zero otherwise.  Magnitudes are formed in log-space.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not profile.alpha > -0.5:
        raise ValueError("covariance_sum is meant for alpha > -1/2")
    w = complex(w)
    k = np.arange(n + 1, dtype=float)
    log_mag = profile.log_b2_range(n) - 2.0 * float(profile.log_b(n)) - math.log(n) + k * (w.real / n)
    ang = k * (w.imag / n) + psi * k
    mag = np.exp(log_mag)
    return complex(math.fsum(mag * np.cos(ang)), math.fsum(mag * np.sin(ang)))
