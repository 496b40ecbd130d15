"""Deterministic predictions for zeros of random polynomials.

Covers the covariance structure of the limiting Gaussian analytic functions,
first intensities of zeros (exact at finite ``n`` and in the scaling limit),
expected annulus counts, the strong/weak crossover shift, and the expected
fraction of unit-circle zeros of self-inversive polynomials.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .profiles import PhaseClass, phase_classify, tail_sum
from .quadrature import QuadratureConfig, integrate
from .specfun import bessel_i0e, erf, erfc, log_phi_real, phi

__all__ = [
    "gaf_covariance",
    "cross_covariance",
    "rho1",
    "kac_intensity",
    "weak_intensity",
    "strong_intensity",
    "limit_intensity",
    "m_alpha",
    "radial_intensity_finite",
    "expected_count_within",
    "expected_annulus_count",
    "window_intensity_finite",
    "radial_total_mass",
    "liquid_annulus",
    "weak_annulus",
    "strong_annulus",
    "annulus_limit",
    "crossover_shift",
    "crossover_error",
    "SelfInversiveMoments",
    "si_moments",
    "si_fraction_uv",
    "si_deficit_uv",
    "si_expected_fraction",
    "si_expected_fraction_double_integral",
    "si_deficit",
    "si_epsilon",
    "si_fraction_asymptotic",
    "g_ratio",
    "g_ratio_asymptotic",
    "si_circle_intensity",
    "si_counting_measure",
    "predictions_csv",
]

_SQRT_PI = math.sqrt(math.pi)


def _need_liquid(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > -0.5:
        raise ValueError(f"needs alpha > -1/2; got {alpha!r}")
    return alpha


def _is_real_direction(psi: float) -> bool:
    return abs(math.remainder(float(psi), math.pi)) < 1e-12


# ---------------------------------------------------------------------------
# GAF covariances and the first intensity
# ---------------------------------------------------------------------------

def gaf_covariance(alpha: float, sigma1: float, sigma2: float, psi: float,
                   u1: complex, u2: complex) -> tuple[complex, complex]:
    """``(E[G(u1) conj G(u2)], E[G(u1) G(u2)])`` for the liquid-phase GAF ``G_psi``.

    The pseudo-covariance is nonzero only along the real directions
    ``psi in {0, pi}``.
    """
    alpha = _need_liquid(alpha)
    s2 = sigma1 ** 2 + sigma2 ** 2
    herm = s2 * phi(2 * alpha, complex(u1) + complex(u2).conjugate())
    if _is_real_direction(psi):
        pseudo = (sigma1 ** 2 - sigma2 ** 2) * phi(2 * alpha, complex(u1) + complex(u2))
    else:
        pseudo = 0j
    return herm, pseudo


def cross_covariance(alpha: float, sigma1: float, sigma2: float, psi_i: float, psi_j: float,
                     u1: complex, u2: complex) -> tuple[complex, complex]:
    """Covariances between windows at angles ``psi_i`` and ``psi_j``.

    Windows at different angles are uncorrelated; the pseudo-covariance
    survives only for conjugate angles, ``psi_i + psi_j = 0 (mod 2 pi)``.
    """
    alpha = _need_liquid(alpha)
    same = abs(math.remainder(psi_i - psi_j, 2 * math.pi)) < 1e-12
    conj = abs(math.remainder(psi_i + psi_j, 2 * math.pi)) < 1e-12
    s2 = sigma1 ** 2 + sigma2 ** 2
    herm = s2 * phi(2 * alpha, complex(u1) + complex(u2).conjugate()) if same else 0j
    pseudo = (sigma1 ** 2 - sigma2 ** 2) * phi(2 * alpha, complex(u1) + complex(u2)) if conj else 0j
    return herm, pseudo


def _rho1_real(alpha: float, s: float) -> float:
    t = 2.0 * s
    beta = 2.0 * alpha
    l0 = log_phi_real(beta, t)
    r1 = math.exp(log_phi_real(beta + 1, t) - l0)
    r2 = math.exp(log_phi_real(beta + 2, t) - l0)
    return max(r2 - r1 * r1, 0.0) / math.pi


def rho1(alpha: float, u) -> float | np.ndarray:
    """First intensity of zeros of the isotropic ``G_psi`` at ``u``.

    ``rho1 = (1/pi) [Phi_{2a+2}/Phi_{2a} - (Phi_{2a+1}/Phi_{2a})^2]`` at
    ``2 Re u``: ``1/pi`` times the variance of ``x`` under the density
    proportional to ``x^{2a} e^{2 Re(u) x}`` on ``[0, 1]``.  Only ``Re u``
    matters.
    """
    alpha = _need_liquid(alpha)
    u = np.asarray(u, dtype=complex)
    if u.ndim == 0:
        return _rho1_real(alpha, float(u.real))
    return np.array([_rho1_real(alpha, float(x)) for x in u.real.ravel()]).reshape(u.shape)


def kac_intensity(s):
    """``(1/(4 pi s^2)) (1 - (s/sinh s)^2)``; series near ``s = 0``."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 2e-2
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ratio = np.where(small, 1.0, s / np.sinh(np.where(small, 1.0, s)))
        big = (1.0 - ratio ** 2) / (4.0 * math.pi * s ** 2)
    s2 = s * s
    ser = (1.0 / 3.0 - s2 / 15.0 + 2.0 * s2 ** 2 / 189.0 - s2 ** 3 / 675.0) / (4.0 * math.pi)
    out = np.where(small, ser, np.nan_to_num(big, nan=0.0))
    return float(out) if out.ndim == 0 else out


def weak_intensity(s):
    """``1 / (4 pi cosh^2 s)``."""
    s = np.asarray(s, dtype=float)
    out = 1.0 / (4.0 * math.pi * np.cosh(s) ** 2)
    return float(out) if out.ndim == 0 else out


def strong_intensity(s, m: float):
    """``1 / (4 pi cosh^2 (s - m))``."""
    return weak_intensity(np.asarray(s, dtype=float) - m)


def m_alpha(profile, include_zero_term: bool = False) -> tuple[float, float]:
    """``(1/2) log S(2 alpha)`` with its propagated truncation uncertainty.

    ``include_zero_term`` adds ``b(0)^2`` to the sum, matching polynomials
    that carry a ``k = 0`` coefficient.
    """
    s, err = tail_sum(profile, 2.0 * profile.alpha, return_bound=True)
    if not math.isfinite(s):
        raise ValueError("m_alpha needs a summable b^2 (strong crystalline phase)")
    if include_zero_term:
        s += float(profile.b(0)) ** 2
    return 0.5 * math.log(s), 0.5 * err / s


def limit_intensity(phase, s, alpha: float | None = None, m: float = 0.0):
    """Limiting zero intensity (per unit area in ``u``) at ``Re u = s``.

    ``phase`` is a :class:`PhaseClass` or ``"kac"``.  Liquid needs ``alpha``;
    strong crystalline uses the shift ``m`` (see :func:`m_alpha`).
    """
    if phase == "kac":
        return kac_intensity(s)
    phase = PhaseClass(phase)
    if phase is PhaseClass.LIQUID:
        if alpha is None:
            raise ValueError("liquid intensity needs alpha")
        return rho1(alpha, s)
    if phase is PhaseClass.WEAK_CRYSTALLINE:
        return weak_intensity(s)
    return strong_intensity(s, m)


# ---------------------------------------------------------------------------
# finite-n Gaussian intensities
# ---------------------------------------------------------------------------

def _log_weights(profile, n: int):
    return profile.log_b2_range(n)


def _moments(profile, n: int, log_r, lw=None):
    """Mean and variance of ``k`` under weights ``b(k)^2 r^{2k}``, ``k = 0..n``."""
    log_r = np.atleast_1d(np.asarray(log_r, dtype=float))
    if lw is None:
        lw = _log_weights(profile, n)
    k = np.arange(n + 1, dtype=float)
    mean = np.empty(log_r.size)
    var = np.empty(log_r.size)
    step = max(1, 2_000_000 // (n + 1))
    for i in range(0, log_r.size, step):
        lr = log_r[i:i + step, None]
        e = lw[None, :] + 2.0 * k[None, :] * lr
        e -= e.max(axis=1, keepdims=True)
        w = np.exp(e)
        tot = w.sum(axis=1)
        mu = (w * k).sum(axis=1) / tot
        var[i:i + step] = (w * (k[None, :] - mu[:, None]) ** 2).sum(axis=1) / tot
        mean[i:i + step] = mu
    return mean, var


def expected_count_within(profile, n: int, r):
    """Expected number of zeros in ``|z| < r`` for Gaussian coefficients.

    Equals the mean of ``k`` under the weights ``b(k)^2 r^{2k}``.
    """
    r = np.asarray(r, dtype=float)
    mean, _ = _moments(profile, n, np.log(r))
    return float(mean[0]) if r.ndim == 0 else mean.reshape(r.shape)


def expected_annulus_count(profile, n: int, r1: float, r2: float) -> float:
    """Expected number of zeros in ``r1 <= |z| <= r2`` (exact, Gaussian)."""
    m, _ = _moments(profile, n, np.log([r1, r2]))
    return float(m[1] - m[0])


def radial_intensity_finite(profile, n: int, r):
    """Radial intensity ``p_n(r)``: zeros per unit angle per unit radius.

    ``p_n(r) = Var_w(k) / (pi r)`` with weights ``b(k)^2 r^{2k}``,
    ``k = 0..n`` (``b(0) = b(1)``), so that ``2 pi int_0^inf p_n = n``.
    This is the Edelman-Kostlan formula written as a variance, which keeps
    it nonnegative and free of cancellation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    _, var = _moments(profile, n, np.log(r))
    out = var / (math.pi * r.ravel())
    return float(out[0]) if r.ndim == 0 else out.reshape(r.shape)


def window_intensity_finite(profile, n: int, s, log_radius: float = 0.0):
    """Finite-n intensity per unit area in window coordinates ``u = s + i y``.

    With ``z = exp(log_radius + u/n)`` the Jacobian gives
    ``p_n(|z|) |z| / n^2``; it converges to the limit intensities.
    """
    s = np.asarray(s, dtype=float)
    lr = log_radius + s / n
    _, var = _moments(profile, n, lr)
    out = var / (math.pi * n * n)
    return float(out[0]) if s.ndim == 0 else out.reshape(s.shape)


def radial_total_mass(profile, n: int, cfg: QuadratureConfig | None = None) -> float:
    """``2 pi int_0^inf p_n(r) dr`` by adaptive quadrature in ``t = log r``."""
    lw = _log_weights(profile, n)

    def f(t):
        _, var = _moments(profile, n, t, lw)
        return 2.0 * var  # 2 pi * (var / (pi r)) * r dt

    brk = sorted({0.0, *(c / n for c in (-50, -10, -3, -1, 1, 3, 10, 30, 100)),
                  -2.0, -0.5, 0.5, 2.0})
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11, max_subdivisions=2000)
    return float(integrate(f, -30.0, 30.0, cfg, breakpoints=brk))


# ---------------------------------------------------------------------------
# annulus laws
# ---------------------------------------------------------------------------

def _liquid_ratio(alpha: float, t: float) -> float:
    if t == math.inf:
        return 1.0
    if t == -math.inf:
        return 0.0
    return math.exp(log_phi_real(2 * alpha + 1, t) - log_phi_real(2 * alpha, t))


def liquid_annulus(alpha: float, s1: float, s2: float) -> float:
    """Limit of (zeros in the annulus)/n: ``R(2 s2) - R(2 s1)``, ``R = Phi_{2a+1}/Phi_{2a}``."""
    alpha = _need_liquid(alpha)
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    return _liquid_ratio(alpha, 2.0 * s2) - _liquid_ratio(alpha, 2.0 * s1)


def weak_annulus(s1: float, s2: float) -> float:
    """``(1/2)(tanh s2 - tanh s1)``."""
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    return 0.5 * (math.tanh(s2) - math.tanh(s1))


def strong_annulus(p_sq, s1: float, s2: float, sigma2: float = 1.0) -> float:
    """Angular average of ``exp(-|P|^2 e^{-2 s2}/sigma^2) - exp(-|P|^2 e^{-2 s1}/sigma^2)``.

    ``p_sq`` holds ``|P_inf(e^{i psi_j})|^2`` on a uniform periodic grid, so
    the trapezoid rule is the plain mean.
    """
    if not s1 < s2:
        raise ValueError("need s1 < s2")
    p = np.asarray(p_sq, dtype=float)
    a = np.exp(-p * math.exp(-2.0 * s2) / sigma2) if s2 < math.inf else np.ones_like(p)
    b = np.exp(-p * math.exp(-2.0 * s1) / sigma2) if s1 > -math.inf else np.zeros_like(p)
    return float(np.mean(a - b))


def annulus_limit(phase, s1: float, s2: float, alpha: float | None = None, p_sq=None,
                  sigma2: float = 1.0) -> float:
    """Dispatch to :func:`liquid_annulus`, :func:`weak_annulus` or :func:`strong_annulus`."""
    phase = PhaseClass(phase)
    if phase is PhaseClass.LIQUID:
        if alpha is None:
            raise ValueError("liquid annulus needs alpha")
        return liquid_annulus(alpha, s1, s2)
    if phase is PhaseClass.WEAK_CRYSTALLINE:
        return weak_annulus(s1, s2)
    if p_sq is None:
        raise ValueError("strong-phase annulus law needs |P_inf|^2 samples")
    return strong_annulus(p_sq, s1, s2, sigma2)


# ---------------------------------------------------------------------------
# crossover
# ---------------------------------------------------------------------------

def crossover_shift(alpha: float) -> float:
    """``(1/2) log(1/(1+2a)) + (1/2) log log(1/(1+2a))``; needs ``log(1/(1+2a)) > 1``."""
    alpha = float(alpha)
    x = 1.0 + 2.0 * alpha
    if not (0.0 < x < math.exp(-1.0)):
        raise ValueError(f"crossover shift undefined for alpha={alpha!r}: need 0 < 1+2 alpha < 1/e")
    L = -math.log(x)
    return 0.5 * L + 0.5 * math.log(L)


def crossover_error(alpha: float, s_lo: float = -3.0, s_hi: float = 3.0, n_grid: int = 601) -> float:
    """``sup_s |rho1(alpha, s + shift) - 1/(4 pi cosh^2 s)|`` over ``[s_lo, s_hi]``.

    Grid search followed by golden-section refinement around the best node.
    """
    shift = crossover_shift(alpha)

    def err(s):
        return abs(_rho1_real(alpha, s + shift) - 1.0 / (4.0 * math.pi * math.cosh(s) ** 2))

    grid = np.linspace(s_lo, s_hi, n_grid)
    vals = np.array([err(s) for s in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = err(c), err(d)
    for _ in range(60):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = err(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = err(d)
    return float(max(vals[i], fc, fd))


# ---------------------------------------------------------------------------
# self-inversive polynomials: expected fraction of zeros on the unit circle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfInversiveMoments:
    """Moments ``g1, g2`` plus ``gap = g2 - (m + 1/2)^2 g1`` summed directly,
    so that ``v - u`` and ``log(u/v)`` keep full relative accuracy."""

    m: int
    g1: float
    g2: float
    gap: float | None = None

    @property
    def u(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.g1)

    @property
    def v(self) -> float:
        return (self.m + 0.5) / math.sqrt(2.0 * self.g2)

    def _gap(self) -> float:
        return self.g2 - (self.m + 0.5) ** 2 * self.g1 if self.gap is None else self.gap

    @property
    def log_u_over_v(self) -> float:
        return 0.5 * math.log1p(self._gap() / ((self.m + 0.5) ** 2 * self.g1))

    @property
    def v_minus_u(self) -> float:
        r1, r2 = math.sqrt(self.g1), math.sqrt(self.g2)
        return -self._gap() / (math.sqrt(2.0) * r1 * r2 * ((self.m + 0.5) * r1 + r2))

    @property
    def d(self) -> float:
        """``(v^2 - u^2)/2``."""
        return -self._gap() / (4.0 * self.g1 * self.g2)


def si_moments(profile, m: int, sigma2: float | None = None) -> SelfInversiveMoments:
    """``g1 = s^2 sum b^2(k)``, ``g2 = s^2 sum (m + 1/2 - k)^2 b^2(k)``, ``k = 1..m``.

    Here ``s^2`` is the variance of *each* of ``Re xi`` and ``Im xi``, so an
    isotropic law with ``E|xi|^2 = v`` needs ``sigma2 = v / 2``: only then do
    ``u = 1/sqrt(2 g1)`` and the fraction formulas built on it match the
    sampled polynomials.  ``sigma2`` defaults to ``profile.sigma**2``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s2 = profile.sigma ** 2 if sigma2 is None else float(sigma2)
    k = np.arange(1, m + 1, dtype=float)
    b2 = np.exp(profile.log_b2_range(m, start=1))
    g1 = s2 * math.fsum(b2)
    g2 = s2 * math.fsum((m + 0.5 - k) ** 2 * b2)
    gap = s2 * math.fsum(k * (k - 2.0 * m - 1.0) * b2)
    return SelfInversiveMoments(m, g1, g2, gap)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _erfc_shift(a, delta):
    """``erfc(a + delta) - erfc(a)``, accurate when ``delta`` is small."""
    a = np.asarray(a, dtype=float)
    delta = np.asarray(delta, dtype=float)
    small = np.abs(delta) * (1.0 + np.abs(a) + np.abs(delta)) < 1.0
    t = a[..., None] + 0.5 * delta[..., None] * (_GL_X + 1.0)
    quad = -(1.0 / _SQRT_PI) * delta * (np.exp(-t * t) @ _GL_W)
    direct = erfc(a + delta) - erfc(a)
    return np.where(small, quad, direct)


def _qcfg():
    return QuadratureConfig(abs_tol=1e-15, rel_tol=1e-13, max_subdivisions=400)


def si_fraction_uv(u: float, v: float) -> float:
    """``erf(u) + (u/v) e^{-(u^2+v^2)/2} I0((u^2-v^2)/2) - (u/sqrt pi) int_0^pi e^{-u^2 cos^2} erfc(v sin) sin``."""
    d = 0.5 * (u * u - v * v)
    bess = (u / v) * math.exp(-0.5 * (u * u + v * v) + abs(d)) * float(bessel_i0e(d))

    def f(p):
        return np.exp(-u * u * np.cos(p) ** 2) * erfc(v * np.sin(p)) * np.sin(p)

    integral = integrate(f, 0.0, math.pi, _qcfg(), breakpoints=[0.5 * math.pi])
    return float(erf(u)) + bess - u / _SQRT_PI * integral


def si_deficit_uv(u: float, v: float, log_u_over_v: float | None = None,
                  v_minus_u: float | None = None, d: float | None = None) -> float:
    """``1 - si_fraction_uv(u, v)`` evaluated without cancellation.

    Uses ``(u/sqrt pi) int e^{-u^2 cos^2} erfc(u sin) sin = e^{-u^2} - erfc(u)`` to
    rewrite the deficit as
    ``e^{-u^2}[1 - (u/v) e^{-d} I0(d)] + (u/sqrt pi) int e^{-u^2 cos^2}
    (erfc(v sin) - erfc(u sin)) sin``, ``d = (v^2 - u^2)/2``.  The optional
    arguments supply ``log(u/v)``, ``v - u`` and ``d`` at full relative
    accuracy (see :class:`SelfInversiveMoments`).
    """
    if log_u_over_v is None:
        log_u_over_v = math.log(u) - math.log(v)
    if v_minus_u is None:
        v_minus_u = v - u
    if d is None:
        d = 0.5 * (v * v - u * u)
    ad = abs(d)
    # log(e^{-d} I0(d)) = log(i0e(|d|)) + |d| - d
    log_bess = math.log(float(bessel_i0e(ad))) + ad - d
    term1 = math.exp(-u * u) * -math.expm1(log_u_over_v + log_bess)

    def f(p):
        sp = np.sin(p)
        return np.exp(-u * u * np.cos(p) ** 2) * _erfc_shift(u * sp, v_minus_u * sp) * sp

    integral = integrate(f, 0.0, math.pi, QuadratureConfig(abs_tol=1e-300, rel_tol=1e-11,
                                                             max_subdivisions=400),
                         breakpoints=[0.5 * math.pi])
    return term1 + u / _SQRT_PI * integral


def si_expected_fraction(profile, m: int, sigma2: float | None = None) -> float:
    """Exact ``E[nu_m / (2m+1)]`` for isotropic Gaussian coefficients (erf/I0 form).

    ``sigma2`` is the per-component variance (see :func:`si_moments`).
    """
    mom = si_moments(profile, m, sigma2)
    return si_fraction_uv(mom.u, mom.v)


def si_deficit(profile, m: int, sigma2: float | None = None) -> float:
    """Exact ``1 - E[nu_m/(2m+1)]``, accurate even when it is tiny."""
    mom = si_moments(profile, m, sigma2)
    return si_deficit_uv(mom.u, mom.v, mom.log_u_over_v, mom.v_minus_u, mom.d)


def si_expected_fraction_double_integral(profile, m: int, sigma2: float | None = None) -> float:
    """The same expectation from the original double-integral representation.

    ``erf(u) + (1/(pi (m+1/2))) sqrt(g2/g1) int_0^1 int_0^pi
    exp(-(cos^2 phi/(2 g1) + (m+1/2)^2 sin^2 phi / (2 g2 x^2))) dphi dx``,
    evaluated by nested adaptive quadrature (independent of the I0 form).
    """
    mom = si_moments(profile, m, sigma2)
    u, v = mom.u, mom.v
    cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=400)

    def inner(phi_vals):
        out = np.empty(np.size(phi_vals))
        for i, p in enumerate(np.atleast_1d(phi_vals)):
            c2 = math.cos(p) ** 2
            s2 = math.sin(p) ** 2

            def g(x, c2=c2, s2=s2):
                with np.errstate(divide="ignore", over="ignore"):
                    return np.exp(-(u * u * c2 + v * v * s2 / (x * x)))

            out[i] = integrate(g, 0.0, 1.0, cfg)
        return out

    outer = integrate(inner, 0.0, math.pi, cfg, breakpoints=[0.5 * math.pi])
    pref = math.sqrt(mom.g2 / mom.g1) / (math.pi * (m + 0.5))
    return float(erf(u)) + pref * outer


def si_epsilon(profile, m: int) -> float:
    """``eps_{m, alpha}`` for ``alpha <= -1/2`` (three cases)."""
    a = profile.alpha
    if a > -0.5:
        raise ValueError("epsilon_{m,alpha} is defined for alpha <= -1/2")
    slow = profile.slow
    ell2_m = math.exp(2.0 * float(slow.log_ell(m)))
    if a == -0.5:
        k = np.arange(1, m + 1, dtype=float)
        return 0.75 * ell2_m / math.fsum(np.exp(2.0 * slow.log_ell(k)) / k)
    s = tail_sum(profile, 2.0 * a)
    if a > -1.0:
        return (2.0 + a) / (2.0 * (1.0 + a) * (3.0 + 2.0 * a) * s) * m ** (1.0 + 2.0 * a) * ell2_m
    k = np.arange(1, m + 1, dtype=float)
    return math.fsum(np.exp((1.0 + 2.0 * a) * np.log(k) + 2.0 * slow.log_ell(k))) / (m * s)


def si_fraction_asymptotic(profile, m: int, sigma2: float | None = None) -> float:
    """``1 - exp(-1/(2 g1)) eps_{m, alpha}`` (``alpha <= -1/2``)."""
    mom = si_moments(profile, m, sigma2)
    return 1.0 - math.exp(-1.0 / (2.0 * mom.g1)) * si_epsilon(profile, m)


def g_ratio(profile, m: int) -> float:
    """``(1/m) sqrt(g2/g1)`` (independent of sigma)."""
    mom = si_moments(profile, m, 1.0)
    return math.sqrt(mom.g2 / mom.g1) / m


def g_ratio_asymptotic(profile, m: int) -> float:
    """Large-m prediction for :func:`g_ratio`.

    ``alpha > -1/2``: the limit ``1/sqrt((1+a)(3+2a))``.  Otherwise
    ``1 - delta`` with ``delta`` the leading term of ``1 - g_ratio``
    (``eps`` for ``-1 < alpha <= -1/2``; ``-1/(2m) + eps`` for ``alpha <= -1``).
    """
    a = profile.alpha
    if a > -0.5:
        return 1.0 / math.sqrt((1.0 + a) * (3.0 + 2.0 * a))
    eps = si_epsilon(profile, m)
    if a <= -1.0:
        return 1.0 - (eps - 0.5 / m)
    return 1.0 - eps


def _circle_f(u: float, v: float, theta):
    """``p_m(phi)/(2m+1)`` as a function of ``theta = (m + 1/2) phi``."""
    theta = np.asarray(theta, dtype=float)
    c2 = np.cos(theta) ** 2
    s = np.abs(np.sin(theta))
    e = np.exp(-u * u * c2)
    return (u / v) / (2.0 * math.pi) * e * np.exp(-v * v * s * s) \
        + e * (u / (2.0 * _SQRT_PI)) * s * erf(v * s)


def si_circle_intensity(profile, m: int, phi_vals, sigma2: float | None = None):
    """Normalised intensity ``p_m(phi)/(2m+1)`` of zeros on the unit circle."""
    mom = si_moments(profile, m, sigma2)
    out = _circle_f(mom.u, mom.v, (m + 0.5) * np.asarray(phi_vals, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def si_counting_measure(profile, m: int, x: float, sigma2: float | None = None) -> float:
    """``E[#zeros on the arc [0, x]] / (2m+1)``."""
    mom = si_moments(profile, m, sigma2)
    u, v = mom.u, mom.v
    X = (m + 0.5) * float(x)
    cfg = _qcfg()
    per = integrate(lambda t: _circle_f(u, v, t), 0.0, math.pi, cfg, breakpoints=[0.5 * math.pi])
    full = math.floor(X / math.pi)
    rest = X - full * math.pi
    part = integrate(lambda t: _circle_f(u, v, t), 0.0, rest, cfg) if rest > 0 else 0.0
    return (full * per + part) / (m + 0.5)


# ---------------------------------------------------------------------------
# tabular output
# ---------------------------------------------------------------------------

def predictions_csv(rows, param_names) -> str:
    """Format ``(quantity, {param: value}, value, uncertainty)`` tuples as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", *param_names, "value", "uncertainty"])
    for quantity, params, value, unc in rows:
        w.writerow([quantity, *[repr(params.get(p, "")) if not isinstance(params.get(p, ""), str)
                                else params.get(p, "") for p in param_names],
                    repr(float(value)), repr(float(unc))])
    return buf.getvalue()
