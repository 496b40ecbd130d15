import cmath
import csv
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rpzeros.profiles import CoefficientProfile
from rpzeros.quadrature import QuadratureConfig, integrate
from rpzeros.specfun import (LambertDomainError, bessel_i0, bessel_i0e, covariance_sum, erf,
                             erf_erfc, erfc, lambert_seed, lambert_w_m1, lambert_w_m1_ex,
                             log_phi_real, phi, phi_moment_ratio)

GOLDEN = Path(__file__).parent / "fixtures" / "specfun_golden.csv"


def _golden_rows():
    with GOLDEN.open() as fh:
        return list(csv.DictReader(fh))


def _eval(name, arg):
    if name == "erf":
        return float(erf(float(arg)))
    if name == "erfc":
        return float(erfc(float(arg)))
    if name == "bessel_i0":
        return float(bessel_i0(float(arg)))
    if name == "lambert_w_m1":
        return lambert_w_m1(float(arg))
    if name == "log_phi_real":
        beta, u = (float(v) for v in arg.split(";"))
        return log_phi_real(beta, u)
    raise KeyError(name)


@pytest.mark.parametrize("row", _golden_rows(), ids=lambda r: f"{r['function']}({r['input']})")
def test_golden(row):
    got = _eval(row["function"], row["input"])
    want = float(row["expected"])
    tol = float(row["tol"])
    if want == 0.0:
        assert got == 0.0
    else:
        assert abs(got - want) <= tol * abs(want)


# --- Lambert W_{-1} ----------------------------------------------------------------

def test_lambert_branch_point():
    r = lambert_w_m1_ex(-math.exp(-1.0))
    assert r.value == -1.0 and r.near_branch_point


def test_lambert_fixed_point():
    assert lambert_w_m1(-2.0 * math.exp(-2.0)) == pytest.approx(-2.0, abs=1e-14)


def test_lambert_bisection_oracle():
    x = -1e-3
    lo, hi = -40.0, -1.0          # w e^w - x changes sign; decreasing ... bisect on the root
    f = lambda w: w * math.exp(w) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    assert lambert_w_m1(x) == pytest.approx(0.5 * (lo + hi), rel=1e-14)


@pytest.mark.parametrize("x", [0.0, 1e-3, -0.37, -1.0, math.nan, -math.inf])
def test_lambert_domain(x):
    with pytest.raises(LambertDomainError):
        lambert_w_m1(x)


def _ulps_from_exact(x):
    w = lambert_w_m1(x)
    exact = mp.lambertw(mp.mpf(x), -1)
    return float(abs(w - exact)) / np.spacing(abs(float(exact))), w, exact


def test_lambert_accuracy_away_from_branch_point():
    # within a few ulp of the exact root; the relative residual of even the correctly
    # rounded root is ~ ulp(w) |1 + w| / |w|, which exceeds 1e-14 once |w| > ~40
    for x in -np.logspace(-300, -1, 60):
        ulps, w, exact = _ulps_from_exact(float(x))
        assert ulps <= 4 and w <= -1.0
        resid = float(abs(mp.mpf(w) * mp.exp(w) - x) / abs(x))
        assert resid <= 4 * np.spacing(abs(w)) * abs(1 + w) / abs(w) + 2.3e-16


def test_lambert_near_branch_point_is_conditioning_limited():
    # w e^w - x is only resolvable to ~eps |x|; dW/dx = W / (x (1 + W)) amplifies that
    for d in np.logspace(-9, -2, 30):
        x = -math.exp(-1.0) + d
        w = lambert_w_m1(x)
        exact = float(mp.lambertw(mp.mpf(x), -1))
        assert abs(w - exact) <= 8 * 2.3e-16 / abs(1 + exact) + 4 * np.spacing(1.0)
        assert w <= -1.0


@given(st.floats(-0.3678794411714423, -1e-300))
def test_lambert_inverts(x):
    w = lambert_w_m1(x)
    assert w <= -1.0
    if x + math.exp(-1.0) <= 1e-15:
        assert w == -1.0 and lambert_w_m1_ex(x).near_branch_point
        return
    exact = float(mp.lambertw(mp.mpf(x), -1))
    assert abs(w - exact) <= 8 * 2.3e-16 / abs(1 + exact) + 4 * np.spacing(abs(exact))


@pytest.mark.parametrize("x", -np.logspace(-300, -4, 25))
def test_lambert_seed_quality(x):
    w = lambert_w_m1(x)
    assert abs(lambert_seed(x) - w) / abs(w) <= 0.05


# --- Phi_beta --------------------------------------------------------------------------

def test_phi_examples():
    assert phi(0.0, 0.0) == 1.0
    assert phi(1.5, 0.0).real == pytest.approx(1 / 2.5, rel=1e-15)
    assert phi(0.0, 2.0).real == pytest.approx((math.e ** 2 - 1) / 2, rel=1e-14)
    assert phi(0.0, 2.0, method="quad").real == pytest.approx((math.e ** 2 - 1) / 2, rel=1e-12)


def test_phi_rejects_beta():
    with pytest.raises(ValueError):
        phi(-1.0, 0.5)


@pytest.mark.parametrize("beta", [-0.9, -0.5, -0.4, 0.0, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("u", [1, -1, 1j, -1j, 2 + 1j, -3 - 4j, 10j, 25 + 3j])
def test_phi_matches_mpmath(beta, u):
    a = mp.mpf(beta) + 1
    ref = complex(mp.hyp1f1(a, a + 1, u) / a)
    assert abs(phi(beta, u) - ref) <= 1e-10 * max(abs(ref), 1e-300)


@pytest.mark.parametrize("beta", [-0.4, 0.0, 1.0, 2.5])
@pytest.mark.parametrize("u", [1, -1, 1j, -1j, 2 + 1j])
def test_phi_recurrence(beta, u):
    lhs = u * phi(beta + 1, u)
    rhs = cmath.exp(u) - (beta + 1) * phi(beta, u)
    assert abs(lhs - rhs) <= 1e-10


@pytest.mark.parametrize("beta", [-0.4, 0.0, 1.3])
def test_phi_derivative(beta):
    h = 1e-5
    for re in np.linspace(-3, 3, 5):
        for im in np.linspace(-3, 3, 5):
            u = complex(re, im)
            d = (phi(beta, u + h) - phi(beta, u - h)) / (2 * h)
            assert abs(d - phi(beta + 1, u)) <= 1e-6


@given(st.floats(-0.99, 10.0), st.floats(-800.0, 800.0))
def test_log_phi_real_vs_hyp1f1(beta, t):
    a = beta + 1
    ref = mp.log(mp.hyp1f1(a, a + 1, t) / a)
    assert log_phi_real(beta, t) == pytest.approx(float(ref), rel=1e-12, abs=1e-12)


@given(st.floats(-0.99, 5.0), st.floats(-50.0, 50.0))
def test_phi_moment_ratio_in_unit_interval(beta, t):
    r = phi_moment_ratio(beta, t)
    assert 0.0 < r < 1.0
    # Phi_{beta+1}/Phi_beta is the mean of x under x^beta e^{tx} on [0,1], increasing in t
    assert phi_moment_ratio(beta, t + 0.5) > r


def test_phi_large_argument_no_overflow():
    v = log_phi_real(0.0, 5000.0)
    assert v == pytest.approx(5000.0 - math.log(5000.0) + math.log1p(-math.exp(-5000.0)), rel=1e-14)


# --- erf / erfc ----------------------------------------------------------------------------

def test_erf_examples():
    assert erf_erfc(0.0) == (0.0, 1.0)
    e, c = erf_erfc(10.0)
    # 1 - 1e-43 rounds to 1.0 in double, so the interval (1 - 1e-43, 1] is {1.0}
    assert c < 1e-44 and e == 1.0
    assert erf_erfc(1.0)[0] == pytest.approx(0.8427007929497149, rel=1e-15)


@given(st.floats(-10, 10))
def test_erf_erfc_sum_and_oracle(u):
    e, c = erf_erfc(u)
    assert abs(e + c - 1.0) <= 1e-15
    assert e == pytest.approx(float(mp.erf(u)), rel=1e-14, abs=1e-300)
    assert c == pytest.approx(float(mp.erfc(u)), rel=1e-14)


def test_erf_odd_vectorised():
    x = np.linspace(-6, 6, 101)
    np.testing.assert_array_equal(erf(x), -erf(-x))


# --- I0 --------------------------------------------------------------------------------------

def test_i0_examples():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-15)


@given(st.floats(-50, 50))
def test_i0_even_and_oracle(x):
    assert bessel_i0(x) == bessel_i0(-x)
    assert bessel_i0(x) == pytest.approx(float(mp.besseli(0, x)), rel=1e-12)


@given(st.floats(0, 1e6))
def test_i0e_oracle(x):
    ref = mp.besseli(0, x) * mp.exp(-x)
    assert bessel_i0e(x) == pytest.approx(float(ref), rel=1e-12)


# --- Gaussian integral identities ------------------------------------------------------------------

US = [0.1, 0.5, 1.0, 2.0, 5.0]
CFG = QuadratureConfig(abs_tol=1e-15, rel_tol=1e-13, max_subdivisions=2000)


@pytest.mark.parametrize("u", US)
@pytest.mark.parametrize("phi_", [0.3, 1.0, 2.5])
def test_integral_identity_one(u, phi_):
    a = u * abs(math.sin(phi_))
    lhs = integrate(lambda x: np.exp(-(a / np.maximum(x, 1e-300)) ** 2), 0.0, 1.0, CFG)
    rhs = math.exp(-a * a) - math.sqrt(math.pi) * float(erfc(a)) * a
    assert abs(lhs - rhs) <= 1e-10


@pytest.mark.parametrize("u", US)
def test_integral_identity_two(u):
    f = lambda p: np.exp(-(u * np.cos(p)) ** 2) * erfc(u * np.sin(p)) * u * np.sin(p)
    lhs = integrate(f, 0.0, math.pi, CFG) / math.sqrt(math.pi)
    assert abs(lhs - (math.exp(-u * u) - float(erfc(u)))) <= 1e-10


@pytest.mark.parametrize("u", US)
def test_integral_identity_three(u):
    def inner(x):
        g = lambda p: np.exp(-u * u * (np.cos(p) ** 2 + (np.sin(p) / x) ** 2))
        w = min(x / u, 0.25)          # peaks of width x/u at both ends
        return integrate(g, 0.0, math.pi, CFG, breakpoints=(w, 4 * w, math.pi - 4 * w, math.pi - w))
    lhs = integrate(lambda xs: np.array([inner(x) for x in xs]), 0.0, 1.0, CFG) / math.pi
    assert abs(lhs - float(erfc(u))) <= 1e-10


# --- covariance sum -------------------------------------------------------------------------------

def test_covariance_sum_examples():
    p = CoefficientProfile(0.0)
    assert covariance_sum(p, 10**4, 0.0) == pytest.approx(1.0001, rel=1e-14)
    assert abs(covariance_sum(p, 10**4, 0.0, math.pi)) < 1e-3
    assert abs(covariance_sum(p, 10**5, 2.0) - phi(0.0, 2.0)) < 1e-3


@pytest.mark.parametrize("alpha", [-0.3, 0.0, 0.7])
def test_covariance_sum_converges(alpha):
    p = CoefficientProfile(alpha)
    w = 1.0 + 2.0j
    errs = [abs(covariance_sum(p, n, w) - phi(2 * alpha, w)) for n in (10**3, 10**4, 10**5)]
    assert errs[0] > errs[1] > errs[2]


def test_covariance_sum_rejects_crystalline():
    with pytest.raises(ValueError):
        covariance_sum(CoefficientProfile(-1.0), 10, 0.0)
