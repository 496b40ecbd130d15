import csv
import io
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpzeros.ensembles import CoefficientLaw, SeedSpec, sample_p_infty, sample_self_inversive
from rpzeros.profiles import CoefficientProfile, PhaseClass, SlowVariationSpec, tail_sum
from rpzeros.roots import count_on_unit_circle, polynomial_zeros
from rpzeros.specfun import phi
from rpzeros.theory import (SelfInversiveMoments, annulus_limit, crossover_error, crossover_shift,
                            cross_covariance, expected_annulus_count, expected_count_within,
                            gaf_covariance, g_ratio, g_ratio_asymptotic, kac_intensity, limit_intensity,
                            liquid_annulus, m_alpha, predictions_csv, radial_intensity_finite,
                            radial_total_mass, rho1, si_counting_measure, si_circle_intensity,
                            si_deficit, si_epsilon, si_expected_fraction,
                            si_expected_fraction_double_integral, si_fraction_asymptotic,
                            si_fraction_uv, si_moments, strong_annulus, strong_intensity,
                            weak_annulus, weak_intensity, window_intensity_finite)


def kac_oracle(s):
    with mp.workdps(60):                     # 1/s^2 - 1/sinh^2 s cancels ~2 log10(1/s) digits
        s = mp.mpf(s)
        return float((1 / s ** 2 - 1 / mp.sinh(s) ** 2) / (4 * mp.pi))


def rho1_oracle(alpha, s):
    # (1/pi) Var(x) under x^{2 alpha} e^{2 s x} dx on [0, 1], via 1F1
    def Phi(beta, t):
        a = mp.mpf(beta) + 1
        return mp.hyp1f1(a, a + 1, t) / a
    t = 2 * mp.mpf(s)
    p0, p1, p2 = Phi(2 * alpha, t), Phi(2 * alpha + 1, t), Phi(2 * alpha + 2, t)
    return float((p2 / p0 - (p1 / p0) ** 2) / mp.pi)


# --- covariances ---------------------------------------------------------------------

def test_gaf_covariance_examples():
    h, p = gaf_covariance(0.0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0.0, 0, 0)
    assert h == pytest.approx(1.0) and p == pytest.approx(0.0)
    _, p = gaf_covariance(0.3, 1.0, 0.2, math.pi / 2, 0.5, 0.1j)
    assert p == 0
    h, _ = gaf_covariance(1.0, 1.0, 0.0, 0.0, 1.0, 1j)
    assert h == pytest.approx(phi(2.0, 1 - 1j), rel=1e-12)


def test_gaf_pseudo_on_axis():
    for psi in (0.0, math.pi):
        _, p = gaf_covariance(0.2, 1.0, 0.5, psi, 0.3 + 1j, -0.2)
        assert p == pytest.approx(0.75 * phi(0.4, 0.1 + 1j), rel=1e-12)


def test_cross_covariance_conjugate_pair():
    _, p = cross_covariance(0.0, 1.0, 0.4, 0.7, 2 * math.pi - 0.7, 0.2, 0.3)
    assert p == pytest.approx(0.84 * phi(0.0, 0.5), rel=1e-12)
    h, p = cross_covariance(0.0, 1.0, 0.4, 0.7, 1.9, 0.2, 0.3)
    assert h == 0 and p == 0


def test_covariance_rejects_crystalline():
    with pytest.raises(ValueError):
        gaf_covariance(-0.5, 1, 1, 0, 0, 0)
    with pytest.raises(ValueError):
        rho1(-0.6, 0.0)


# --- rho1 ---------------------------------------------------------------------------------

def test_rho1_examples():
    assert rho1(0.0, 0.0) == pytest.approx(1 / (12 * math.pi), rel=1e-12)
    assert rho1(0.0, 1.0) == pytest.approx(0.25 / math.pi * (1 - 1 / math.sinh(1) ** 2), rel=1e-12)
    assert rho1(0.0, 1.0) == pytest.approx(0.02196, abs=1e-5)


@given(st.floats(-5, 5), st.floats(-50, 50))
def test_rho1_depends_on_real_part_only(re, im):
    assert rho1(0.4, complex(re, im)) == rho1(0.4, re)


@pytest.mark.parametrize("s", [-3, -1, -0.1, 0.1, 1, 3])
def test_rho1_kac_closed_form(s):
    assert rho1(0.0, s) == pytest.approx(kac_oracle(s), abs=1e-10)
    assert kac_intensity(s) == pytest.approx(kac_oracle(s), rel=1e-12)


@pytest.mark.parametrize("alpha", [-0.45, -0.2, 0.5, 3.0])
@pytest.mark.parametrize("s", [-20.0, -2.0, 0.0, 0.7, 15.0])
def test_rho1_general_alpha(alpha, s):
    assert rho1(alpha, s) == pytest.approx(rho1_oracle(alpha, s), rel=1e-10)


def test_kac_near_zero_series():
    for s in (1e-8, 1e-4, 1e-2, 0.2):
        assert kac_intensity(s) == pytest.approx(kac_oracle(s), rel=1e-13)
    assert kac_intensity(0.0) == pytest.approx(1 / (12 * math.pi), rel=1e-15)


# --- finite n -------------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [-1.0, 0.0, 1.0])
def test_total_mass(alpha):
    n = 200
    assert radial_total_mass(CoefficientProfile(alpha), n) == pytest.approx(n, rel=1e-6)


def test_total_mass_degree_one():
    assert radial_total_mass(CoefficientProfile(0.0), 1) == pytest.approx(1.0, rel=1e-6)


def test_finite_kac_converges():
    n = 2000
    val = window_intensity_finite(CoefficientProfile(0.0), n, 1.0)
    assert val == pytest.approx(kac_intensity(1.0), rel=0.02)


def test_radial_intensity_degree_one():
    # one zero at -xi_0/xi_1, a ratio of Gaussians: p_1(r) = r / (pi (1 + r^2)^2)
    for r in (0.3, 1.0, 2.5):
        assert radial_intensity_finite(CoefficientProfile(0.0), 1, r) == pytest.approx(
            r / (math.pi * (1 + r * r) ** 2), rel=1e-12)


def test_radial_intensity_nonnegative():
    rng = np.random.default_rng(0)
    alphas = rng.uniform(-3, 3, 20)
    for a in alphas:
        prof = CoefficientProfile(float(a), SlowVariationSpec.log_power(float(rng.uniform(-1, 1))))
        n = int(rng.integers(1, 400))
        r = np.exp(rng.uniform(-5, 5, 500))
        assert np.all(radial_intensity_finite(prof, n, r) >= -1e-15)


def test_expected_counts():
    prof = CoefficientProfile(-1.0)
    n = 300
    assert expected_count_within(prof, n, 1e-9) == pytest.approx(0.0, abs=1e-6)
    assert expected_count_within(prof, n, 1e9) == pytest.approx(n, rel=1e-9)
    r = np.linspace(0.5, 1.5, 11)
    c = expected_count_within(prof, n, r)
    assert np.all(np.diff(c) > 0)
    assert expected_annulus_count(prof, n, 0.9, 1.1) == pytest.approx(
        float(expected_count_within(prof, n, 1.1) - expected_count_within(prof, n, 0.9)), rel=1e-12)


def test_finite_annulus_approaches_liquid_limit():
    prof = CoefficientProfile(0.0)
    errs = []
    for n in (250, 1000, 4000):
        frac = expected_annulus_count(prof, n, math.exp(-1 / n), math.exp(1 / n)) / n
        errs.append(abs(frac - liquid_annulus(0.0, -1, 1)))
    assert errs[0] > errs[1] > errs[2]


# --- limits -----------------------------------------------------------------------------------

def test_limit_intensity_examples():
    assert limit_intensity(PhaseClass.WEAK_CRYSTALLINE, 0.0) == pytest.approx(1 / (4 * math.pi))
    s = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(strong_intensity(s, 0.0), strong_intensity(-s, 0.0), rtol=1e-15)
    assert limit_intensity(PhaseClass.LIQUID, 1.0, alpha=0.0) == pytest.approx(rho1(0.0, 1.0), rel=1e-14)
    for x in (-3, -0.5, 0.2, 2):
        assert limit_intensity(PhaseClass.LIQUID, x, alpha=0.0) == pytest.approx(
            limit_intensity("kac", x), abs=1e-10)
    assert weak_intensity(0.3) == pytest.approx(1 / (4 * math.pi * math.cosh(0.3) ** 2))


def test_limit_intensity_rejects():
    with pytest.raises(ValueError):
        limit_intensity("glassy", 0.0)
    with pytest.raises(ValueError):
        limit_intensity(PhaseClass.LIQUID, 0.0)


def test_m_alpha():
    v, err = m_alpha(CoefficientProfile(-2.0))
    assert v == pytest.approx(0.5 * math.log(math.pi ** 4 / 90), rel=1e-13) and err < 1e-10
    v0, _ = m_alpha(CoefficientProfile(-2.0), include_zero_term=True)
    assert v0 == pytest.approx(0.5 * math.log(math.pi ** 4 / 90 + 1), rel=1e-13)
    with pytest.raises(ValueError):
        m_alpha(CoefficientProfile(-0.5))


def test_annulus_examples():
    assert weak_annulus(-math.inf, math.inf) == 1.0
    assert weak_annulus(0.0, math.inf) == 0.5
    ratio = lambda x: ((math.exp(x) * (x - 1) + 1) / x ** 2) / ((math.exp(x) - 1) / x)
    assert liquid_annulus(0.0, -1.0, 1.0) == pytest.approx(ratio(2) - ratio(-2), rel=1e-13)
    assert liquid_annulus(0.0, -1.0, 1.0) == pytest.approx(0.31, abs=0.01)
    assert annulus_limit(PhaseClass.WEAK_CRYSTALLINE, -1, 1) == pytest.approx(math.tanh(1))
    with pytest.raises(ValueError):
        weak_annulus(1.0, 1.0)
    with pytest.raises(ValueError):
        annulus_limit(PhaseClass.STRONG_CRYSTALLINE, -1, 1)


def test_strong_annulus_functional_in_unit_interval():
    prof = CoefficientProfile(-2.0)
    psis = 2 * np.pi * np.arange(512) / 512
    for s in range(10):
        p = sample_p_infty(prof, CoefficientLaw.isotropic(), 200, psis, SeedSpec(3, s))
        val = strong_annulus(np.abs(p) ** 2, -1.0, 1.0)
        assert 0.0 < val < 1.0
        # the full line captures one zero per unit of angle in the limit
        assert strong_annulus(np.abs(p) ** 2, -math.inf, math.inf) == 1.0


# --- crossover ----------------------------------------------------------------------------------

def test_crossover_shift_arithmetic():
    a = -0.5 + 1e-4
    L = math.log(1 / (2e-4))
    assert crossover_shift(a) == pytest.approx(0.5 * L + 0.5 * math.log(L), rel=1e-12)
    # 1/2 log 5000 + 1/2 log log 5000 = 5.3296 (the rounded figure 5.326 is off in the 3rd decimal)
    assert crossover_shift(a) == pytest.approx(5.3296, abs=1e-4)


@pytest.mark.parametrize("alpha", [-0.5, -0.3, 0.0, -0.5 + 0.2])
def test_crossover_shift_domain(alpha):
    with pytest.raises(ValueError):
        crossover_shift(alpha)


def test_crossover_error_decreasing():
    alphas = [-0.49, -0.499, -0.5 + 1e-4, -0.5 + 1e-9]
    errs = [crossover_error(a) for a in alphas]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert crossover_error(-0.5 + 1e-9) < crossover_error(-0.5 + 1e-4)


# --- self-inversive --------------------------------------------------------------------------------

def test_si_moments_m2():
    mom = si_moments(CoefficientProfile(0.0), 2)
    assert mom.g1 == 2.0 and mom.g2 == 2.5
    assert mom.u == pytest.approx(0.5) and mom.v == pytest.approx(2.5 / math.sqrt(5))
    assert mom.v_minus_u == pytest.approx(mom.v - mom.u, rel=1e-14)
    assert mom.d == pytest.approx(0.5 * (mom.v ** 2 - mom.u ** 2), rel=1e-14)


def test_si_fraction_m2_against_double_integral_and_mc():
    prof = CoefficientProfile(0.0)
    f1 = si_expected_fraction(prof, 2)
    assert f1 == pytest.approx(si_expected_fraction_double_integral(prof, 2), abs=1e-12)
    # icn:1 has E|xi|^2 = 1, i.e. variance 1/2 per real component
    f = si_expected_fraction(prof, 2, sigma2=0.5)
    counts = []
    for s in range(20000):
        k = sample_self_inversive(prof, CoefficientLaw.isotropic(), 2, SeedSpec(77, s))
        counts.append(count_on_unit_circle(polynomial_zeros(k)).nu / 5)
    counts = np.array(counts)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - f) < 4 * se
    assert abs(counts.mean() - f1) > 20 * se   # E|xi|^2 in place of the component variance is wrong


@pytest.mark.parametrize("alpha,m", [(-1.0, 3), (-0.5, 10), (0.0, 5)])
def test_si_fraction_component_variance_convention(alpha, m):
    prof = CoefficientProfile(alpha)
    c = np.array([count_on_unit_circle(polynomial_zeros(sample_self_inversive(
        prof, CoefficientLaw.isotropic(2.0), m, SeedSpec(5, s)))).nu for s in range(4000)]) / (2 * m + 1)
    se = c.std(ddof=1) / math.sqrt(c.size)
    assert abs(c.mean() - si_expected_fraction(prof, m, sigma2=2.0)) < 4 * se


def test_si_identity_u_equals_v():
    for u in (0.05, 0.5, 1.0, 3.0, 8.0):
        assert si_fraction_uv(u, u) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha,m", [(0.0, 7), (-0.3, 40), (-0.5, 120), (-1.0, 300), (-2.0, 25), (1.5, 500)])
def test_exact_vs_double_integral(alpha, m):
    prof = CoefficientProfile(alpha)
    assert si_expected_fraction(prof, m) == pytest.approx(si_expected_fraction_double_integral(prof, m), abs=1e-8)


def test_si_limits():
    assert si_expected_fraction(CoefficientProfile(0.0), 10**4) == pytest.approx(1 / math.sqrt(3), rel=0.05)
    vals = [si_expected_fraction(CoefficientProfile(-1.0), m) for m in (10, 100, 1000, 10**4)]
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] > 0.999
    for m in (3, 50, 1000):
        f = si_expected_fraction(CoefficientProfile(0.3), m)
        assert 0.0 < f <= 1.0
        assert si_deficit(CoefficientProfile(0.3), m) == pytest.approx(1 - f, rel=1e-9)


def test_si_epsilon_critical():
    m = 1000
    prof = CoefficientProfile(-0.5)
    h = math.fsum(1.0 / k for k in range(1, m + 1))
    assert si_epsilon(prof, m) == pytest.approx(0.75 / h, rel=1e-14)
    with pytest.raises(ValueError):
        si_epsilon(CoefficientProfile(0.0), m)


def test_si_alpha_minus_two_rate():
    prof = CoefficientProfile(-2.0)
    const = math.exp(-1 / (2 * tail_sum(prof, -4.0))) * tail_sum(prof, -3.0) / tail_sum(prof, -4.0)
    m = 10**5
    assert m * si_deficit(prof, m) == pytest.approx(const, rel=1e-3)


@pytest.mark.parametrize("alpha,tol", [(-0.5, 0.25), (-0.75, 0.10), (-1.0, 0.10), (-2.0, 0.10)])
def test_si_asymptotic_agreement(alpha, tol):
    prof = CoefficientProfile(alpha)
    m = 10**6
    assert si_deficit(prof, m) / (1 - si_fraction_asymptotic(prof, m)) == pytest.approx(1.0, rel=tol)


def test_g_ratio_limit_liquid():
    assert g_ratio(CoefficientProfile(0.0), 10**6) == pytest.approx(1 / math.sqrt(3), rel=1e-5)
    assert g_ratio_asymptotic(CoefficientProfile(0.5), 10) == pytest.approx(1 / math.sqrt(1.5 * 4))


@pytest.mark.parametrize("alpha", [0.0, -0.5, -0.75, -1.0, -2.0])
def test_g_ratio_cases(alpha):
    prof = CoefficientProfile(alpha)
    m = 10**6
    got, want = g_ratio(prof, m), g_ratio_asymptotic(prof, m)
    if alpha > -0.5:
        assert got == pytest.approx(want, rel=1e-5)
    else:
        assert (1 - got) == pytest.approx(1 - want, rel=0.10)


def test_circle_intensity_periodic_and_normalised():
    prof = CoefficientProfile(-0.7)
    m = 40
    per = math.pi / (m + 0.5)
    x = np.linspace(0, 1, 17)
    np.testing.assert_allclose(si_circle_intensity(prof, m, x), si_circle_intensity(prof, m, x + per),
                               rtol=1e-12, atol=1e-15)
    total = si_counting_measure(prof, m, 2 * math.pi) * (m + 0.5) / (2 * m + 1) * 2
    assert total == pytest.approx(si_expected_fraction(prof, m), abs=1e-6)


def test_circle_intensity_liquid_limit():
    m = 10**5
    phis = np.array([0.1, 0.5, 2.0]) + 0.5 * math.pi / (m + 0.5)
    vals = si_circle_intensity(CoefficientProfile(0.0), m, phis)
    # the phase-averaged density approaches (1/2 pi)/sqrt(3); sample a full period
    per = math.pi / (m + 0.5)
    grid = 0.3 + per * np.arange(256) / 256
    assert np.mean(si_circle_intensity(CoefficientProfile(0.0), m, grid)) * 2 == pytest.approx(
        1 / (2 * math.pi * math.sqrt(3)) * 2, rel=0.01)
    assert np.all(vals > 0)


def test_counting_measure_uniform_crystalline():
    m = 10**4
    val = si_counting_measure(CoefficientProfile(-2.0), m, math.pi / 2)
    # normalised by 2m+1, the arc [0, pi/2] holds a quarter of all zeros
    assert val * (m + 0.5) / (2 * m + 1) * 2 == pytest.approx(0.25, rel=0.01)


def test_predictions_csv():
    text = predictions_csv([("rho1", {"alpha": 0.0, "s": 1.0}, 0.5, 0.0)], ["alpha", "s"])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["quantity", "alpha", "s", "value", "uncertainty"]
    assert rows[1][0] == "rho1" and float(rows[1][3]) == 0.5
