import math

import mpmath
import numpy as np
import pytest
from scipy import special, stats

from noma_accuracy.errors import ConvergenceError, DomainError, EvaluationError, ParameterError
from noma_accuracy.numerics import (
    Estimate,
    FadingModel,
    alternating_series_sum,
    gauss_legendre_unit,
    hyp2f1,
    incomplete_beta,
    ln_gamma,
    sample_gamma,
    sample_gamma_array,
    tensor_integrate,
)


# --- quadrature -------------------------------------------------------------


def test_one_point_rule_is_midpoint():
    rule = gauss_legendre_unit(1)
    assert rule.nodes.tolist() == [0.5]
    assert rule.weights.tolist() == [1.0]


def test_two_point_rule_nodes():
    rule = gauss_legendre_unit(2)
    expected = [(1 - 1 / math.sqrt(3)) / 2, (1 + 1 / math.sqrt(3)) / 2]
    assert np.allclose(rule.nodes, expected, atol=1e-15)
    assert np.allclose(rule.weights, [0.5, 0.5], atol=1e-15)
    assert abs(np.dot(rule.weights, rule.nodes**3) - 0.25) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 20, 30, 64, 128])
def test_rule_invariants_and_exactness(n):
    rule = gauss_legendre_unit(n)
    assert rule.order == n
    assert abs(rule.weights.sum() - 1.0) < 1e-12
    assert np.all(np.diff(rule.nodes) > 0)
    assert rule.nodes[0] > 0 and rule.nodes[-1] < 1
    assert np.all(rule.weights > 0)
    for k in range(2 * n):
        exact = 1.0 / (k + 1)
        assert abs(np.dot(rule.weights, rule.nodes**k) - exact) <= 1e-10 * exact


def test_rule_matches_numpy_legendre():
    x, w = np.polynomial.legendre.leggauss(30)
    rule = gauss_legendre_unit(30)
    assert np.allclose(rule.nodes, (x + 1) / 2, atol=1e-14)
    assert np.allclose(rule.weights, w / 2, atol=1e-14)


def test_thirty_point_rule_integrates_x59():
    rule = gauss_legendre_unit(30)
    assert abs(np.dot(rule.weights, rule.nodes**59) - 1 / 60) < 1e-10


@pytest.mark.parametrize("n", [0, 129, -3, 2.5])
def test_rule_order_out_of_range(n):
    with pytest.raises(ParameterError):
        gauss_legendre_unit(n)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_tensor_integrate_constant(d):
    rule = gauss_legendre_unit(7)
    assert abs(tensor_integrate(lambda *xs: np.ones_like(xs[0]), d, rule) - 1.0) < 1e-13


def test_tensor_integrate_separable_product():
    rule = gauss_legendre_unit(30)
    assert abs(tensor_integrate(lambda x, y: x * y, 2, rule) - 0.25) < 1e-14


def test_tensor_integrate_matches_scipy_nquad():
    from scipy import integrate

    def f(x, y, z):
        return np.exp(-x * y) * np.cos(z + x)

    rule = gauss_legendre_unit(20)
    ref, _ = integrate.nquad(lambda x, y, z: float(f(x, y, z)), [[0, 1]] * 3)
    assert abs(tensor_integrate(f, 3, rule) - ref) < 1e-10


def test_tensor_integrate_reports_bad_node():
    rule = gauss_legendre_unit(4)
    with pytest.raises(EvaluationError) as info:
        tensor_integrate(lambda x, y: np.where(x > 0.9, np.nan, x + y), 2, rule)
    assert info.value.node is not None
    assert info.value.node[0] > 0.9


def test_tensor_integrate_dimension_checked():
    with pytest.raises(ParameterError):
        tensor_integrate(lambda x: x, 0, gauss_legendre_unit(3))


def test_tensor_integrate_mcp_three_user_integrand():
    # the two-dimensional random-selection integrand for a disk cluster
    alpha = 4.0

    def f(u1, u2):
        return 8 * u1 * u2**3 / ((1 + u1**alpha) * (1 + u2**alpha + (u1 * u2) ** alpha))

    value = tensor_integrate(f, 2, gauss_legendre_unit(30))
    # independent value from the permutation-free MC oracle (10^6 samples gives 0.5094)
    assert abs(value - 0.50939) < 0.005


# --- special functions ------------------------------------------------------


@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (0.5, math.log(math.sqrt(math.pi))), (6.0, math.log(120.0))])
def test_ln_gamma_spot_values(x, expected):
    assert abs(ln_gamma(x) - expected) <= 1e-12 * max(1.0, abs(expected))


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.7, 2.5, 17.3, 150.0])
def test_ln_gamma_against_mpmath(x):
    ref = float(mpmath.loggamma(x))
    assert abs(ln_gamma(x) - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("nan")])
def test_ln_gamma_domain(x):
    with pytest.raises(DomainError):
        ln_gamma(x)


@pytest.mark.parametrize("x, p, q", [(0.3, 2.0, 3.0), (0.9, 0.5, 0.5), (0.01, 4.0, 1.5), (0.5, 8.0, 8.0), (0.999, 1.0, 7.0)])
def test_incomplete_beta_against_scipy(x, p, q):
    reg = incomplete_beta(x, p, q, regularized=True)
    assert abs(reg - special.betainc(p, q, x)) < 1e-12
    full = incomplete_beta(x, p, q)
    assert abs(full - special.betainc(p, q, x) * special.beta(p, q)) < 1e-12 * max(1.0, special.beta(p, q))


def test_hyp2f1_at_zero():
    assert hyp2f1(1.3, 2.2, 3.1, 0.0) == 1.0


def test_hyp2f1_log_identity():
    assert abs(hyp2f1(1, 1, 2, 0.5) - 2 * math.log(2)) < 1e-12


def test_hyp2f1_series_oracle():
    # direct term-by-term sum in exact rationals
    from fractions import Fraction

    total, term = Fraction(0), Fraction(1)
    for k in range(200):
        total += term
        term *= Fraction(2 + k) * Fraction(1 + k) / (Fraction(4 + k) * (k + 1)) * Fraction(1, 2)
    assert abs(hyp2f1(2, 1, 4, 0.5) - float(total)) < 1e-12
    assert abs(hyp2f1(2, 1, 4, 0.5) - 1.36446766656131) < 1e-12


@pytest.mark.parametrize(
    "a, b, c, z",
    [
        (2.0, 1.0, 4.0, -0.3),
        (1.5, 0.5, 2.5, -3.0),
        (4.0, 2.0, 3.0, -9.5),
        (2.0, 1.0, 6.0, -40.0),
        (1.0, 2.0, 3.0, 0.45),
        (3.2, 0.7, 1.9, -0.7),
    ],
)
def test_hyp2f1_against_mpmath(a, b, c, z):
    ref = float(mpmath.hyp2f1(a, b, c, z))
    assert abs(hyp2f1(a, b, c, z) - ref) <= 1e-10 * max(1.0, abs(ref))


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0, 8.0])
@pytest.mark.parametrize("alpha", [2.5, 4.0, 8.0])
@pytest.mark.parametrize("u", [1e-3, 0.05, 0.3, 0.99])
def test_hyp2f1_nakagami_kernel_range(m, alpha, u):
    # the Nakagami two-user integrand uses 2F1(2m, m; m+1; -u^-alpha)
    z = -(u ** -alpha)
    ref = float(mpmath.hyp2f1(2 * m, m, m + 1, z))
    got = hyp2f1(2 * m, m, m + 1, z)
    assert abs(got - ref) <= 1e-10 + 1e-9 * abs(ref)


@pytest.mark.parametrize("z", np.linspace(-0.5, 0.4, 10))
def test_hyp2f1_series_and_pfaff_agree(z):
    a, b, c = 1.7, 0.6, 2.9
    pfaff = (1 - z) ** (-b) * hyp2f1(c - a, b, c, z / (z - 1))
    assert abs(hyp2f1(a, b, c, z) - pfaff) < 1e-9


def test_hyp2f1_rejects_large_z_and_bad_c():
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 2, 0.9)
    with pytest.raises(DomainError):
        hyp2f1(1, 1, -2, 0.1)


# --- alternating series -----------------------------------------------------


def test_alternating_harmonic():
    est = alternating_series_sum(lambda k: (-1) ** k / (1 + k), tol=1e-10)
    assert isinstance(est, Estimate)
    assert abs(est.value - math.log(2)) < 1e-10
    assert est.error_bound <= 1e-10


def test_leibniz_series():
    est = alternating_series_sum(lambda k: (-1) ** k * 2 / (2 + 4 * k), tol=1e-10)
    assert abs(est.value - math.pi / 4) < 1e-10


def test_zero_series():
    est = alternating_series_sum(lambda k: 0.0, tol=1e-8)
    assert est.value == 0.0


@pytest.mark.parametrize("alpha", [2.2, 3.0, 4.0, 6.5])
def test_series_bound_holds_against_tighter_rerun(alpha):
    def term(k):
        return (-1) ** k * 2 / (2 + alpha * k)

    loose = alternating_series_sum(term, tol=1e-7)
    tight = alternating_series_sum(term, tol=1e-8)
    assert abs(loose.value - tight.value) <= loose.error_bound + tight.error_bound
    assert abs(loose.value - float(mpmath.nsum(lambda k: (-1) ** k * 2 / (2 + alpha * k), [0, mpmath.inf]))) <= 1e-7


def test_series_tolerance_must_be_positive():
    with pytest.raises(ParameterError):
        alternating_series_sum(lambda k: (-1) ** k / (k + 1), tol=0)


def test_series_nonconvergence_raises():
    # magnitudes 1, 2, 1, 2, ... never decay, so no transform level settles
    with pytest.raises(ConvergenceError):
        alternating_series_sum(lambda k: (-1) ** k * (1 + k % 2), tol=1e-12)


# --- fading and gamma sampling ----------------------------------------------


def test_fading_validation():
    with pytest.raises(ParameterError):
        FadingModel(0.4)
    with pytest.raises(ParameterError):
        FadingModel(1.0, 0.0)
    assert FadingModel().is_rayleigh
    assert not FadingModel(2.0).is_rayleigh


def test_rayleigh_gain_mean():
    g = sample_gamma_array(FadingModel(1.0, 1.0), 10**6, np.random.default_rng(1))
    assert np.all(g > 0)
    assert abs(g.mean() - 1.0) < 0.003


def test_nakagami_two_variance():
    g = sample_gamma_array(FadingModel(2.0, 1.0), 10**6, np.random.default_rng(2))
    assert abs(g.var() - 0.5) < 0.005


def test_small_shape_mean_is_omega():
    g = sample_gamma_array(FadingModel(0.5, 3.0), 10**6, np.random.default_rng(3))
    assert abs(g.mean() - 3.0) < 0.02


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0])
def test_gamma_sampler_ks(m):
    g = sample_gamma_array(FadingModel(m, 1.7), 10**5, np.random.default_rng(int(m * 10)))
    stat = stats.kstest(g, stats.gamma(a=m, scale=1.7 / m).cdf).statistic
    # 1% critical value of the one-sample KS statistic
    assert stat < 1.63 / math.sqrt(len(g))


def test_sample_gamma_scalar_and_shape():
    rng = np.random.default_rng(0)
    assert sample_gamma(FadingModel(1.5), rng) > 0
    assert sample_gamma_array(FadingModel(1.5), (3, 4), rng).shape == (3, 4)


def test_estimate_rejects_bad_bound():
    with pytest.raises(ArithmeticError):
        Estimate(0.5, float("nan"), "series")
