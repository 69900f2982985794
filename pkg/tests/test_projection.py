import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from qdsv.errors import NonFiniteIntegrand, SingularGram
from qdsv.mixture import Mixture, build_mixture
from qdsv.model import REFERENCE_PARAMS
from qdsv.polynomial import xy_moments
from qdsv.projection import (REGULARIZATION_LADDER, BivariateBasis, call_moments, call_payoff_vector,
                             gaussian_moments, generic_payoff_vector, gram_matrix, project, put_payoff_vector,
                             solve)
from qdsv.quadrature import hermite_rule


def recursion_moments(mu, var, n):
    out = [1.0, mu]
    for j in range(2, n + 1):
        out.append(mu * out[-1] + var * (j - 1) * out[-2])
    return np.array(out[: n + 1])


@pytest.fixture(scope="module")
def mix7():
    return build_mixture(REFERENCE_PARAMS, 1 / 12, d=1, K=15)


# -- Gaussian moments -----------------------------------------------------------

def test_gaussian_moment_examples():
    np.testing.assert_allclose(gaussian_moments(0.0, 1.0, 4), [1, 0, 1, 0, 3], atol=1e-14)
    assert gaussian_moments(1.0, 1.0, 3)[3] == pytest.approx(4.0, rel=1e-14)
    np.testing.assert_allclose(gaussian_moments(0.5, 0.04, 8), recursion_moments(0.5, 0.04, 8), rtol=1e-12)
    np.testing.assert_array_equal(gaussian_moments(0.3, 0.0, 3), [1.0, 0.3, 0.3**2, 0.3**3])


@given(st.floats(-2, 2), st.floats(1e-4, 2.0))
def test_gaussian_moments_against_recursion(mu, var):
    ref = recursion_moments(mu, var, 12)
    got = gaussian_moments(mu, var, 12)
    scale = recursion_moments(abs(mu), var, 12)  # bounds |E X^j| and absorbs cancellation
    assert np.all(np.abs(got - ref) <= 1e-12 * scale)


def test_gaussian_moments_rejects_negative_variance():
    with pytest.raises(ValueError):
        gaussian_moments(0.0, -1.0, 2)


# -- Gram matrix ----------------------------------------------------------------

def test_basis_structure():
    b = BivariateBasis.of_degree(3)
    assert len(b) == math.comb(5, 2)
    assert b.exponents[0] == (0, 0)
    with pytest.raises(ValueError):
        BivariateBasis.of_degree(-1)


def test_gram_constant_entry(mix7):
    D = gram_matrix(mix7, BivariateBasis.of_degree(3))
    assert D[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(D, D.T)


def test_gram_single_standard_component():
    one = Mixture(np.array([1.0]), np.array([0.0]), np.array([1.0]), np.array([0.0]))
    b = BivariateBasis.of_degree(3)
    D = gram_matrix(one, b)
    mom = [1, 0, 1, 0, 3, 0, 15]
    for i, (a1, b1) in enumerate(b.exponents):
        for j, (a2, b2) in enumerate(b.exponents):
            expected = mom[a1 + a2] if b1 + b2 == 0 else 0.0
            assert D[i, j] == pytest.approx(expected, abs=1e-13)


def test_gram_against_numerical_integration(mix7):
    b = BivariateBasis.of_degree(3)
    D = gram_matrix(mix7, b)
    ref = np.zeros_like(D)
    for w, m, v, y in zip(mix7.w, mix7.m, mix7.v, mix7.y):
        s = math.sqrt(v)
        for i, (a1, b1) in enumerate(b.exponents):
            for j, (a2, b2) in enumerate(b.exponents):
                val, _ = integrate.quad(lambda x: x ** (a1 + a2) * norm.pdf(x, m, s), m - 12 * s, m + 12 * s,
                                        epsabs=1e-15, epsrel=1e-12)
                ref[i, j] += w * y ** (b1 + b2) * val
    np.testing.assert_allclose(D, ref, atol=1e-8)


def test_gram_positive_semidefinite(mix7):
    D = gram_matrix(mix7, BivariateBasis.of_degree(10))
    eig = np.linalg.eigvalsh(D)
    assert eig.min() >= -1e-10 * np.linalg.norm(D, 2)


def test_gram_rejects_empty():
    empty = Mixture(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))
    with pytest.raises(ValueError):
        gram_matrix(empty, BivariateBasis.of_degree(1))


# -- call moments ---------------------------------------------------------------

def test_call_moment_examples():
    I = call_moments(0.0, 0.04, 1.0, 0)[0, 0]
    assert I == pytest.approx(math.exp(0.02) * norm.cdf(0.2) - 0.5, rel=1e-14)
    assert I == pytest.approx(0.0910, abs=5e-5)
    # vanishing strike: the payoff becomes e^x
    assert call_moments(0.1, 0.3, 1e-300, 0)[0, 0] == pytest.approx(math.exp(0.1 + 0.15), rel=1e-14)


def mp_call_moment(m, v, K, j):
    m, v, K = mpmath.mpf(m), mpmath.mpf(v), mpmath.mpf(K)
    s, lk = mpmath.sqrt(v), mpmath.log(K)
    f = lambda x: (mpmath.exp(x) - K) * x**j * mpmath.npdf(x, m, s)
    return mpmath.quad(f, [lk, lk + s, m + 3 * s, m + 15 * s])


def test_call_moments_against_high_precision():
    rng = np.random.default_rng(5)
    with mpmath.workdps(40):
        for _ in range(6):
            m, v, K = rng.uniform(-0.3, 0.3), rng.uniform(0.001, 0.1), math.exp(rng.uniform(-0.3, 0.3))
            I = call_moments(m, v, K, 10)[0]
            for j in (0, 1, 4, 7, 10):
                ref = float(mp_call_moment(m, v, K, j))
                assert I[j] == pytest.approx(ref, rel=1e-10, abs=1e-12 * max(1.0, abs(m) + 4 * math.sqrt(v)) ** j)


def test_call_payoff_vector_zero_variance_fallback():
    mix = build_mixture(REFERENCE_PARAMS.replace(rho=-1.0), 1 / 12, d=1, K=5)
    b = BivariateBasis.of_degree(2)
    f = call_payoff_vector(mix, b, 1.0)
    ref = np.zeros(len(b))
    for w, m, y in zip(mix.w, mix.m, mix.y):
        ref += w * math.exp(-y) * max(math.exp(m) - 1.0, 0.0) * np.array([m**a * y**bb for a, bb in b.exponents])
    np.testing.assert_allclose(f, ref, rtol=1e-14, atol=1e-18)


def test_call_payoff_rejects_bad_strike(mix7):
    with pytest.raises(ValueError):
        call_payoff_vector(mix7, BivariateBasis.of_degree(1), 0.0)


# -- generic and put payoffs --------------------------------------------------------

def test_generic_constant_payoff(mix7):
    b = BivariateBasis.of_degree(3)
    f = generic_payoff_vector(mix7, b, lambda s: np.ones_like(s))
    ref = np.zeros(len(b))
    for w, m, v, y in zip(mix7.w, mix7.m, mix7.v, mix7.y):
        g = gaussian_moments(m, v, 3)
        ref += w * math.exp(-y) * np.array([y**bb * g[a] for a, bb in b.exponents])
    np.testing.assert_allclose(f, ref, rtol=1e-12)


def test_generic_smooth_payoff_matches_closed_form(mix7):
    # F(s) = s^2: int e^{2x} x^j phi(x; m, v) dx = e^{2m + 2v} E[Y^j], Y ~ N(m + 2v, v)
    b = BivariateBasis.of_degree(10)
    f = generic_payoff_vector(mix7, b, lambda s: s * s, quad_order=100)
    integrals = np.stack([math.exp(2 * m + 2 * v) * gaussian_moments(m + 2 * v, v, 10)
                          for m, v in zip(mix7.m, mix7.v)])
    ref = np.array([np.sum(mix7.w * np.exp(-mix7.y) * mix7.y**bb * integrals[:, a]) for a, bb in b.exponents])
    np.testing.assert_allclose(f, ref, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("strike", [0.9, 1.0, 1.1])
def test_generic_call_close_to_closed_form(mix7, strike):
    # the kink limits Gauss-Hermite to algebraic convergence; agreement is loose but real
    b = BivariateBasis.of_degree(10)
    closed = call_payoff_vector(mix7, b, strike)
    generic = generic_payoff_vector(mix7, b, lambda s: np.maximum(s - strike, 0.0), quad_order=100)
    assert np.max(np.abs(generic - closed)) < 1e-4 * strike


def test_put_call_parity_on_constant(mix7):
    b = BivariateBasis.of_degree(4)
    K = 1.05
    diff = call_payoff_vector(mix7, b, K)[0] - put_payoff_vector(mix7, b, K)[0]
    ref = np.sum(mix7.w * np.exp(-mix7.y) * (np.exp(mix7.m + mix7.v / 2) - K))
    assert diff == pytest.approx(ref, rel=1e-13)


def test_put_vector_matches_generic(mix7):
    b = BivariateBasis.of_degree(6)
    closed = put_payoff_vector(mix7, b, 0.95)
    generic = generic_payoff_vector(mix7, b, lambda s: np.maximum(0.95 - s, 0.0), quad_order=150)
    assert np.max(np.abs(generic - closed)) < 1e-4


def test_generic_nonfinite_payoff(mix7):
    with pytest.raises(NonFiniteIntegrand):
        generic_payoff_vector(mix7, BivariateBasis.of_degree(1), lambda s: np.exp(np.exp(1000 * s)))


# -- solve --------------------------------------------------------------------------

def test_solve_identity():
    f = np.array([1.0, -2.0, 3.0])
    c, lam = solve(np.eye(3), f)
    np.testing.assert_array_equal(c, f)
    assert lam == 0.0


def test_solve_singular_escalates_and_fails():
    D = np.array([[1.0, 1.0], [1.0, 1.0]])
    c, lam = solve(D, np.array([1.0, 1.0]))
    assert lam in REGULARIZATION_LADDER[1:]
    with pytest.raises(SingularGram):
        solve(-np.eye(2), np.ones(2))


def test_polynomial_payoff_reproduced():
    rng = np.random.default_rng(2)
    mix = Mixture(np.full(6, 1 / 6), rng.normal(0, 0.1, 6), rng.uniform(0.01, 0.05, 6), np.zeros(6))
    b = BivariateBasis.of_degree(3)
    # F(e^x) = 1 - x + 2 x^3, and y = 0 removes the discount
    f = generic_payoff_vector(mix, b, lambda s: 1 - np.log(s) + 2 * np.log(s) ** 3, quad_order=40)
    c, _ = solve(gram_matrix(mix, b), f)
    coef = dict(zip(b.exponents, c))
    assert coef[(0, 0)] == pytest.approx(1.0, abs=1e-10)
    assert coef[(1, 0)] == pytest.approx(-1.0, abs=1e-10)
    assert coef[(3, 0)] == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("n", [2, 6, 10])
def test_residual_orthogonality(mix7, n):
    b = BivariateBasis.of_degree(n)
    sys_ = project(mix7, b, call_payoff_vector(mix7, b, 1.0))
    assert np.linalg.norm(sys_.D @ sys_.c - sys_.f) <= 1e-8 * np.linalg.norm(sys_.f)
    assert sys_.regularization == 0.0


def test_fit_improves_with_degree(mix7):
    # weighted residual = const - f.c, so f.c must be non-decreasing in n
    b = BivariateBasis.of_degree(10)
    D, f = gram_matrix(mix7, b), call_payoff_vector(mix7, b, 1.0)
    explained = []
    for n in range(11):
        N = (n + 1) * (n + 2) // 2
        c, _ = solve(D[:N, :N], f[:N])
        explained.append(f[:N] @ c)
    assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(explained, explained[1:]))


def test_solve_matches_qr_of_weighted_design():
    """Alternative factorization: QR of the explicit weighted design matrix."""
    T = 2 / 12
    mix = build_mixture(REFERENCE_PARAMS, T, d=1, K=15)
    b = BivariateBasis.of_degree(10)
    rule = hermite_rule(30)  # exact for x-degree up to 59
    x = mix.m[:, None] + np.sqrt(mix.v)[:, None] * rule.nodes[:, 0][None, :]
    wts = (mix.w[:, None] * rule.weights[None, :]).ravel()
    yy = np.repeat(mix.y, len(rule))
    A = b.evaluate(x.ravel(), yy) * np.sqrt(wts)[:, None]
    f = call_payoff_vector(mix, b, 1.0)
    # column scaling keeps R well conditioned; D = A^T A = R^T R
    scale = 1 / np.linalg.norm(A, axis=0)
    _, R = np.linalg.qr(A * scale)
    z = np.linalg.solve(R.T, f * scale)
    c_qr = np.linalg.solve(R, z) * scale
    c, _ = solve(gram_matrix(mix, b), f)
    mu = xy_moments(REFERENCE_PARAMS, 10, T)
    assert c @ mu == pytest.approx(c_qr @ mu, rel=1e-6)
    fitted, fitted_qr = A @ c, A @ c_qr
    assert np.linalg.norm(fitted - fitted_qr) <= 1e-6 * np.linalg.norm(fitted_qr)
