import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from vlsf.errors import ConvergenceError, DomainError
from vlsf.linalg import (
    Ar1Covariance,
    InnovationFilter,
    SeqCholesky,
    ar1_eigenvalues,
    ar1_logdet,
    ar1_precision_quadform,
    dense_gaussian_logpdf,
    gauss_expectation,
    log_gauss_expectation,
    seq_gaussian_logpdf,
)

RHOS = [0.0, 0.3, 0.5, 0.9]


def cofactor_det3(a):
    return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))


class TestLogdet:
    def test_identity(self):
        assert ar1_logdet(5, 0.0) == 0.0

    def test_scalar(self):
        assert ar1_logdet(1, 0.9) == 0.0

    def test_three_by_three(self):
        dense = Ar1Covariance(3, 0.5).dense()
        expected = math.log(cofactor_det3(dense))
        assert expected == pytest.approx(2 * math.log(0.75), abs=1e-14)
        assert ar1_logdet(3, 0.5) == pytest.approx(expected, abs=1e-12)
        assert ar1_logdet(3, 0.5) == pytest.approx(-0.575364, abs=1e-6)

    @pytest.mark.parametrize("rho", RHOS)
    @pytest.mark.parametrize("n", range(1, 9))
    def test_matches_dense(self, n, rho):
        _, dense = np.linalg.slogdet(Ar1Covariance(n, rho).dense())
        assert abs(ar1_logdet(n, rho) - dense) < 1e-10

    @pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
    def test_rejects_bad_rho(self, rho):
        with pytest.raises(DomainError):
            ar1_logdet(3, rho)


class TestQuadform:
    def test_identity(self):
        assert ar1_precision_quadform(0.0, [1, 2, 3]) == pytest.approx(14.0)

    @pytest.mark.parametrize("v", [(1, 0), (1, 1)])
    def test_two_by_two(self, v):
        inv = np.linalg.inv(np.array([[1, 0.5], [0.5, 1]]))
        v = np.array(v, float)
        assert v @ inv @ v == pytest.approx(4 / 3)
        assert ar1_precision_quadform(0.5, v) == pytest.approx(4 / 3, rel=1e-12)

    def test_empty(self):
        with pytest.raises(DomainError):
            ar1_precision_quadform(0.3, [])

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from(RHOS), st.lists(st.floats(-5, 5), min_size=1, max_size=12))
    def test_matches_dense_inverse(self, rho, v):
        v = np.array(v)
        dense = v @ np.linalg.solve(Ar1Covariance(v.size, rho).dense(), v)
        assert ar1_precision_quadform(rho, v) == pytest.approx(dense, rel=1e-9, abs=1e-12)


class TestEigenvalues:
    def test_identity(self):
        np.testing.assert_allclose(ar1_eigenvalues(3, 0.0), [1, 1, 1])

    def test_two_by_two(self):
        np.testing.assert_allclose(ar1_eigenvalues(2, 0.5), [0.5, 1.5], rtol=1e-12)

    def test_trace(self):
        assert ar1_eigenvalues(50, 0.3).sum() == pytest.approx(50, abs=1e-9)

    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
    def test_spectral_bounds(self, rho):
        lam = ar1_eigenvalues(200, rho)
        assert lam.min() > (1 - rho) / (1 + rho)
        assert lam.max() < (1 + rho) / (1 - rho)

    @pytest.mark.parametrize("n", [3, 7, 20])
    def test_match_dense(self, n):
        dense = np.linalg.eigvalsh(Ar1Covariance(n, 0.6).dense())
        np.testing.assert_allclose(ar1_eigenvalues(n, 0.6), dense, rtol=1e-10)

    def test_mean_log_converges_to_logdet_rate(self):
        rho = 0.5
        gaps = [abs(np.log(ar1_eigenvalues(n, rho)).mean() - math.log(1 - rho**2)) for n in (10, 100, 1000)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-3

    def test_read_only(self):
        with pytest.raises(ValueError):
            ar1_eigenvalues(4, 0.3)[0] = 1.0

    def test_dense_cap(self):
        with pytest.raises(DomainError):
            Ar1Covariance(513, 0.3).dense()


def _phi_log(y, v):
    return -0.5 * (math.log(2 * math.pi * v) + y * y / v)


class TestSeqLogpdf:
    def test_zero_input_is_noise(self):
        y = np.array([0.3, -1.2, 2.0])
        out = seq_gaussian_logpdf(np.zeros(3), y, 0.7, 2.0)
        np.testing.assert_allclose(out, np.cumsum([_phi_log(v, 2.0) for v in y]), rtol=1e-12)

    def test_memoryless(self):
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=6) * 3, rng.normal(size=6) * 2
        expected = np.cumsum([_phi_log(b, 1.5 + a * a) for a, b in zip(x, y)])
        np.testing.assert_allclose(seq_gaussian_logpdf(x, y, 0.0, 1.5), expected, atol=1e-9)

    def test_dense_oracle(self):
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=4) * 2, rng.normal(size=4) * 3
        out = seq_gaussian_logpdf(x, y, 0.5, 1.0)
        for n in range(1, 5):
            assert out[n - 1] == pytest.approx(dense_gaussian_logpdf(x[:n], y[:n], 0.5, 1.0), abs=1e-9)

    def test_rejects_nonpositive_noise(self):
        with pytest.raises(DomainError):
            seq_gaussian_logpdf([0.0], [1.0], 0.3, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            seq_gaussian_logpdf([1.0, 2.0], [1.0], 0.3, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(RHOS), st.integers(1, 30))
    def test_prefix_consistency(self, seed, rho, n):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=n) * 5, rng.normal(size=n) * 5
        full = seq_gaussian_logpdf(x, y, rho, 1.0)
        k = int(rng.integers(1, n + 1))
        assert seq_gaussian_logpdf(x[:k], y[:k], rho, 1.0)[-1] == pytest.approx(full[k - 1], abs=1e-9)
        assert full[-1] == pytest.approx(dense_gaussian_logpdf(x, y, rho, 1.0), abs=1e-8)

    def test_batched_filter_matches_single(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(5, 12)) * 10, rng.normal(size=12) * 10
        filt = InnovationFilter(0.3, 1.0, 5)
        for k in range(12):
            filt.step(X[:, k], y[k])
        single = [seq_gaussian_logpdf(X[m], y, 0.3, 1.0)[-1] for m in range(5)]
        np.testing.assert_allclose(filt.logpdf, single, rtol=1e-13)


class TestSeqCholesky:
    def test_factor_reproduces_covariance(self):
        rng = np.random.default_rng(0)
        chol = SeqCholesky(0.5, 1.0, capacity=2)
        x, y = rng.normal(size=70) * 10, rng.normal(size=70)
        for k in range(70):
            chol.append(x[k], y[k])
            if k in (0, 1, 5, 69):
                L = chol.factor
                C = chol.covariance()
                assert np.max(np.abs(L @ L.T - C)) <= 1e-10 * np.max(np.abs(C))

    def test_logpdf_matches_filter(self):
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=25) * 10, rng.normal(size=25) * 10
        chol = SeqCholesky(0.3, 1.0)
        inc = [chol.append(a, b) for a, b in zip(x, y)]
        np.testing.assert_allclose(np.cumsum(inc), seq_gaussian_logpdf(x, y, 0.3, 1.0), atol=1e-9)


class TestGaussExpectation:
    def test_normalization(self):
        assert gauss_expectation(lambda h: np.ones_like(h), 3.0, 1e-10) == pytest.approx(1.0, abs=1e-12)

    def test_variance(self):
        assert gauss_expectation(lambda h: h * h, 1.0, 1e-10) == pytest.approx(1.0, abs=1e-12)

    def test_mgf(self):
        assert gauss_expectation(np.exp, 1.0, 1e-10) == pytest.approx(math.exp(0.5), rel=1e-10)
        assert math.exp(0.5) == pytest.approx(1.648721, abs=1e-6)

    @pytest.mark.parametrize("deg", [2, 4, 8, 16, 30])
    def test_polynomial_moments(self, deg):
        # E[h^(2k)] = sigma^(2k) (2k-1)!!
        sigma2 = 1.7
        exact = sigma2 ** (deg // 2) * math.prod(range(deg - 1, 0, -2))
        assert gauss_expectation(lambda h: h**deg, sigma2, 1e-12) == pytest.approx(exact, rel=1e-10)

    def test_convergence_error_carries_estimates(self):
        f = lambda h: 1.0 / (1e-4 + h * h)
        with pytest.raises(ConvergenceError) as err:
            gauss_expectation(f, 1.0, 1e-12)
        assert len(err.value.estimates) == 2

    def test_domain(self):
        with pytest.raises(DomainError):
            gauss_expectation(np.exp, 0.0)


class TestLogGaussExpectation:
    def test_near_singular_integrand(self):
        # E[1/(1 + 100 h^2)] under N(0, 1.5): hard for Gauss-Hermite, easy after sinh
        f = lambda h: 1.0 / (1 + 100 * h * h) * math.exp(-h * h / 3.0) / math.sqrt(3.0 * math.pi)
        ref = 2 * sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
                      for a, b in [(0, 0.1), (0.1, 1), (1, 20)])
        got = log_gauss_expectation(lambda h: -np.log1p(100 * h * h), 1.5, 0.1)
        assert math.exp(float(got)) == pytest.approx(ref, rel=1e-10)

    def test_batched_shape(self):
        y = np.array([[0.0, 1.0], [2.0, 3.0]])
        out = log_gauss_expectation(lambda h: -(y[..., None] ** 2) * h * h, 1.0, 1.0)
        assert out.shape == (2, 2)
        # E[exp(-a h^2)] = (1 + 2a)^(-1/2)
        np.testing.assert_allclose(out, -0.5 * np.log1p(2 * y * y), atol=1e-12)
