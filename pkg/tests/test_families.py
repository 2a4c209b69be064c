import math

import numpy as np
import pytest

from wsbmtest.errors import DomainError
from wsbmtest.families import (ExpFamilyModel, MomentFamily, _numeric_grad, _numeric_hess,
                               builtin_exponential, builtin_gamma_shape3, builtin_normal_natural,
                               get_family, make_perturbed_params, moment_to_gamma,
                               moment_to_mixture_exp, normal_natural_params, sample_weight)
from wsbmtest.rng import stream

BUILTINS = [(builtin_exponential, [0.5]), (builtin_exponential, [2.0]),
            (builtin_gamma_shape3, [1.0]), (builtin_gamma_shape3, [0.3]),
            (builtin_normal_natural, [0.0, -0.5]), (builtin_normal_natural, [1.5, -0.2])]


def rel_err(a, b):
    return np.max(np.abs(np.asarray(a) - b)) / max(1.0, np.max(np.abs(b)))


class TestBuiltinDerivatives:
    def test_exponential(self):
        fam = builtin_exponential()
        assert fam.d2psi([2.0])[0, 0] == pytest.approx(0.25)
        assert fam.dpsi([2.0])[0] == pytest.approx(-0.5)   # E[T] = E[-X] = -1/theta

    def test_normal_hessian_at_standard(self):
        h = builtin_normal_natural().d2psi(normal_natural_params(0.0, 1.0))
        assert np.allclose(h, [[1.0, 0.0], [0.0, 2.0]], atol=1e-14)

    def test_gamma_fourth_derivative(self):
        # psi = -3 log(tau): psi'' = 3/tau^2, psi'''' = +18/tau^4
        fam = builtin_gamma_shape3()
        tau = 1.7
        c = fam.taylor([tau], [1.0], 4)
        assert 2 * c[2] == pytest.approx(3 / tau**2, rel=1e-14)
        assert 24 * c[4] == pytest.approx(18 / tau**4, rel=1e-14)

    @pytest.mark.parametrize("factory,theta", BUILTINS)
    def test_finite_differences(self, factory, theta):
        fam = factory()
        theta = np.array(theta)
        assert rel_err(fam.dpsi(theta), _numeric_grad(fam.log_partition, theta, 1e-4)) < 1e-6
        assert rel_err(fam.d2psi(theta), _numeric_hess(fam.log_partition, theta, 1e-4)) < 1e-5

    @pytest.mark.parametrize("factory,theta", BUILTINS)
    def test_taylor_matches_numeric_fallback(self, factory, theta):
        fam = factory()
        generic = ExpFamilyModel(fam.name, fam.dim, fam.suff_stats, fam.log_partition, fam.in_domain)
        u = np.linspace(0.3, -0.2, fam.dim) * np.abs(theta).max()
        exact = fam.taylor(theta, u)
        numeric = generic.taylor(theta, u)
        assert np.allclose(numeric, exact, rtol=2e-5, atol=1e-9 * np.abs(exact).max())

    def test_numeric_fallback_derivatives(self):
        fam = builtin_normal_natural()
        generic = ExpFamilyModel("n", 2, fam.suff_stats, fam.log_partition, fam.in_domain)
        theta = np.array([0.4, -0.7])
        assert rel_err(generic.d2psi(theta), fam.d2psi(theta)) < 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            builtin_exponential().psi([-1.0])
        with pytest.raises(DomainError):
            builtin_normal_natural().psi([0.0, 0.5])
        with pytest.raises(ValueError):
            builtin_exponential().psi([1.0, 2.0])
        with pytest.raises(ValueError):
            get_family("cauchy")


class TestSufficientStatistics:
    @pytest.mark.parametrize("factory,theta", BUILTINS)
    def test_moments_of_T(self, factory, theta):
        fam = factory()
        draws = 10**6
        t = fam.T(fam.sample(theta, stream(2024, len(theta)), size=draws))
        mean = t.mean(axis=0)
        se = t.std(axis=0, ddof=1) / math.sqrt(draws)
        assert np.all(np.abs(mean - fam.dpsi(theta)) < 4 * se)
        cov = np.atleast_2d(np.cov(t.T))
        h = fam.d2psi(theta)
        mask = np.abs(h) > 1e-12
        assert np.all(np.abs(cov[mask] / h[mask] - 1) < 0.05)

    def test_density_normalizes(self):
        from scipy.integrate import quad
        for fam, theta in ((builtin_exponential(), [1.3]), (builtin_gamma_shape3(), [0.8])):
            total = quad(lambda x: fam.density(np.array([x]), theta)[0], 0, np.inf)[0]
            assert total == pytest.approx(1.0, abs=1e-10)


class TestPerturbation:
    def test_null(self):
        p = make_perturbed_params([1.0], [0.0], 100)
        assert p.theta1[0] == p.theta2[0] == 1.0

    def test_values(self):
        p = make_perturbed_params([1.0], [1.0], 100)
        assert p.theta1[0] == pytest.approx(0.9) and p.theta2[0] == pytest.approx(1.1)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            make_perturbed_params([1.0], [11.0], 100)
        with pytest.raises(DomainError):
            make_perturbed_params([0.0, -0.5], [0.0, 30.0], 100, builtin_normal_natural())

    @pytest.mark.parametrize("tau,d,n", [(0.7, 0.3, 37), (1.9, 2.1, 1000), (3.3, 0.01, 5)])
    def test_midpoint(self, tau, d, n):
        p = make_perturbed_params([tau], [d], n)
        assert abs((p.theta1[0] + p.theta2[0]) / 2 - tau) <= math.ulp(tau)


class TestMomentFamilies:
    def test_gamma(self):
        shape, scale = moment_to_gamma(4, 28)
        assert shape == pytest.approx(4 / 3) and scale == pytest.approx(3)
        assert moment_to_gamma(1, 2) == pytest.approx((1, 1))
        with pytest.raises(DomainError):
            moment_to_gamma(2, 4)

    def test_mixture(self):
        l1, l2 = moment_to_mixture_exp(3.6, 36)
        assert l1 == pytest.approx(0.171086, abs=1e-6) and l2 == pytest.approx(0.738005, abs=1e-6)
        assert 0.5 / l1 + 0.5 / l2 == pytest.approx(3.6, rel=1e-12)
        assert 1 / l1**2 + 1 / l2**2 == pytest.approx(36, rel=1e-12)
        with pytest.raises(DomainError):
            moment_to_mixture_exp(1, 1.9)

    def test_validity(self):
        assert MomentFamily("normal").is_valid(0, 1)
        assert not MomentFamily("normal").is_valid(1, 1)
        assert not MomentFamily("mixture").is_valid(1, 1)
        with pytest.raises(ValueError):
            MomentFamily("beta")

    def test_sampler_moments(self):
        rng = stream(1, 0)
        x = sample_weight(builtin_exponential(), [1.0], rng, 10**6)
        assert abs(x.mean() - 1.0) < 0.01
        x = MomentFamily("gamma").sample(4, 28, rng, 10**6)
        assert abs(x.mean() - 4.0) < 0.04 and abs((x * x).mean() - 28.0) < 0.5
        x = MomentFamily("mixture").sample(3.6, 36, rng, 10**6)
        assert abs(x.mean() - 3.6) < 0.04 and abs((x * x).mean() - 36.0) < 0.8
        x = MomentFamily("normal").sample(0.5, 1.25, rng, 10**6)
        assert abs(x.mean() - 0.5) < 0.01 and abs(x.var() - 1.0) < 0.01

    def test_reproducible(self):
        a = MomentFamily("gamma").sample(4, 28, stream(9, 3), 50)
        b = MomentFamily("gamma").sample(4, 28, stream(9, 3), 50)
        assert np.array_equal(a, b)
