"""Tests of the heavy-tailed simulators against their closed-form oracles."""

import math

import numpy as np
import pytest
from scipy import stats

from stablesums import models
from stablesums.errors import PreconditionError


def frechet_cdf(x, alpha):
    return np.exp(-np.asarray(x, dtype=float) ** -alpha)


def burr_cdf(x, c, kappa):
    return 1.0 - (1.0 + np.asarray(x, dtype=float) ** c) ** -kappa


class TestSpecValidation:
    def test_burr_alpha_is_product(self):
        spec = models.ModelSpec(kind="burr", c=2.0, kappa=2.0)
        assert spec.alpha == 4.0

    def test_scalar_lam_broadcast(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5,
                                tau=0.5, d=3)
        assert spec.lam == (0.5, 0.5, 0.5)

    def test_rejections(self):
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="mystery")
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="burr", c=2.0)
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="armax", alpha=4.0, lam=1.0)
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5, tau=0.5, d=1)
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5, tau=1.5, d=2)
        with pytest.raises(PreconditionError):
            models.ModelSpec(kind="frechet", alpha=4.0, d=2)


class TestMarginals:
    def test_frechet(self):
        spec = models.ModelSpec(kind="frechet", alpha=4.0)
        x = models.simulate(spec, 20000, seed=1).values[:, 0]
        res = stats.kstest(x, lambda v: frechet_cdf(v, 4.0))
        assert res.pvalue > 0.01

    def test_burr(self):
        spec = models.ModelSpec(kind="burr", c=2.0, kappa=2.0)
        x = models.simulate(spec, 20000, seed=2).values[:, 0]
        res = stats.kstest(x, lambda v: burr_cdf(v, 2.0, 2.0))
        assert res.pvalue > 0.01

    def test_armax_stationary_marginal(self):
        # the ARMAX recursion preserves the unit-Frechet marginal
        spec = models.ModelSpec(kind="armax", alpha=4.0, lam=0.7)
        x = models.simulate(spec, 20000, seed=3).values[:, 0]
        res = stats.kstest(x, lambda v: frechet_cdf(v, 4.0))
        assert res.pvalue > 0.01

    def test_marmax_coordinate_marginals(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=(0.5, 0.7),
                                tau=0.5, d=2)
        s = models.simulate(spec, 20000, seed=4)
        for j in range(2):
            res = stats.kstest(s.coordinate(j), lambda v: frechet_cdf(v, 4.0))
            assert res.pvalue > 0.01


class TestDependence:
    def test_armax_recursion_holds(self):
        spec = models.ModelSpec(kind="armax", alpha=4.0, lam=0.7)
        x = models.simulate(spec, 500, seed=5).values[:, 0]
        # every step is at least the decayed previous value
        assert np.all(x[1:] >= 0.7 * x[:-1] - 1e-12)

    def test_marmax_tau_one_independent(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=(0.0, 0.0),
                                tau=1.0, d=2)
        s = models.simulate(spec, 100000, seed=6)
        u = s.values > np.quantile(s.values, 0.95, axis=0)
        joint = np.mean(u[:, 0] & u[:, 1])
        assert joint == pytest.approx(0.05 * 0.05, abs=0.002)

    def test_marmax_pairwise_tail_dependence(self):
        # P(X(2) > u | X(1) > u) -> 2 - 2^tau at extreme levels
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=(0.0, 0.0),
                                tau=0.5, d=2)
        s = models.simulate(spec, 200000, seed=7)
        q = np.quantile(s.values, 0.995, axis=0)
        u = s.values > q
        dep = np.mean(u[:, 0] & u[:, 1]) / np.mean(u[:, 0])
        assert dep == pytest.approx(2.0 - 2.0 ** 0.5, abs=0.05)


class TestOracle:
    def test_frechet_quantile_value(self):
        # (-ln(1 - 1/5000))^{-1/4}, the 50y/100-obs return level
        fact = models.oracle(models.ModelSpec(kind="frechet", alpha=4.0))
        assert fact.true_quantile(1.0 - 1.0 / 5000.0) == pytest.approx(
            (-math.log1p(-1.0 / 5000.0)) ** -0.25, abs=1e-12)
        assert fact.true_quantile(1.0 - 1.0 / 5000.0) == pytest.approx(
            8.40875, abs=1e-5)
        assert fact.extremal_index == 1.0

    def test_burr_quantile_value(self):
        fact = models.oracle(models.ModelSpec(kind="burr", c=2.0, kappa=2.0))
        # ((1/p)^{1/kappa} - 1)^{1/c} at p = 1/5000
        assert fact.true_quantile(1.0 - 1.0 / 5000.0) == pytest.approx(
            ((5000.0 ** 0.5) - 1.0) ** 0.5, abs=1e-9)

    def test_armax_extremal_index(self):
        fact = models.oracle(models.ModelSpec(kind="armax", alpha=4.0, lam=0.7))
        assert fact.extremal_index == pytest.approx(1.0 - 0.7 ** 4, abs=1e-12)

    def test_marmax_m_and_tail_dep(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5,
                                tau=0.5, d=3)
        fact = models.oracle(spec)
        np.testing.assert_allclose(fact.m_theoretical,
                                   np.full(3, 3.0 ** -0.5), atol=1e-12)
        assert fact.pairwise_tail_dep == pytest.approx(2.0 - 2.0 ** 0.5)

    def test_quantile_is_monotone(self):
        fact = models.oracle(models.ModelSpec(kind="frechet", alpha=4.0))
        ps = np.array([0.9, 0.99, 0.999])
        assert np.all(np.diff(fact.true_quantile(ps)) > 0.0)


class TestDeterminism:
    @pytest.mark.parametrize("spec", [
        models.ModelSpec(kind="frechet", alpha=4.0),
        models.ModelSpec(kind="burr", c=2.0, kappa=2.0),
        models.ModelSpec(kind="armax", alpha=4.0, lam=0.7),
        models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5, tau=0.5, d=3),
    ])
    def test_same_seed_same_path(self, spec):
        a = models.simulate(spec, 200, seed=42).values
        b = models.simulate(spec, 200, seed=42).values
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        spec = models.ModelSpec(kind="frechet", alpha=4.0)
        a = models.simulate(spec, 200, seed=1).values
        b = models.simulate(spec, 200, seed=2).values
        assert not np.array_equal(a, b)
