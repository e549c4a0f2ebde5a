"""Tests of block sums, the gated return-level estimator and diagnostics."""

import numpy as np
import pytest

from stablesums import blocksums, dist, models
from stablesums.errors import PreconditionError
from stablesums.series import MultiSeries


@pytest.fixture(scope="module")
def armax_series():
    spec = models.ModelSpec(kind="armax", alpha=4.0, lam=0.5)
    return models.simulate(spec, 4000, seed=17)


@pytest.fixture(scope="module")
def armax_alpha():
    return 4.0  # oracle value; tail estimation is exercised elsewhere


class TestBlockSums:
    def test_tiny_example_exact(self):
        # norms 1,2,3,4,5; b=2, p=2: sums 1+4, 9+16; the 5 is discarded
        s = MultiSeries(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        out = blocksums.block_sums(s, 2, 2.0)
        np.testing.assert_allclose(out.sums, [5.0, 25.0])
        assert out.discarded == 1
        assert out.n_used == 4

    def test_multivariate_uses_sup_norm(self):
        v = np.array([[1.0, 3.0], [2.0, 1.0], [4.0, 0.0], [1.0, 1.0]])
        out = blocksums.block_sums(MultiSeries(v), 2, 1.0)
        np.testing.assert_allclose(out.sums, [5.0, 5.0])

    def test_scale_equivariance(self):
        # sums of (c X) with power p are c^p times sums of X
        rng = np.random.default_rng(0)
        x = rng.uniform(1.0, 2.0, size=120)
        base = blocksums.block_sums(x, 10, 4.0).sums
        scaled = blocksums.block_sums(3.0 * x, 10, 4.0).sums
        np.testing.assert_allclose(scaled, 3.0 ** 4.0 * base, rtol=1e-12)

    def test_coordinate_permutation_invariance(self):
        # the sup norm ignores coordinate order
        rng = np.random.default_rng(1)
        v = rng.uniform(size=(100, 3))
        a = blocksums.block_sums(MultiSeries(v), 10, 4.0).sums
        b = blocksums.block_sums(MultiSeries(v[:, [2, 0, 1]]), 10, 4.0).sums
        np.testing.assert_array_equal(a, b)

    def test_preconditions(self):
        s = MultiSeries(np.arange(1.0, 11.0))
        with pytest.raises(PreconditionError):
            blocksums.block_sums(s, 0, 1.0)
        with pytest.raises(PreconditionError):
            blocksums.block_sums(s, 11, 1.0)
        with pytest.raises(PreconditionError):
            blocksums.block_sums(s, 2, -1.0)


class TestQuantileLevels:
    def test_formula(self):
        # (1 - 1/(T m))^b
        levels = blocksums._quantile_levels(64, 5000.0, np.array([1.0, 0.5]))
        np.testing.assert_allclose(
            levels, [(1.0 - 1.0 / 5000.0) ** 64, (1.0 - 1.0 / 2500.0) ** 64],
            rtol=1e-14)

    def test_rejects_tiny_period(self):
        with pytest.raises(PreconditionError):
            blocksums._quantile_levels(10, 5.0, np.array([0.1]))


class TestEstimate:
    def test_accepted_estimate_and_ci(self, armax_series, armax_alpha):
        est = blocksums.estimate_return_levels(
            armax_series, 64, armax_alpha, None, 5000.0, R=40, seed=2)
        assert est.accepted
        assert est.z.shape == (1,)
        assert est.ci_low[0] < est.z[0] < est.ci_high[0]
        assert not est.lrt.reject_at_05

    def test_seed_determinism(self, armax_series, armax_alpha):
        a = blocksums.estimate_return_levels(
            armax_series, 64, armax_alpha, None, 5000.0, R=25, seed=9)
        b = blocksums.estimate_return_levels(
            armax_series, 64, armax_alpha, None, 5000.0, R=25, seed=9)
        np.testing.assert_array_equal(a.ci_low, b.ci_low)
        np.testing.assert_array_equal(a.ci_high, b.ci_high)

    def test_scale_equivariance_of_z(self, armax_series, armax_alpha):
        # scaling the data by c scales the return level by c
        est1 = blocksums.estimate_return_levels(
            armax_series, 64, armax_alpha, None, 5000.0, with_bootstrap=False)
        scaled = MultiSeries(2.0 * armax_series.values)
        est2 = blocksums.estimate_return_levels(
            scaled, 64, armax_alpha, None, 5000.0, with_bootstrap=False)
        assert est2.z[0] == pytest.approx(2.0 * est1.z[0], rel=5e-3)

    def test_rejection_returns_no_estimate(self):
        # uniform data: block sums are near-Gaussian, a = 1 is rejected
        rng = np.random.default_rng(3)
        s = MultiSeries(rng.uniform(1.0, 2.0, size=4000))
        est = blocksums.estimate_return_levels(
            s, 64, 4.0, None, 5000.0, with_bootstrap=False)
        assert not est.accepted
        assert est.z is None and est.ci_low is None

    def test_to_dict_roundtrips_json(self, armax_series, armax_alpha):
        import json
        est = blocksums.estimate_return_levels(
            armax_series, 64, armax_alpha, None, 5000.0, with_bootstrap=False)
        text = json.dumps(est.to_dict())
        assert json.loads(text)["accepted"] is est.accepted

    def test_m_vector_length_checked(self, armax_series):
        with pytest.raises(PreconditionError):
            blocksums.estimate_return_levels(
                armax_series, 64, 4.0, np.array([0.5, 0.5]), 5000.0,
                with_bootstrap=False)


class TestPermutationEquivariance:
    def test_return_levels_permute_with_coordinates(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=(0.3, 0.6, 0.0),
                                tau=0.5, d=3)
        s = models.simulate(spec, 4000, seed=23)
        m = np.array([0.5, 0.6, 0.7])
        est = blocksums.estimate_return_levels(
            s, 64, 4.0, m, 5000.0, with_bootstrap=False)
        perm = [2, 0, 1]
        s_p = MultiSeries(s.values[:, perm])
        est_p = blocksums.estimate_return_levels(
            s_p, 64, 4.0, m[perm], 5000.0, with_bootstrap=False)
        assert est.accepted and est_p.accepted
        np.testing.assert_allclose(est_p.z, est.z[perm], rtol=1e-10)


class TestSelection:
    def test_policies_on_armax(self, armax_series, armax_alpha):
        cands = [24, 40, 64, 96]
        sel = blocksums.select_block_length(
            armax_series, armax_alpha, cands, policy="max_pvalue")
        assert sel.chosen in cands
        assert sel.p_values.shape == sel.accepted_mask.shape
        first = blocksums.select_block_length(
            armax_series, armax_alpha, cands, policy="first_accepted")
        hits = np.nonzero(first.accepted_mask)[0]
        assert first.chosen == int(first.candidates[hits[0]])

    def test_paper_policy_respects_min_block(self, armax_series, armax_alpha):
        sel = blocksums.select_block_length(
            armax_series, armax_alpha, [24, 40, 64], min_block=32)
        assert sel.chosen != 24

    def test_unknown_policy(self, armax_series):
        with pytest.raises(PreconditionError):
            blocksums.select_block_length(armax_series, 4.0, [64],
                                          policy="coin_flip")

    def test_infeasible_candidates(self, armax_series):
        with pytest.raises(PreconditionError):
            blocksums.select_block_length(armax_series, 4.0, [3000])


class TestQq:
    def test_radial_table(self, armax_series, armax_alpha):
        sums = blocksums.block_sums(armax_series, 64, armax_alpha)
        fit = dist.fit_mle(sums.sums, fix_a1=True)
        out = blocksums.qq_stable_diagnostics(
            armax_series, fit, 64, armax_alpha, mode="radial")
        tab = out["radial"]
        n_blocks = armax_series.n // 64
        assert tab["empirical"].shape == (n_blocks,)
        assert tab["theoretical"].shape == (n_blocks,)
        # both axes sorted; a sane fit tracks the data within a factor 2
        assert np.all(np.diff(tab["empirical"]) >= 0.0)
        assert np.all(np.diff(tab["theoretical"]) > 0.0)
        mid = slice(n_blocks // 4, 3 * n_blocks // 4)
        ratio = tab["empirical"][mid] / tab["theoretical"][mid]
        assert np.all((0.5 < ratio) & (ratio < 2.0))

    def test_marginal_tables(self):
        spec = models.ModelSpec(kind="marmax", alpha=4.0, lam=0.5,
                                tau=0.5, d=2)
        s = models.simulate(spec, 4000, seed=29)
        sums = blocksums.block_sums(s, 64, 4.0)
        fit = dist.fit_mle(sums.sums, fix_a1=True)
        m = np.array([0.7, 0.7])
        mv = blocksums.qq_stable_diagnostics(s, fit, 64, 4.0, m,
                                             mode="marginal_mv")
        assert set(mv) == {"s1", "s2"}
        for tab in mv.values():
            assert tab["empirical"].shape == tab["theoretical"].shape
        uv = blocksums.qq_stable_diagnostics(s, fit, 64, 4.0, m,
                                             mode="marginal_uv")
        assert set(uv) == {"s1", "s2"}

    def test_unknown_mode(self, armax_series, armax_alpha):
        sums = blocksums.block_sums(armax_series, 64, armax_alpha)
        fit = dist.fit_mle(sums.sums, fix_a1=True)
        with pytest.raises(PreconditionError):
            blocksums.qq_stable_diagnostics(armax_series, fit, 64,
                                            armax_alpha, mode="sideways")
