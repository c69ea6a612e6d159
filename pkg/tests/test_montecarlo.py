"""Tests for the PPP simulation oracle: deployment statistics, biased
association, fading draws, campaign reproducibility, and the empirical
estimators."""

import io
import math

import numpy as np
import pytest
from scipy import stats

from hetsinr import analysis as an
from hetsinr import montecarlo as mc
from hetsinr.errors import (
    EmptyDeploymentError,
    EmptySampleSetError,
    NonPositiveParameterError,
)
from hetsinr.model import NetworkConfig, TierParams, db_to_linear


def dense_one_tier(alpha=3.6, lam=2e-3):
    return NetworkConfig(tiers=(TierParams(1.0, lam, alpha),))


def dense_two_tier(alpha2=3.6, bias2=1.0):
    return NetworkConfig(tiers=(
        TierParams(10.0, 1e-3, 3.6),
        TierParams(0.5, 5e-4, alpha2, bias=bias2)))


class TestWindowRule:
    def test_default_satisfies_both_rules(self):
        cfg = dense_two_tier()
        radius = mc.default_window_radius(cfg)
        mc.check_window_radius(cfg, radius)  # must not raise

    def test_too_small_rejected(self):
        cfg = dense_two_tier()
        with pytest.raises(NonPositiveParameterError, match="window too small"):
            mc.check_window_radius(cfg, 100.0)

    def test_settings_validate_explicit_radius(self):
        cfg = dense_two_tier()
        with pytest.raises(NonPositiveParameterError):
            mc.SimSettings(config=cfg, window_radius=50.0)


class TestDeployment:
    def test_deterministic(self):
        s = mc.SimSettings(config=dense_two_tier(), replications=10,
                           master_seed=99)
        a = mc.sample_deployment(s, 3)
        b = mc.sample_deployment(s, 3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_replications_differ(self):
        s = mc.SimSettings(config=dense_two_tier(), replications=10,
                           master_seed=99)
        a = mc.sample_deployment(s, 0)
        b = mc.sample_deployment(s, 1)
        assert a[0].shape != b[0].shape or not np.array_equal(a[0], b[0])

    def test_poisson_mean_and_variance(self):
        cfg = dense_one_tier()
        s = mc.SimSettings(config=cfg, replications=1, master_seed=5)
        radius = s.resolved_window_radius()
        mean_want = cfg.tiers[0].density * math.pi * radius ** 2
        n_reps = 3000
        counts = np.array([len(mc.sample_deployment(s, rep)[0])
                           for rep in range(n_reps)])
        # sample mean within 3 sigma of the Poisson mean
        assert abs(counts.mean() - mean_want) <= 3 * math.sqrt(mean_want / n_reps)
        # Poisson: variance equals the mean (5% at this sample size)
        assert counts.var(ddof=1) == pytest.approx(mean_want, rel=0.05)

    def test_points_inside_window(self):
        s = mc.SimSettings(config=dense_two_tier(), replications=1,
                           master_seed=1)
        radius = s.resolved_window_radius()
        for pts in mc.sample_deployment(s, 0):
            assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= radius)


class TestAssociate:
    def test_single_bs(self):
        cfg = dense_one_tier()
        got = mc.associate([np.array([[300.0, 400.0]])], cfg)
        assert got.tier == 1 and got.index == 0
        assert got.distance == pytest.approx(500.0)

    def test_nearer_wins_within_tier(self):
        cfg = dense_one_tier()
        got = mc.associate([np.array([[200.0, 0.0], [100.0, 0.0]])], cfg)
        assert got.index == 1
        assert got.distance == pytest.approx(100.0)

    def test_empty_deployment(self):
        with pytest.raises(EmptyDeploymentError):
            mc.associate([np.empty((0, 2))], dense_one_tier())

    def test_bias_tips_the_choice(self):
        # equal powers and exponents; bias 8 overcomes a 1.5x distance gap
        cfg = NetworkConfig(tiers=(TierParams(1.0, 1e-3, 4.0),
                                   TierParams(1.0, 1e-3, 4.0, bias=8.0)))
        dep = [np.array([[100.0, 0.0]]), np.array([[150.0, 0.0]])]
        assert mc.associate(dep, cfg).tier == 2
        unbiased = NetworkConfig(tiers=(TierParams(1.0, 1e-3, 4.0),
                                        TierParams(1.0, 1e-3, 4.0)))
        assert mc.associate(dep, unbiased).tier == 1

    def test_reciprocal_power_bias_is_nearest_bs(self):
        # bias 1/P cancels the power: selection reduces to min path loss
        cfg = NetworkConfig(tiers=(TierParams(16.0, 1e-3, 3.8, bias=1.0 / 16.0),
                                   TierParams(0.25, 5e-4, 3.8, bias=4.0)))
        s = mc.SimSettings(config=cfg, replications=1, master_seed=17)
        for rep in range(200):
            dep = mc.sample_deployment(s, rep)
            got = mc.associate(dep, cfg)
            dists = [np.hypot(p[:, 0], p[:, 1]) for p in dep]
            best = min((d.min(), j + 1) for j, d in enumerate(dists) if len(d))
            assert got.tier == best[1]
            assert got.distance == best[0]


class TestDrawSinr:
    def test_no_interferer_is_exponential(self):
        cfg = NetworkConfig(tiers=(TierParams(1.0, 1e-3, 4.0),),
                            noise_power=1e-16,
                            ref_pathloss=db_to_linear(-38.5))
        dep = [np.array([[200.0, 0.0]])]
        assoc = mc.associate(dep, cfg)
        snr = (cfg.tiers[0].power * cfg.ref_pathloss * 200.0 ** -4.0
               / cfg.noise_power)
        rng = np.random.default_rng(123)
        samples = np.array([mc.draw_sinr(dep, assoc, cfg, rng)
                            for _ in range(20000)])
        assert samples.mean() == pytest.approx(snr, rel=3.0 / math.sqrt(20000))
        _, pvalue = stats.kstest(samples, "expon", args=(0.0, snr))
        assert pvalue > 1e-3

    def test_symmetric_interferer_ratio_law(self):
        # one interferer at the serving distance: SINR = g/h with
        # P[g/h <= tau] = tau/(1+tau)
        cfg = dense_one_tier(alpha=4.0)
        dep = [np.array([[100.0, 0.0], [-100.0, 0.0]])]
        assoc = mc.associate(dep, cfg)
        rng = np.random.default_rng(321)
        n = 20000
        samples = np.array([mc.draw_sinr(dep, assoc, cfg, rng)
                            for _ in range(n)])
        for tau in (0.5, 1.0, 2.0):
            want = tau / (1.0 + tau)
            got = float(np.mean(samples <= tau))
            assert abs(got - want) <= 3.0 * math.sqrt(want * (1 - want) / n)


class TestCampaign:
    def test_single_sample(self):
        s = mc.SimSettings(config=dense_one_tier(), replications=1,
                           master_seed=0, measure_load=False)
        res = mc.run_campaign(s)
        assert len(res.samples) == 1
        assert res.samples.tier[0] == 1
        assert res.samples.sinr[0] > 0.0

    def test_fading_draws_multiply_samples(self):
        s = mc.SimSettings(config=dense_one_tier(), replications=5,
                           fading_draws=4, master_seed=0, measure_load=False)
        res = mc.run_campaign(s)
        assert len(res.samples) == 20
        # distance repeats within a replication, fading varies
        assert len(np.unique(res.samples.distance)) == 5
        assert len(np.unique(res.samples.sinr)) == 20

    def test_reproducible_and_worker_invariant(self):
        cfg = dense_two_tier(bias2=4.0)
        make = lambda: mc.SimSettings(config=cfg, replications=600,
                                      master_seed=31, measure_load=False)
        a = mc.run_campaign(make())
        b = mc.run_campaign(make())
        c = mc.run_campaign(make(), workers=3)
        np.testing.assert_array_equal(a.samples.sinr, b.samples.sinr)
        np.testing.assert_array_equal(a.samples.sinr, c.samples.sinr)
        np.testing.assert_array_equal(a.association_counts, c.association_counts)

    def test_association_fractions_match_analytics(self):
        cfg = dense_two_tier(bias2=4.0)
        res = mc.run_campaign(mc.SimSettings(
            config=cfg, replications=20000, master_seed=8, measure_load=False))
        n = res.association_counts.sum()
        for k in (1, 2):
            want = an.association_probability(cfg, k)
            got = res.association_fractions[k - 1]
            sigma = math.sqrt(want * (1 - want) / n)
            assert abs(got - want) <= 3 * sigma

    def test_association_fractions_mixed_exponents(self):
        cfg = NetworkConfig(tiers=(
            TierParams(10.0, 1e-3, 3.8),
            TierParams(0.5, 5e-4, 3.4, bias=db_to_linear(5.0))))
        res = mc.run_campaign(mc.SimSettings(
            config=cfg, replications=20000, master_seed=9, measure_load=False))
        n = res.association_counts.sum()
        for k in (1, 2):
            want = an.association_probability(cfg, k)
            sigma = math.sqrt(want * (1 - want) / n)
            assert abs(res.association_fractions[k - 1] - want) <= 3 * sigma

    def test_empirical_load_matches_analytics(self):
        cfg = NetworkConfig(tiers=(
            TierParams(10.0, 1e-3, 3.6),
            TierParams(0.5, 5e-4, 3.6, bias=4.0)), user_density=5e-3)
        res = mc.run_campaign(mc.SimSettings(
            config=cfg, replications=60, master_seed=7))
        for k in (1, 2):
            want = an.cell_load(cfg, k)
            assert res.mean_load[k - 1] == pytest.approx(want, rel=0.02)

    def test_window_doubling_within_noise(self):
        # truncation bias must stay below the Monte Carlo noise floor
        cfg = dense_two_tier(bias2=4.0)
        base_radius = mc.default_window_radius(cfg)
        taus = db_to_linear(np.array([-5.0, 0.0, 5.0, 10.0]))
        r1 = mc.run_campaign(mc.SimSettings(
            config=cfg, replications=20000, master_seed=10, measure_load=False))
        r2 = mc.run_campaign(mc.SimSettings(
            config=cfg, window_radius=2 * base_radius, replications=20000,
            master_seed=1010, measure_load=False))
        e1, se1 = mc.empirical_cdf(r1.samples, taus)
        e2, se2 = mc.empirical_cdf(r2.samples, taus)
        assert np.all(np.abs(e1 - e2) < np.sqrt(se1 ** 2 + se2 ** 2))

    def test_rate_column_is_log1p(self):
        s = mc.SimSettings(config=dense_one_tier(), replications=50,
                           master_seed=2, measure_load=False)
        res = mc.run_campaign(s)
        np.testing.assert_allclose(res.samples.rate,
                                   np.log1p(res.samples.sinr), rtol=1e-15)


class TestEmpiricalEstimators:
    def _samples(self, sinr, tiers=None):
        sinr = np.asarray(sinr, dtype=float)
        tiers = (np.ones(len(sinr), dtype=np.int64) if tiers is None
                 else np.asarray(tiers))
        return mc.EmpiricalSinr(tier=tiers, sinr=sinr,
                                distance=np.ones_like(sinr),
                                rate=np.log1p(sinr), master_seed=0,
                                replications=len(sinr), fading_draws=1)

    def test_midpoint(self):
        p, se = mc.empirical_cdf(self._samples([1.0, 3.0]), [2.0])
        assert p[0] == 0.5
        assert se[0] == pytest.approx(math.sqrt(0.25 / 2))

    def test_all_above_grid(self):
        p, _ = mc.empirical_cdf(self._samples([5.0, 6.0, 7.0]), [1.0, 2.0])
        assert np.all(p == 0.0)

    def test_boundary_counts_as_outage(self):
        p, _ = mc.empirical_cdf(self._samples([1.0, 2.0]), [1.0])
        assert p[0] == 0.5

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        samples = self._samples(rng.exponential(size=500))
        p, _ = mc.empirical_cdf(samples, np.linspace(0.01, 5.0, 40))
        assert np.all(np.diff(p) >= 0.0)

    def test_conditioning_on_tier(self):
        samples = self._samples([0.5, 5.0, 0.5, 5.0], tiers=[1, 2, 1, 2])
        p1, _ = mc.empirical_cdf(samples, [1.0], tier=1)
        p2, _ = mc.empirical_cdf(samples, [1.0], tier=2)
        assert p1[0] == 1.0 and p2[0] == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptySampleSetError):
            mc.empirical_cdf(self._samples([]), [1.0])
        with pytest.raises(EmptySampleSetError):
            mc.empirical_cdf(self._samples([1.0]), [1.0], tier=2)

    def test_rate_estimator(self):
        samples = self._samples([1.0, 2.0, 3.0])
        mean, se = mc.empirical_rate(samples)
        want = np.log1p([1.0, 2.0, 3.0])
        assert mean == pytest.approx(want.mean())
        assert se == pytest.approx(want.std(ddof=1) / math.sqrt(3))

    def test_csv_shape_and_determinism(self):
        s = mc.SimSettings(config=dense_one_tier(), replications=20,
                           master_seed=4, measure_load=False)
        res = mc.run_campaign(s)
        bufs = []
        for _ in range(2):
            buf = io.StringIO()
            res.samples.write_csv(buf)
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]
        lines = bufs[0].splitlines()
        assert lines[0] == "tier,sinr,distance_m,rate_nats"
        assert len(lines) == 21
