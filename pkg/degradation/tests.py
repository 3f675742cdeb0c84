import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from degradation.entities import BaselinePrior, DegradationState, RulDistribution
from degradation.services import (
    default_load_factor_table,
    fresh_state,
    nominal_rul,
    relative_rul_factor,
    relative_rul_factors,
    rul_after_loading,
    sample_rul,
    simulate_first_passage,
    state_from_history,
    update_posterior,
)
from om_planner.errors import ConfigurationError, InvalidInputError, TurbineFailedError

YAW_LEVELS = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0]


def _state_with_gap(gap: float, mean_beta: float, sigma: float) -> DegradationState:
    prior = BaselinePrior(mean_alpha=0.0, mean_beta=mean_beta, sigma=sigma)
    return DegradationState(
        prior=prior,
        posterior=prior,
        observed_amplitude=100.0 - gap,
        observation_time=0.0,
        failure_threshold=100.0,
    )


class PosteriorUpdateTests(SimpleTestCase):
    def test_empty_history_keeps_prior(self):
        prior = BaselinePrior()
        state = fresh_state(prior, 100.0)
        self.assertEqual(state.posterior, prior)
        self.assertEqual(state_from_history(prior, 100.0, []).posterior, prior)

    def test_rejects_non_increasing_time(self):
        state = update_posterior(fresh_state(BaselinePrior(), 100.0), (2.0, 6.0))
        with self.assertRaises(InvalidInputError):
            update_posterior(state, (2.0, 6.5))
        with self.assertRaises(InvalidInputError):
            update_posterior(state, (1.0, 6.5))

    def test_rejects_non_positive_definite_prior(self):
        with self.assertRaises(ConfigurationError):
            BaselinePrior(var_alpha=1.0, var_beta=1.0, cov_alpha_beta=1.5)

    def test_noiseless_line_is_recovered(self):
        prior = BaselinePrior(
            mean_alpha=4.0, var_alpha=4.0, mean_beta=1.0, var_beta=1e-6, sigma=0.05
        )
        state = fresh_state(prior, 1000.0)
        for t in np.arange(0.1, 50.0, 0.5):
            state = update_posterior(state, (float(t), 5.0 + float(t)))
        self.assertAlmostEqual(state.posterior.mean_beta, 1.0, places=6)
        self.assertAlmostEqual(state.posterior.mean_alpha, 5.0, delta=0.05)

    def test_batch_equals_sequential(self):
        prior = BaselinePrior(mean_beta=0.5, var_beta=0.01, sigma=0.5)
        history = [(float(t), 5.0 + 0.6 * t) for t in range(1, 11)]
        batch = state_from_history(prior, 100.0, history)
        sequential = fresh_state(prior, 100.0)
        for observation in history:
            sequential = update_posterior(sequential, observation)
        for name in ("mean_alpha", "mean_beta", "var_alpha", "var_beta", "cov_alpha_beta"):
            self.assertAlmostEqual(
                getattr(batch.posterior, name), getattr(sequential.posterior, name), delta=1e-9
            )

    def test_beta_variance_never_grows(self):
        rng = np.random.default_rng(3)
        prior = BaselinePrior(mean_beta=0.5, var_beta=0.01, sigma=0.5)
        state = fresh_state(prior, 100.0)
        previous = prior.var_beta
        amplitude = 5.0
        for t in range(1, 30):
            amplitude += 0.5 + 0.5 * rng.standard_normal()
            state = update_posterior(state, (float(t), amplitude))
            self.assertLessEqual(state.posterior.var_beta, previous + 1e-15)
            previous = state.posterior.var_beta

    def test_matches_grid_quadrature(self):
        prior = BaselinePrior(
            mean_alpha=5.0, var_alpha=1.0, mean_beta=0.5, var_beta=0.01,
            cov_alpha_beta=0.02, sigma=0.5,
        )
        alphas = np.linspace(prior.mean_alpha - 6.0, prior.mean_alpha + 6.0, 401)
        betas = np.linspace(prior.mean_beta - 0.6, prior.mean_beta + 0.6, 401)
        grid_alpha, grid_beta = np.meshgrid(alphas, betas, indexing="ij")
        log_prior = stats.multivariate_normal(prior.mean, prior.covariance).logpdf(
            np.dstack([grid_alpha, grid_beta])
        )

        for case in range(20):
            rng = np.random.default_rng(100 + case)
            alpha, beta = rng.multivariate_normal(prior.mean, prior.covariance)
            times = np.cumsum(rng.uniform(0.5, 2.0, size=10))
            steps = np.diff(times, prepend=0.0)
            amplitudes = alpha + np.cumsum(
                beta * steps + prior.sigma * np.sqrt(steps) * rng.standard_normal(10)
            )
            state = state_from_history(prior, 1000.0, list(zip(times, amplitudes)))

            log_lik = stats.norm.logpdf(
                amplitudes[0], grid_alpha + grid_beta * times[0], prior.sigma * np.sqrt(times[0])
            )
            for k in range(1, 10):
                log_lik = log_lik + stats.norm.logpdf(
                    amplitudes[k] - amplitudes[k - 1],
                    grid_beta * steps[k],
                    prior.sigma * np.sqrt(steps[k]),
                )
            log_post = log_prior + log_lik
            weights = np.exp(log_post - log_post.max())
            weights /= weights.sum()

            self.assertAlmostEqual(
                state.posterior.mean_alpha / float((weights * grid_alpha).sum()), 1.0, delta=0.01
            )
            self.assertAlmostEqual(
                state.posterior.mean_beta / float((weights * grid_beta).sum()), 1.0, delta=0.01
            )


class NominalRulTests(SimpleTestCase):
    def test_direct_substitution(self):
        dist = nominal_rul(_state_with_gap(10.0, 2.0, 1.0))
        self.assertAlmostEqual(dist.mean, 5.0 / 24)
        self.assertAlmostEqual(dist.shape, 100.0 / 24)

    def test_failed_turbine_is_signalled(self):
        with self.assertRaises(TurbineFailedError) as raised:
            nominal_rul(_state_with_gap(0.0, 2.0, 1.0))
        self.assertTrue(raised.exception.distribution.degenerate)
        self.assertEqual(raised.exception.distribution.mean, 0.0)

    def test_rejects_downward_trend(self):
        state = _state_with_gap(10.0, 2.0, 1.0)
        flat = DegradationState(
            prior=state.prior,
            posterior=BaselinePrior(mean_alpha=0.0, mean_beta=-0.1, sigma=1.0),
            observed_amplitude=state.observed_amplitude,
            observation_time=0.0,
            failure_threshold=100.0,
        )
        with self.assertRaises(InvalidInputError):
            nominal_rul(flat)

    def test_first_passage_matches_inverse_gaussian(self):
        for mean_beta, sigma, gap in ((2.0, 1.0, 10.0), (1.0, 0.5, 8.0), (0.5, 1.0, 5.0)):
            dist = nominal_rul(_state_with_gap(gap, mean_beta, sigma))
            simulated = simulate_first_passage(mean_beta, sigma, gap, n_paths=20000, seed=11)
            sampled = sample_rul(dist, 20000, seed=12) * 24.0
            result = stats.ks_2samp(simulated, sampled)
            self.assertGreater(result.pvalue, 0.01, msg=f"beta={mean_beta} sigma={sigma}")


class SampleRulTests(SimpleTestCase):
    def test_point_mass_gives_zeros(self):
        np.testing.assert_array_equal(sample_rul(RulDistribution.point_mass(), 3, seed=1), [0, 0, 0])

    def test_deterministic_for_seed(self):
        dist = RulDistribution(mean=5.0, shape=100.0)
        np.testing.assert_array_equal(sample_rul(dist, 50, seed=4), sample_rul(dist, 50, seed=4))

    def test_moments(self):
        dist = RulDistribution(mean=5.0, shape=100.0)
        samples = sample_rul(dist, 1_000_000, seed=9)
        self.assertTrue(np.all(samples >= 0))
        self.assertAlmostEqual(samples.mean() / 5.0, 1.0, delta=0.01)
        self.assertAlmostEqual(samples.var() / 1.25, 1.0, delta=0.05)
        self.assertAlmostEqual(dist.variance, 1.25)

    def test_rejects_empty_request(self):
        with self.assertRaises(InvalidInputError):
            sample_rul(RulDistribution(mean=1.0, shape=1.0), 0, seed=1)


class RelativeRulFactorTests(SimpleTestCase):
    def setUp(self):
        self.table = default_load_factor_table(YAW_LEVELS)

    def test_nominal_cell_is_one(self):
        factor, clamped = relative_rul_factor(self.table, YAW_LEVELS.index(0.0), 10.0)
        self.assertAlmostEqual(factor, 1.0)
        self.assertFalse(clamped)

    def test_exponent_applies_to_load_ratio(self):
        table = default_load_factor_table([0.0], wind_bins=[5.0, 10.0, 20.0])
        wind = 10.0 * 1.1 ** (1 / 1.5)
        factor, _ = relative_rul_factor(table, 0, wind)
        # interpolation of the load between bins is linear, so compare against it
        load = np.interp(wind, table.wind_bins, table.ratios[0])
        self.assertAlmostEqual(factor, load**10, places=9)

        unit = default_load_factor_table([0.0], wind_bins=[5.0, 10.0, 15.0])
        ratio_table = type(unit)(
            yaw_levels=unit.yaw_levels,
            wind_bins=unit.wind_bins,
            ratios=np.array([[1.0, 1.0, 1.1]]),
        )
        self.assertAlmostEqual(relative_rul_factor(ratio_table, 0, 15.0)[0], 1.1**10, places=9)
        self.assertAlmostEqual(relative_rul_factor(ratio_table, 0, 5.0)[0], 1.0)

    def test_clamps_above_grid(self):
        factor, clamped = relative_rul_factor(self.table, 3, 45.0)
        self.assertTrue(clamped)
        self.assertAlmostEqual(factor, relative_rul_factor(self.table, 3, 30.0)[0])

    def test_rejects_negative_wind(self):
        with self.assertRaises(InvalidInputError):
            relative_rul_factors(self.table, [-1.0])

    def test_factor_follows_load(self):
        factors, _ = relative_rul_factors(self.table, 10.0)
        loads = np.array([np.interp(10.0, self.table.wind_bins, row) for row in self.table.ratios])
        order = np.argsort(loads)
        self.assertTrue(np.all(np.diff(factors[order]) >= 0))


class RulAfterLoadingTests(SimpleTestCase):
    def test_nominal_is_identity(self):
        self.assertEqual(rul_after_loading(10.0, [1.0] * 48, period_days=1 / 24), 10.0)

    def test_heavier_load_shortens_life(self):
        self.assertAlmostEqual(rul_after_loading(10.0, [2.0, 2.0, 2.0]), 7.0)

    def test_lighter_load_extends_life(self):
        self.assertAlmostEqual(rul_after_loading(10.0, [0.5] * 4), 12.0)

    def test_floored_at_zero(self):
        self.assertEqual(rul_after_loading(1.0, [5.0]), 0.0)

    def test_hourly_periods(self):
        self.assertAlmostEqual(rul_after_loading(3.0, [0.0] * 24, period_days=1 / 24), 4.0)


class TimeTransformationTests(SimpleTestCase):
    def test_constant_factor_scales_passage_time(self):
        baseline = simulate_first_passage(2.0, 1.0, 10.0, n_paths=20000, seed=21).mean()
        self.assertAlmostEqual(baseline / 5.0, 1.0, delta=0.03)
        fast = simulate_first_passage(2.0, 1.0, 10.0, n_paths=20000, seed=22, psi=2.0).mean()
        slow = simulate_first_passage(2.0, 1.0, 10.0, n_paths=20000, seed=23, psi=0.5).mean()
        self.assertAlmostEqual(fast / (0.5 * baseline), 1.0, delta=0.03)
        self.assertAlmostEqual(slow / (2.0 * baseline), 1.0, delta=0.03)
