import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging

import numpy as np
import statsmodels.api as sm

from tndve.config import default_workers
from tndve.data import CohortDataset, TndDataset, restrict_to_tested
from tndve.errors import ConfigError, TooManyFailures
from tndve.estimators import TiltSpec, run_estimator
from tndve.inference import (
    bootstrap_ci, bootstrap_estimates, build_stack, normal_interval, sandwich_ci, sandwich_variance,
)
from tndve.models import numeric_jacobian
from tndve.simulation import generate_cohort, scenario_params

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def continuous_x_tnd(seed=5, n=3000):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    v = rng.binomial(1, 1.0 / (1.0 + np.exp(-(-0.5 + x))))
    p = 1.0 / (1.0 + np.exp(-(-0.6 - 0.9 * v + 0.8 * x)))
    y = rng.binomial(1, p)
    return TndDataset(x=x[:, None], v=v, y_star=y, covariate_names=('x',))


def continuous_x_cohort(seed=9, n=8000):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    v = rng.binomial(1, 0.3 + 0.3 * x)
    expo = np.column_stack([np.zeros(n), -1.5 + 0.5 * x, -2.0 + x - 0.7 * v])
    probs = np.exp(expo) / np.exp(expo).sum(axis=1, keepdims=True)
    y = (rng.uniform(size=n)[:, None] > probs.cumsum(axis=1)[:, :2]).sum(axis=1)
    return CohortDataset(x=x[:, None], v=v, y=y, covariate_names=('x',))


class StackTests(unittest.TestCase):
    def setUp(self):
        self.tnd = continuous_x_tnd()
        self.cohort = continuous_x_cohort()

    def _check_stack(self, name, data, **kwargs):
        stack = build_stack(name, data, **kwargs)
        self.assertEqual(stack.rows().shape, (data.n, stack.dim))
        self.assertLessEqual(float(np.max(np.abs(stack.mean()))), 1e-7)
        expected = run_estimator(name, data, tilt=kwargs.get('tilt'), covariates=kwargs.get('covariates'))
        self.assertAlmostEqual(stack.psi_hat, expected.psi_hat, places=8)
        rows = stack.rows()
        meat = rows.T @ rows / data.n
        self.assertGreaterEqual(float(np.min(np.linalg.eigvalsh(meat))), -1e-12)
        return stack

    def test_tnd_stacks_are_solved_at_the_estimate(self):
        for name in ('logit', 'om', 'ipw', 'dr'):
            with self.subTest(estimator=name):
                self._check_stack(name, self.tnd)

    def test_tilted_stack(self):
        self._check_stack('tilted-om', self.tnd, tilt=TiltSpec(eta=0.5, q='x'))

    def test_cohort_stacks_are_solved_at_the_estimate(self):
        for name in ('did-om', 'did-ipw', 'standardized', 'udid-dr'):
            with self.subTest(estimator=name):
                self._check_stack(name, self.cohort)

    def test_effect_row_slope_matches_numeric_jacobian(self):
        for name, kwargs in (('om', {}), ('ipw', {}), ('tilted-om', {'tilt': TiltSpec(eta=0.5, q='x')})):
            with self.subTest(estimator=name):
                stack = build_stack(name, self.tnd, **kwargs)
                numeric = numeric_jacobian(stack.mean, stack.theta_hat)[stack.psi_index, stack.psi_index]
                analytic = stack.effect_slope()
                self.assertLess(analytic, 0.0)
                self.assertLessEqual(abs(numeric - analytic), 1e-4 * abs(analytic))
        self.assertIsNone(build_stack('dr', self.tnd).effect_slope())

    def test_unknown_stack(self):
        with self.assertRaises(ConfigError):
            build_stack('nope', self.tnd)


class SandwichTests(unittest.TestCase):
    def setUp(self):
        self.tnd = continuous_x_tnd()

    def test_logit_matches_robust_statsmodels_se(self):
        X = np.column_stack([np.ones(self.tnd.n), self.tnd.v, self.tnd.x[:, 0]])
        oracle = sm.Logit(self.tnd.y_star, X).fit(disp=0, cov_type='HC0')
        expected = np.exp(oracle.params[1]) * oracle.bse[1]
        report = sandwich_ci(self.tnd, 'logit')
        self.assertAlmostEqual(report.psi_hat, np.exp(oracle.params[1]), places=6)
        self.assertLess(abs(report.se / expected - 1.0), 1e-4)

    def test_covariance_is_symmetric_psd(self):
        cov = sandwich_variance(build_stack('dr', self.tnd))
        np.testing.assert_allclose(cov, cov.T, atol=1e-10)
        self.assertGreater(cov[-1, -1], 0.0)

    def test_interval_contains_estimate(self):
        for name in ('om', 'ipw', 'dr'):
            with self.subTest(estimator=name):
                report = sandwich_ci(self.tnd, name, level=0.9)
                self.assertLess(report.ci[0], report.psi_hat)
                self.assertGreater(report.ci[1], report.psi_hat)
                self.assertEqual(report.method, 'sandwich')
                self.assertEqual(report.level, 0.9)

    def test_crude_odds_ratio_matches_woolf_interval(self):
        data = TndDataset.from_counts(n11=200, n10=200, n01=100, n00=300)
        report = sandwich_ci(data, 'om', scale='log')
        log_se = np.sqrt(1 / 200 + 1 / 200 + 1 / 100 + 1 / 300)
        self.assertAlmostEqual(report.psi_hat, 3.0, places=8)
        self.assertAlmostEqual(report.se / report.psi_hat, log_se, places=5)
        self.assertAlmostEqual(report.ci[0], 3.0 * np.exp(-1.959963984540054 * log_se), places=4)

    def test_normal_interval(self):
        lower, upper = normal_interval(3.0, 0.3, 0.95, 'log')
        self.assertAlmostEqual(lower * upper, 9.0, places=10)
        lower, upper = normal_interval(3.0, 0.5, 0.95)
        self.assertAlmostEqual(upper - lower, 2 * 1.959963984540054 * 0.5, places=10)
        with self.assertRaises(ConfigError):
            sandwich_ci(self.tnd, 'om', level=1.5)
        with self.assertRaises(ConfigError):
            sandwich_ci(self.tnd, 'om', scale='logit')


class BootstrapTests(unittest.TestCase):
    def setUp(self):
        self.large_toy = TndDataset.from_counts(n11=200, n10=200, n01=100, n00=300)

    def test_centred_at_the_crude_odds_ratio(self):
        report = bootstrap_ci(self.large_toy, 'om', B=400, seed=11)
        sandwich = sandwich_ci(self.large_toy, 'om')
        self.assertAlmostEqual(report.psi_hat, 3.0, places=8)
        self.assertEqual(report.failures, 0)
        self.assertEqual(report.replicates, 400)
        self.assertTrue(0.8 < report.se / sandwich.se < 1.25, report.se / sandwich.se)
        estimates = bootstrap_estimates(self.large_toy, 'om', B=400, seed=11)
        self.assertLess(abs(np.median(estimates) - 3.0), 0.15)

    def test_independent_of_worker_count(self):
        one = bootstrap_estimates(self.large_toy, 'ipw', B=40, seed=3, workers=1)
        four = bootstrap_estimates(self.large_toy, 'ipw', B=40, seed=3, workers=4)
        np.testing.assert_array_equal(one, four)

    def test_seed_changes_resamples(self):
        a = bootstrap_estimates(self.large_toy, 'om', B=10, seed=1)
        b = bootstrap_estimates(self.large_toy, 'om', B=10, seed=2)
        self.assertFalse(np.array_equal(a, b))

    def test_too_many_failures_on_tiny_data(self):
        toy = TndDataset.from_counts(n11=2, n10=2, n01=1, n00=3)
        with self.assertRaises(TooManyFailures) as ctx:
            bootstrap_ci(toy, 'om', B=100, seed=1)
        self.assertGreater(ctx.exception.failures, 10)
        self.assertEqual(ctx.exception.total, 100)

    def test_replicate_count(self):
        with self.assertRaises(ConfigError):
            bootstrap_ci(self.large_toy, 'om', B=1)

    def test_cohort_bootstrap(self):
        cohort = continuous_x_cohort(n=3000)
        report = bootstrap_ci(cohort, 'did-ipw', B=50, seed=5, scale='log')
        self.assertGreater(report.se, 0.0)
        self.assertLess(report.ci[0], report.psi_hat)
        self.assertGreater(report.ci[0], 0.0)


@unittest.skipUnless(os.getenv('TNDVE_SLOW_TESTS'), "set TNDVE_SLOW_TESTS=1 for the 2000-resample bootstrap")
class SimulatedReplicateTests(unittest.TestCase):
    def test_sandwich_and_bootstrap_agree_on_scenario_2(self):
        data = restrict_to_tested(generate_cohort(scenario_params(2), seed=20240101, replicate=0).cohort)
        sandwich = sandwich_ci(data, 'om')
        boot = bootstrap_ci(data, 'om', B=2000, seed=11, workers=default_workers())
        self.assertLess(abs(boot.se / sandwich.se - 1.0), 0.10)


if __name__ == '__main__':
    unittest.main()
