import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging

import numpy as np

from tndve.data import TndDataset
from tndve.errors import ConfigError, DegenerateData, DegenerateEstimand
from tndve.estimators import (
    ModelSpec, TiltSpec, conditional_odds_ratio, estimate_tilted, estimate_tnd_dr, estimate_tnd_ipw,
    estimate_tnd_logit, estimate_tnd_om, fit_tnd_nuisance, run_estimator, solve_dr_or_function,
)
from tndve.estimators.tnd import dr_moment_rows

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def toy_tnd():
    """V=1: 2 positive, 2 negative; V=0: 1 positive, 3 negative. Crude odds ratio 3."""
    return TndDataset.from_counts(n11=2, n10=2, n01=1, n00=3)


def binary_x_tnd(seed=3, n=4000):
    rng = np.random.default_rng(seed)
    x = rng.binomial(1, 0.5, size=n).astype(float)
    v = rng.binomial(1, 0.3 + 0.3 * x)
    p = 1.0 / (1.0 + np.exp(-(-0.8 - 0.7 * v + 0.6 * x + 0.4 * v * x)))
    y = rng.binomial(1, p)
    return TndDataset(x=x[:, None], v=v, y_star=y, covariate_names=('x',))


def continuous_x_tnd(seed=5, n=3000):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    v = rng.binomial(1, 1.0 / (1.0 + np.exp(-(-0.5 + x))))
    p = 1.0 / (1.0 + np.exp(-(-0.6 - 0.9 * v + 0.8 * x)))
    y = rng.binomial(1, p)
    return TndDataset(x=x[:, None], v=v, y_star=y, covariate_names=('x',))


class ToyOracleTests(unittest.TestCase):
    def setUp(self):
        self.toy = toy_tnd()

    def test_all_estimators_give_crude_odds_ratio(self):
        for func in (estimate_tnd_logit, estimate_tnd_om, estimate_tnd_ipw, estimate_tnd_dr):
            with self.subTest(estimator=func.__name__):
                result = func(self.toy)
                self.assertAlmostEqual(result.psi_hat, 3.0, delta=1e-10)
                self.assertAlmostEqual(result.ve_hat, -2.0, delta=1e-10)
                self.assertEqual(result.n, 8)

    def test_nuisance_values(self):
        nuisance = fit_tnd_nuisance(self.toy)
        self.assertAlmostEqual(float(nuisance.mu0(np.zeros((1, 0)))[0]), 0.25, places=10)
        self.assertAlmostEqual(float(nuisance.pi0(np.zeros((1, 0)))[0]), 0.4, places=10)

    def test_dr_odds_ratio_function(self):
        nuisance = fit_tnd_nuisance(self.toy)
        solution = solve_dr_or_function(self.toy, nuisance)
        self.assertAlmostEqual(solution.theta[0], np.log(3.0), places=8)
        self.assertLessEqual(solution.residual_norm, 1e-8)

    def test_fitted_om_form(self):
        result = estimate_tnd_om(self.toy, ModelSpec(om_form='fitted'))
        self.assertAlmostEqual(result.psi_hat, 3.0, delta=1e-10)

    def test_conditional_odds_ratio(self):
        for method in ('om', 'dr'):
            ratio = conditional_odds_ratio(self.toy, np.zeros((1, 0)), method=method)
            self.assertAlmostEqual(float(ratio[0]), 3.0, places=8)

    def test_registry_dispatch(self):
        self.assertAlmostEqual(run_estimator('om', self.toy).psi_hat, 3.0, delta=1e-10)
        with self.assertRaises(ConfigError):
            run_estimator('did-om', self.toy)
        with self.assertRaises(ConfigError):
            run_estimator('nope', self.toy)


class TiltTests(unittest.TestCase):
    def setUp(self):
        self.toy = toy_tnd()

    def test_constant_tilt_scales_the_estimate(self):
        self.assertAlmostEqual(estimate_tilted(self.toy, tilt=TiltSpec(eta=np.log(3.0))).psi_hat, 1.0,
                               places=10)
        self.assertAlmostEqual(estimate_tilted(self.toy, tilt=TiltSpec(eta=-np.log(3.0))).psi_hat, 9.0,
                               places=10)

    def test_zero_tilt_is_outcome_modeling(self):
        data = continuous_x_tnd()
        self.assertAlmostEqual(estimate_tilted(data, tilt=TiltSpec(eta=0.0, q='x')).psi_hat,
                               estimate_tnd_om(data).psi_hat, places=12)

    def test_symmetric_grid(self):
        tilt = TiltSpec.symmetric(1.0, 5)
        self.assertEqual(tilt.grid, (-1.0, -0.5, 0.0, 0.5, 1.0))
        self.assertEqual(TiltSpec.symmetric(2.0, 1).grid, (0.0,))
        with self.assertRaises(ConfigError):
            TiltSpec(grid=(1.0, 0.0))


class SaturatedModelTests(unittest.TestCase):
    def test_om_ipw_dr_agree_with_binary_covariate(self):
        data = binary_x_tnd()
        om = estimate_tnd_om(data).psi_hat
        self.assertAlmostEqual(estimate_tnd_ipw(data).psi_hat, om, places=8)
        self.assertAlmostEqual(estimate_tnd_dr(data).psi_hat, om, places=6)
        self.assertAlmostEqual(estimate_tnd_om(data, ModelSpec(om_form='fitted')).psi_hat, om, places=8)

    def test_dr_moment_residual_at_solution(self):
        data = continuous_x_tnd()
        nuisance = fit_tnd_nuisance(data)
        solution = solve_dr_or_function(data, nuisance)
        resid = dr_moment_rows(data, nuisance, solution.basis, solution.theta).mean(axis=0)
        self.assertLessEqual(float(np.max(np.abs(resid))), 1e-8)

    def test_estimates_are_plausible(self):
        data = continuous_x_tnd()
        for func in (estimate_tnd_logit, estimate_tnd_om, estimate_tnd_ipw, estimate_tnd_dr):
            with self.subTest(estimator=func.__name__):
                psi = func(data).psi_hat
                self.assertTrue(0.2 < psi < 0.8, psi)


class EquivarianceTests(unittest.TestCase):
    def test_affine_relabeling_of_x(self):
        data = continuous_x_tnd()
        shifted = TndDataset(x=3.0 * data.x - 2.0, v=data.v, y_star=data.y_star, covariate_names=('x',))
        for func in (estimate_tnd_logit, estimate_tnd_om, estimate_tnd_ipw, estimate_tnd_dr):
            with self.subTest(estimator=func.__name__):
                self.assertAlmostEqual(func(shifted).psi_hat, func(data).psi_hat, places=7)


class DegenerateInputTests(unittest.TestCase):
    def test_no_vaccinated_positives(self):
        data = TndDataset.from_counts(n11=0, n10=2, n01=1, n00=3)
        for func in (estimate_tnd_om, estimate_tnd_ipw, estimate_tnd_dr):
            with self.subTest(estimator=func.__name__):
                with self.assertRaises(DegenerateEstimand):
                    func(data)

    def test_empty_cells_and_data(self):
        with self.assertRaises(DegenerateData):
            estimate_tnd_logit(TndDataset.from_counts(n11=2, n10=0, n01=1, n00=3))
        with self.assertRaises(DegenerateData):
            estimate_tnd_om(TndDataset.from_counts(0, 0, 0, 0))


if __name__ == '__main__':
    unittest.main()
