import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging

import numpy as np

from tndve.data import TndDataset
from tndve.errors import ConfigError
from tndve.estimators import TiltSpec, estimate_tnd_om
from tndve.sensitivity import curve_to_frame, sensitivity_curve

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def toy_tnd():
    return TndDataset.from_counts(n11=2, n10=2, n01=1, n00=3)


def continuous_x_tnd(seed=21, n=2500):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=n)
    v = rng.binomial(1, 0.4 + 0.2 * x)
    p = 1.0 / (1.0 + np.exp(-(-0.4 - 0.8 * v + 0.5 * x)))
    y = rng.binomial(1, p)
    return TndDataset(x=x[:, None], v=v, y_star=y, covariate_names=('x',))


class SensitivityCurveTests(unittest.TestCase):
    def test_constant_tilt_on_toy(self):
        points = sensitivity_curve(toy_tnd(), tilt=TiltSpec(grid=(-1.0, 0.0, 1.0)), ci='none')
        psi = [p.result.psi_hat for p in points]
        np.testing.assert_allclose(psi, [3.0 * np.e, 3.0, 3.0 / np.e], rtol=1e-10)
        self.assertEqual([p.eta for p in points], [-1.0, 0.0, 1.0])

    def test_constant_q_scales_by_exp_minus_eta(self):
        data = continuous_x_tnd()
        base = estimate_tnd_om(data).psi_hat
        points = sensitivity_curve(data, tilt=TiltSpec.symmetric(0.8, 9), ci='none', workers=3)
        for p in points:
            with self.subTest(eta=p.eta):
                self.assertTrue(p.ok)
                self.assertAlmostEqual(p.result.psi_hat, base * np.exp(-p.eta), places=10)

    def test_positive_q_gives_a_decreasing_curve(self):
        data = continuous_x_tnd()
        points = sensitivity_curve(data, tilt=TiltSpec.symmetric(1.0, 11, q='x'), ci='none')
        psi = np.array([p.result.psi_hat for p in points])
        self.assertTrue(np.all(np.diff(psi) < 0))

    def test_single_point_grid_with_sandwich(self):
        data = continuous_x_tnd()
        points = sensitivity_curve(data, tilt=TiltSpec.symmetric(1.0, 1), ci='sandwich')
        self.assertEqual(len(points), 1)
        self.assertAlmostEqual(points[0].result.psi_hat, estimate_tnd_om(data).psi_hat, places=10)
        self.assertGreater(points[0].result.se, 0.0)

    def test_failed_nuisance_marks_every_point(self):
        data = TndDataset.from_counts(n11=2, n10=2, n01=0, n00=0)
        points = sensitivity_curve(data, tilt=TiltSpec(grid=(-0.5, 0.5)), ci='none')
        self.assertEqual(len(points), 2)
        self.assertTrue(all(not p.ok and p.error for p in points))

    def test_frame_and_ci_validation(self):
        points = sensitivity_curve(toy_tnd(), tilt=TiltSpec(grid=(0.0, 1.0)), ci='none')
        frame = curve_to_frame(points)
        self.assertEqual(list(frame.columns), ['eta', 'psi', 've', 'se', 'ci_lower', 'ci_upper', 'error'])
        self.assertAlmostEqual(frame.loc[0, 've'], -2.0, places=10)
        with self.assertRaises(ConfigError):
            sensitivity_curve(toy_tnd(), ci='jackknife')


if __name__ == '__main__':
    unittest.main()
