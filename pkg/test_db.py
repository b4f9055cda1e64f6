import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging

import numpy as np
import pandas as pd

from tndve.db import (
    SessionLocal, configure, init_db, drop_db, create_study_run, finish_study_run,
    add_replicate_estimates, add_study_summaries, get_run_summaries, get_run_stats,
)
from tndve.montecarlo import McSummary

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


class StudyRunStorageTests(unittest.TestCase):
    def setUp(self):
        configure('sqlite://')
        init_db()
        self.db = SessionLocal()

    def tearDown(self):
        self.db.close()
        drop_db()

    def test_run_lifecycle(self):
        run = create_study_run(self.db, 'simulate', 42, {'reps': 2, 'scenarios': [2]}, version='0.1.0')
        self.assertEqual(run.status, 'running')
        self.assertEqual(run.config['scenarios'], [2])

        replicates = pd.DataFrame([
            {'scenario': np.int64(2), 'misspec': 'none', 'replicate': 0, 'estimator': 'tnd_om',
             'psi': 0.35, 'se': 0.05, 'ci_lower': 0.25, 'ci_upper': 0.45, 'error': None},
            {'scenario': np.int64(2), 'misspec': 'none', 'replicate': 1, 'estimator': 'tnd_om',
             'psi': np.nan, 'se': np.nan, 'ci_lower': np.nan, 'ci_upper': np.nan, 'error': 'separation'},
        ])
        self.assertEqual(add_replicate_estimates(self.db, run.id, replicates), 2)

        summary = McSummary(scenario=2, misspec='none', estimator='tnd_om', display='TND, om',
                            truth=float(np.exp(-1.0)), mean_psi=0.35, bias=0.35 - float(np.exp(-1.0)),
                            mc_se=float('nan'), coverage=1.0, failures=1, n_success=1, n_ci=1,
                            aux={'psi_ratio': {'truth': 0.37, 'bias': np.float64(-0.02), 'coverage': None}})
        self.assertEqual(add_study_summaries(self.db, run.id, [summary]), 1)

        finished = finish_study_run(self.db, run.id)
        self.assertEqual(finished.status, 'success')
        self.assertIsNotNone(finished.duration_seconds)

        stored = get_run_summaries(self.db, run.id)
        self.assertEqual(len(stored), 1)
        self.assertIsNone(stored[0].mc_se)
        self.assertAlmostEqual(stored[0].aux['psi_ratio']['bias'], -0.02)

        stats = get_run_stats(self.db, run.id)
        self.assertEqual(stats['estimates'], 2)
        self.assertEqual(stats['failed_estimates'], 1)
        self.assertEqual(stats['replicates'], 2)
        self.assertEqual(stats['status'], 'success')

    def test_failed_run(self):
        run = create_study_run(self.db, 'reproduce etable3', 1, {})
        finished = finish_study_run(self.db, run.id, status='failed', error_message='too_many_failures')
        self.assertEqual(finished.error_message, 'too_many_failures')
        self.assertIsNone(finish_study_run(self.db, 9999))

    def test_unknown_run_stats(self):
        stats = get_run_stats(self.db, 12345)
        self.assertEqual(stats['estimates'], 0)
        self.assertIsNone(stats['status'])


if __name__ == '__main__':
    unittest.main()
