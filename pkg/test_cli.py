import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging
import contextlib
import io
import json
import tempfile

import numpy as np
import pandas as pd

from tndve.cli import main
from tndve.db import SessionLocal, get_run_stats
from tndve.db.models import StudyRun
from tndve.manifest import MANIFEST_NAME, RunManifest

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

TOY_TND_CSV = "v,y\n1,1\n1,1\n1,0\n1,0\n0,1\n0,0\n0,0\n0,0\n"


def toy_cohort_csv():
    counts = {(1, 2): 2, (1, 1): 2, (1, 0): 6, (0, 2): 1, (0, 1): 3, (0, 0): 6}
    lines = ["v,y"] + [f"{v},{y}" for (v, y), k in counts.items() for _ in range(k)]
    return "\n".join(lines) + "\n"


class CliTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def _file(self, name, text):
        path = os.path.join(self.dir, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def _run(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(list(argv) + ['-q'])
        return code, out.getvalue(), err.getvalue()

    def test_estimate_toy_om(self):
        data = self._file('toy.csv', TOY_TND_CSV)
        code, out, _ = self._run('estimate', '--data', data, '--design', 'tnd', '--estimator', 'om',
                                 '--ci', 'none')
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertAlmostEqual(report['psi'], 3.0, places=10)
        self.assertAlmostEqual(report['ve'], -2.0, places=10)
        self.assertEqual(report['n'], 8)

    def test_estimate_with_sandwich_and_outputs(self):
        data = self._file('toy.csv', TOY_TND_CSV)
        out_dir = os.path.join(self.dir, 'out')
        code, out, _ = self._run('estimate', '--data', data, '--estimator', 'ipw', '--ci-scale', 'log',
                                 '--out-dir', out_dir)
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertEqual(report['ci_method'], 'sandwich')
        self.assertLess(report['ci_lower'], 3.0)
        manifest = RunManifest.load(os.path.join(out_dir, MANIFEST_NAME))
        self.assertEqual(manifest.command, 'estimate')
        self.assertIn('estimate.json', manifest.outputs)
        self.assertEqual(len(manifest.inputs), 1)

    def test_standardized_on_toy_cohort(self):
        data = self._file('cohort.csv', toy_cohort_csv())
        code, out, _ = self._run('estimate', '--data', data, '--design', 'cohort',
                                 '--estimator', 'standardized', '--ci', 'none')
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['psi'], 2.0, places=8)

    def test_cohort_design_inferred_from_estimator(self):
        data = self._file('cohort.csv', toy_cohort_csv())
        code, out, _ = self._run('estimate', '--data', data, '--estimator', 'did-om', '--ci', 'none')
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['psi'], 3.0, places=8)

    def test_error_exit_codes(self):
        data = self._file('novacc.csv', "v,y\n1,0\n1,0\n0,1\n0,0\n0,0\n")
        code, _, err = self._run('estimate', '--data', data, '--estimator', 'dr')
        self.assertEqual(code, 31)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])['error'], 'degenerate_estimand')

        code, _, _ = self._run('estimate', '--data', os.path.join(self.dir, 'missing.csv'))
        self.assertEqual(code, 11)

        bad = self._file('bad.csv', "v,y\n1,3\n")
        code, _, _ = self._run('estimate', '--data', bad)
        self.assertEqual(code, 13)

        code, _, _ = self._run('estimate', '--estimator', 'om')
        self.assertEqual(code, 10)

        code, _, _ = self._run('estimate', '--estimator', 'jackknife')
        self.assertEqual(code, 2)

    def test_config_file(self):
        data = self._file('toy.csv', TOY_TND_CSV)
        config = self._file('run.json', json.dumps({'data': data, 'estimator': 'dr', 'ci': 'none'}))
        code, out, _ = self._run('estimate', '--config', config)
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['psi'], 3.0, places=8)

        config = self._file('bad.yaml', "estimator: om\nflavour: vanilla\n")
        code, _, _ = self._run('estimate', '--config', config)
        self.assertEqual(code, 10)

    def test_sensitivity(self):
        data = self._file('toy.csv', TOY_TND_CSV)
        code, _, _ = self._run('sensitivity', '--data', data, '--omega', '1', '--points', '3',
                               '--ci', 'none', '--out-dir', self.dir)
        self.assertEqual(code, 0)
        frame = pd.read_csv(os.path.join(self.dir, 'sensitivity.csv'))
        np.testing.assert_allclose(frame['psi'], [3.0 * np.e, 3.0, 3.0 / np.e], rtol=1e-9)
        self.assertTrue(os.path.exists(os.path.join(self.dir, MANIFEST_NAME)))

    def test_gen_data(self):
        path = os.path.join(self.dir, 'sim', 'cohort.csv')
        code, _, _ = self._run('gen-data', '--scenario', '2', '--n', '500', '--seed', '9',
                               '--latent', '--out', path)
        self.assertEqual(code, 0)
        frame = pd.read_csv(path)
        self.assertEqual(len(frame), 500)
        self.assertIn('y1', frame.columns)
        self.assertTrue(os.path.exists(os.path.join(self.dir, 'sim', MANIFEST_NAME)))

        tested = os.path.join(self.dir, 'sim', 'tested.csv')
        code, _, _ = self._run('gen-data', '--scenario', '2', '--n', '500', '--seed', '9',
                               '--tested', '--out', tested)
        self.assertEqual(code, 0)
        self.assertEqual(len(pd.read_csv(tested)), int((frame['y'] != 0).sum()))

        code, _, _ = self._run('gen-data', '--scenario', '11', '--out', path)
        self.assertEqual(code, 41)

    def test_simulate_and_record(self):
        out_dir = os.path.join(self.dir, 'study')
        url = f"sqlite:///{os.path.join(self.dir, 'runs.db')}"
        code, out, _ = self._run('simulate', '--scenario', '2', '--reps', '1', '--n', '3000',
                                 '--ci', 'none', '--workers', '1', '--estimators', 'tnd_om', 'did_om',
                                 '--out-dir', out_dir, '--db', url)
        self.assertEqual(code, 0)
        self.assertIn('### scenario 2', out)
        for name in ('replicates.csv', 'summary.csv', 'summary.md', MANIFEST_NAME):
            self.assertTrue(os.path.exists(os.path.join(out_dir, name)), name)

        db = SessionLocal()
        try:
            run = db.query(StudyRun).order_by(StudyRun.id.desc()).first()
            self.assertEqual(run.command, 'simulate')
            stats = get_run_stats(db, run.id)
            self.assertEqual(stats['estimates'], 2)
            self.assertEqual(stats['status'], 'success')
        finally:
            db.close()

    def test_failed_study_is_recorded(self):
        url = f"sqlite:///{os.path.join(self.dir, 'runs.db')}"
        code, _, _ = self._run('simulate', '--scenario', '8', '--reps', '1', '--n', '2000',
                               '--truth-method', 'closed', '--ci', 'none', '--workers', '1',
                               '--out-dir', os.path.join(self.dir, 'study'), '--db', url)
        self.assertEqual(code, 10)

        db = SessionLocal()
        try:
            run = db.query(StudyRun).order_by(StudyRun.id.desc()).first()
            self.assertEqual(run.status, 'failed')
            self.assertTrue(run.error_message.startswith('config_error'))
            self.assertIsNotNone(run.duration_seconds)
            self.assertEqual(get_run_stats(db, run.id)['estimates'], 0)
        finally:
            db.close()

    def test_design_from_config_file_wins_over_inference(self):
        data = self._file('cohort.csv', toy_cohort_csv())
        config = self._file('tnd.json', json.dumps({'design': 'tnd', 'estimator': 'did-om', 'ci': 'none'}))
        code, _, err = self._run('estimate', '--data', data, '--config', config)
        self.assertEqual(code, 13)
        self.assertEqual(json.loads(err.strip().splitlines()[-1])['error'], 'domain_value')

    def test_manifest_reruns(self):
        data = self._file('toy.csv', TOY_TND_CSV)
        out_dir = os.path.join(self.dir, 'first')
        self._run('estimate', '--data', data, '--estimator', 'om', '--ci', 'none', '--out-dir', out_dir)
        code, out, _ = self._run('estimate', '--config', os.path.join(out_dir, MANIFEST_NAME))
        self.assertEqual(code, 0)
        self.assertAlmostEqual(json.loads(out)['psi'], 3.0, places=10)


if __name__ == '__main__':
    unittest.main()
