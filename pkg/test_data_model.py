import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import unittest
import logging
import tempfile

import numpy as np

from tndve.data import (
    CohortDataset, TndDataset, ColumnSchema, load_csv, write_csv, restrict_to_tested,
)
from tndve.errors import DimensionMismatch, DomainValueError, FileError, SchemaError

# Configure logging
logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

TOY_COHORT_COUNTS = {(1, 2): 2, (1, 1): 2, (1, 0): 6, (0, 2): 1, (0, 1): 3, (0, 0): 6}


class DatasetTests(unittest.TestCase):
    def setUp(self):
        self.toy = TndDataset.from_counts(n11=2, n10=2, n01=1, n00=3)
        self.cohort = CohortDataset.from_counts(TOY_COHORT_COUNTS)

    def test_toy_counts(self):
        self.assertEqual(self.toy.n, 8)
        self.assertEqual(self.toy.covariate_dim, 0)
        self.assertEqual(self.toy.cell_counts(), {(0, 0): 3, (0, 1): 1, (1, 0): 2, (1, 1): 2})
        self.assertEqual(self.cohort.n, 20)

    def test_arrays_are_read_only(self):
        with self.assertRaises(ValueError):
            self.toy.v[0] = 0

    def test_domain_checks(self):
        with self.assertRaises(DomainValueError):
            TndDataset(x=np.zeros((2, 0)), v=[0, 2], y_star=[0, 1])
        with self.assertRaises(DomainValueError):
            CohortDataset(x=np.zeros((2, 0)), v=[0, 1], y=[0, 3])
        with self.assertRaises(DomainValueError):
            TndDataset(x=[[0.1], [np.nan]], v=[0, 1], y_star=[0, 1])
        with self.assertRaises(DimensionMismatch):
            TndDataset(x=np.zeros((3, 1)), v=[0, 1], y_star=[0, 1])

    def test_restrict_to_tested(self):
        tested = restrict_to_tested(self.cohort)
        self.assertEqual(tested.n, 8)
        self.assertEqual(tested.cell_counts(), self.toy.cell_counts())

    def test_restrict_keeps_order_and_covariates(self):
        cohort = CohortDataset(x=[[0.1], [0.2], [0.3], [0.4]], v=[1, 0, 1, 0], y=[2, 0, 1, 2],
                               covariate_names=('age',))
        tested = restrict_to_tested(cohort)
        np.testing.assert_array_equal(tested.x[:, 0], [0.1, 0.3, 0.4])
        np.testing.assert_array_equal(tested.y_star, [1, 0, 1])
        self.assertEqual(tested.covariate_names, ('age',))

    def test_select_covariates(self):
        cohort = CohortDataset(x=[[1, 2], [3, 4]], v=[0, 1], y=[1, 2], covariate_names=('a', 'b'))
        sub = cohort.select_covariates(['b'])
        np.testing.assert_array_equal(sub.x[:, 0], [2, 4])
        with self.assertRaises(DimensionMismatch):
            cohort.select_covariates(['c'])


class CsvTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'toy.csv')

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        with open(self.path, 'w', encoding='utf-8') as f:
            f.write(text)

    def test_load_toy_tnd(self):
        self._write("v,y\n1,1\n1,1\n1,0\n1,0\n0,1\n0,0\n0,0\n0,0\n")
        data = load_csv(self.path, ColumnSchema(design='tnd'))
        self.assertIsInstance(data, TndDataset)
        self.assertEqual(data.n, 8)
        self.assertEqual(data.cell_counts()[(1, 1)], 2)

    def test_load_cohort_with_covariates(self):
        self._write("age,vacc,status\n0.5,1,2\n0.25,0,0\n0.75,0,1\n")
        data = load_csv(self.path, ColumnSchema(v='vacc', y='status', x=('age',), design='cohort'))
        self.assertIsInstance(data, CohortDataset)
        np.testing.assert_array_equal(data.y, [2, 0, 1])
        self.assertEqual(data.covariate_names, ('age',))

    def test_missing_value(self):
        self._write("v,y,x\n1,1,0.2\n0,,0.3\n0,0,0.4\n")
        schema = ColumnSchema(x=('x',))
        with self.assertRaises(DomainValueError):
            load_csv(self.path, schema)
        data, report = load_csv(self.path, schema, drop_missing=True, return_report=True)
        self.assertEqual(data.n, 2)
        self.assertEqual(report.dropped_rows, [1])

    def test_out_of_domain_value(self):
        self._write("v,y\n1,2\n")
        with self.assertRaises(DomainValueError):
            load_csv(self.path, ColumnSchema(design='tnd'))

    def test_missing_column_and_file(self):
        self._write("v,outcome\n1,1\n")
        with self.assertRaises(SchemaError):
            load_csv(self.path, ColumnSchema())
        with self.assertRaises(FileError):
            load_csv(os.path.join(self.tmp.name, 'absent.csv'), ColumnSchema())

    def test_write_then_load(self):
        data = TndDataset(x=[[0.25], [0.5]], v=[1, 0], y_star=[0, 1], covariate_names=('x',))
        write_csv(data, self.path)
        back = load_csv(self.path, ColumnSchema(y='y_star', x=('x',)))
        np.testing.assert_array_equal(back.x, data.x)
        np.testing.assert_array_equal(back.y_star, data.y_star)


if __name__ == '__main__':
    unittest.main()
