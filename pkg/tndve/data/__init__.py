"""
Dataset representations and CSV ingestion.
"""

from .records import CohortRecord, TndRecord, CohortDataset, TndDataset, restrict_to_tested
from .io import ColumnSchema, LoadReport, load_csv, write_csv

__all__ = [
    'CohortRecord', 'TndRecord', 'CohortDataset', 'TndDataset', 'restrict_to_tested',
    'ColumnSchema', 'LoadReport', 'load_csv', 'write_csv',
]
