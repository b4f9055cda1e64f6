"""
CSV ingestion and export for cohort and TND datasets.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import DomainValueError, FileError, SchemaError
from .records import CohortDataset, TndDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnSchema:
    """Column mapping of a CSV file.

    Args:
        v: Vaccination column.
        y: Outcome column (tri-level y for cohort files, y_star for TND files).
        x: Covariate columns, in design order.
        design: 'cohort' or 'tnd'.
    """
    v: str = 'v'
    y: str = 'y'
    x: Tuple[str, ...] = ()
    design: str = 'tnd'

    def __post_init__(self):
        if self.design not in ('cohort', 'tnd'):
            raise SchemaError(f"design must be 'cohort' or 'tnd', got {self.design!r}")
        object.__setattr__(self, 'x', tuple(self.x))

    @property
    def columns(self) -> List[str]:
        return [self.v, self.y, *self.x]


@dataclass
class LoadReport:
    """What happened to the rows of a CSV file during ingestion."""
    path: str
    rows_read: int = 0
    rows_kept: int = 0
    dropped_rows: List[int] = field(default_factory=list)

    @property
    def rows_dropped(self) -> int:
        return len(self.dropped_rows)


Dataset = Union[CohortDataset, TndDataset]


def _parse_number(cell: str) -> float:
    """Exact decimal parse; blanks and non-numeric cells become NaN."""
    try:
        return float(cell.strip())
    except (TypeError, ValueError):
        return float('nan')


def load_csv(path: str, schema: ColumnSchema, drop_missing: bool = False,
             return_report: bool = False):
    """Load a comma-separated file with a header row into a dataset.

    Args:
        path: UTF-8 CSV file.
        schema: Column mapping.
        drop_missing: Drop rows with missing or non-numeric cells instead of failing.
        return_report: Also return the LoadReport.

    Returns:
        The dataset, or (dataset, report) when ``return_report`` is set.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except FileNotFoundError:
        raise FileError(f"File not found: {path}")
    except pd.errors.EmptyDataError:
        raise FileError(f"File has no header row: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise FileError(f"Cannot read {path}: {e}")

    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"Missing column(s) {missing} in {path}")

    report = LoadReport(path=str(path), rows_read=len(frame))
    numeric = pd.DataFrame({c: frame[c].map(_parse_number) for c in dict.fromkeys(schema.columns)},
                           index=frame.index, dtype=float)
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        if not drop_missing:
            row = int(np.where(bad)[0][0])
            raise DomainValueError(f"Missing or non-numeric value in row {row} of {path}")
        report.dropped_rows = [int(i) for i in np.where(bad)[0]]
        logger.warning(f"Dropped {report.rows_dropped} row(s) with missing values from {path}")
    numeric = numeric.loc[~bad]
    report.rows_kept = len(numeric)

    x = numeric[list(schema.x)].to_numpy(dtype=float).reshape(len(numeric), len(schema.x))
    v = numeric[schema.v].to_numpy()
    y = numeric[schema.y].to_numpy()
    kept_rows = np.where(~bad)[0]
    allowed_y = (0, 1, 2) if schema.design == 'cohort' else (0, 1)
    for name, values, allowed in ((schema.v, v, (0, 1)), (schema.y, y, allowed_y)):
        outside = ~np.isin(values, allowed)
        if outside.any():
            pos = int(np.where(outside)[0][0])
            raise DomainValueError(f"{name}={values[pos]!r} outside {set(allowed)} in row {int(kept_rows[pos])} of {path}")

    if schema.design == 'cohort':
        dataset = CohortDataset(x=x, v=v, y=y, covariate_names=schema.x)
    else:
        dataset = TndDataset(x=x, v=v, y_star=y, covariate_names=schema.x)

    logger.info(f"Loaded {dataset.n} {schema.design} records from {path}")
    if return_report:
        return dataset, report
    return dataset


def write_csv(dataset: Dataset, path: str, extra_columns: Optional[dict] = None) -> str:
    """Write a dataset (plus optional extra columns, e.g. latent simulation variables)."""
    frame = dataset.to_frame()
    for name, values in (extra_columns or {}).items():
        frame[name] = np.asarray(values)
    try:
        frame.to_csv(path, index=False, encoding='utf-8')
    except OSError as e:
        raise FileError(f"Cannot write {path}: {e}")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return str(path)
