"""
Cohort and test-negative dataset representations.

Datasets hold column arrays (x: n x p covariates, v: vaccination, y / y_star: outcome)
that are read-only after construction; record objects are produced on demand.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DimensionMismatch, DomainValueError


@dataclass(frozen=True)
class CohortRecord:
    """One subject of a cohort: covariates, vaccination and tri-level outcome."""
    x: Tuple[float, ...]
    v: int
    y: int  # 0 not tested, 1 test-negative, 2 test-positive


@dataclass(frozen=True)
class TndRecord:
    """One tested subject: covariates, vaccination and test-positive indicator."""
    x: Tuple[float, ...]
    v: int
    y_star: int


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _coerce_covariates(x, n: int, covariate_dim: Optional[int]) -> np.ndarray:
    if x is None:
        x = np.zeros((n, covariate_dim or 0))
    x = np.array(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(n, -1) if n else x.reshape(0, covariate_dim or 0)
    if x.shape[0] != n:
        raise DimensionMismatch(f"covariate rows {x.shape[0]} != number of records {n}")
    if covariate_dim is not None and x.shape[1] != covariate_dim:
        raise DimensionMismatch(f"covariate dimension {x.shape[1]} != declared {covariate_dim}")
    if not np.all(np.isfinite(x)):
        bad = int(np.where(~np.isfinite(x).all(axis=1))[0][0])
        raise DomainValueError(f"non-finite covariate value in row {bad}")
    return x


def _check_domain(values: np.ndarray, allowed: Sequence[int], name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    ok = np.isin(values, allowed)
    if not ok.all():
        bad = int(np.where(~ok)[0][0])
        raise DomainValueError(f"{name}={values[bad]!r} outside {set(allowed)} in row {bad}")
    return values.astype(np.int64)


def _default_names(p: int) -> Tuple[str, ...]:
    return tuple(f"x{j}" for j in range(p))


class _DatasetMixin:
    """Shared covariate handling for both dataset kinds."""

    @property
    def n(self) -> int:
        return int(self.v.shape[0])

    @property
    def covariate_dim(self) -> int:
        return int(self.x.shape[1])

    def __len__(self) -> int:
        return self.n

    def _covariate_subset(self, columns: Sequence) -> Tuple[np.ndarray, Tuple[str, ...]]:
        idx = []
        for c in columns:
            if isinstance(c, str):
                if c not in self.covariate_names:
                    raise DimensionMismatch(f"unknown covariate {c!r}")
                idx.append(self.covariate_names.index(c))
            else:
                if not 0 <= int(c) < self.covariate_dim:
                    raise DimensionMismatch(f"covariate index {c} out of range")
                idx.append(int(c))
        return self.x[:, idx], tuple(self.covariate_names[j] for j in idx)


@dataclass(frozen=True, eq=False)
class CohortDataset(_DatasetMixin):
    """Cohort sample (X, V, Y) with Y in {0, 1, 2}."""
    x: np.ndarray
    v: np.ndarray
    y: np.ndarray
    covariate_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = _check_domain(self.v, (0, 1), 'v')
        y = _check_domain(self.y, (0, 1, 2), 'y')
        if v.shape != y.shape:
            raise DimensionMismatch(f"v has {v.shape[0]} rows but y has {y.shape[0]}")
        x = _coerce_covariates(self.x, v.shape[0], None)
        names = tuple(self.covariate_names) or _default_names(x.shape[1])
        if len(names) != x.shape[1]:
            raise DimensionMismatch(f"{len(names)} covariate names for {x.shape[1]} columns")
        object.__setattr__(self, 'x', _freeze(x))
        object.__setattr__(self, 'v', _freeze(v))
        object.__setattr__(self, 'y', _freeze(y))
        object.__setattr__(self, 'covariate_names', names)

    @classmethod
    def from_records(cls, records: Sequence[CohortRecord], covariate_dim: int = 0,
                     covariate_names: Sequence[str] = ()) -> 'CohortDataset':
        x = np.array([r.x for r in records], dtype=float).reshape(len(records), covariate_dim)
        return cls(x=x, v=[r.v for r in records], y=[r.y for r in records],
                   covariate_names=tuple(covariate_names))

    @classmethod
    def from_counts(cls, counts: dict) -> 'CohortDataset':
        """Covariate-free cohort from a {(v, y): count} mapping."""
        v, y = [], []
        for (vv, yy), k in sorted(counts.items(), key=lambda kv: (-kv[0][0], -kv[0][1])):
            v += [vv] * k
            y += [yy] * k
        return cls(x=np.zeros((len(v), 0)), v=v, y=y)

    @property
    def records(self) -> List[CohortRecord]:
        return [CohortRecord(tuple(self.x[i]), int(self.v[i]), int(self.y[i])) for i in range(self.n)]

    def take(self, index) -> 'CohortDataset':
        """Rows selected (or resampled) by an integer index array."""
        index = np.asarray(index, dtype=np.int64)
        return CohortDataset(self.x[index], self.v[index], self.y[index], self.covariate_names)

    def select_covariates(self, columns: Sequence) -> 'CohortDataset':
        x, names = self._covariate_subset(columns)
        return CohortDataset(x, self.v, self.y, names)

    def with_covariates(self, extra: np.ndarray, names: Sequence[str]) -> 'CohortDataset':
        """Append covariate columns (e.g. a confounder measured only in simulation)."""
        extra = np.asarray(extra, dtype=float).reshape(self.n, -1)
        return CohortDataset(np.hstack([self.x, extra]), self.v, self.y,
                             self.covariate_names + tuple(names))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.x, columns=list(self.covariate_names))
        frame['v'] = self.v
        frame['y'] = self.y
        return frame


@dataclass(frozen=True, eq=False)
class TndDataset(_DatasetMixin):
    """Test-negative sample (X, V, Y*); every record has S = 1."""
    x: np.ndarray
    v: np.ndarray
    y_star: np.ndarray
    covariate_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = _check_domain(self.v, (0, 1), 'v')
        y_star = _check_domain(self.y_star, (0, 1), 'y_star')
        if v.shape != y_star.shape:
            raise DimensionMismatch(f"v has {v.shape[0]} rows but y_star has {y_star.shape[0]}")
        x = _coerce_covariates(self.x, v.shape[0], None)
        names = tuple(self.covariate_names) or _default_names(x.shape[1])
        if len(names) != x.shape[1]:
            raise DimensionMismatch(f"{len(names)} covariate names for {x.shape[1]} columns")
        object.__setattr__(self, 'x', _freeze(x))
        object.__setattr__(self, 'v', _freeze(v))
        object.__setattr__(self, 'y_star', _freeze(y_star))
        object.__setattr__(self, 'covariate_names', names)

    @classmethod
    def from_records(cls, records: Sequence[TndRecord], covariate_dim: int = 0,
                     covariate_names: Sequence[str] = ()) -> 'TndDataset':
        x = np.array([r.x for r in records], dtype=float).reshape(len(records), covariate_dim)
        return cls(x=x, v=[r.v for r in records], y_star=[r.y_star for r in records],
                   covariate_names=tuple(covariate_names))

    @classmethod
    def from_counts(cls, n11: int, n10: int, n01: int, n00: int) -> 'TndDataset':
        """Covariate-free dataset from V x Y* cell counts (n_{v y*})."""
        v = [1] * (n11 + n10) + [0] * (n01 + n00)
        y = [1] * n11 + [0] * n10 + [1] * n01 + [0] * n00
        return cls(x=np.zeros((len(v), 0)), v=v, y_star=y)

    @property
    def records(self) -> List[TndRecord]:
        return [TndRecord(tuple(self.x[i]), int(self.v[i]), int(self.y_star[i])) for i in range(self.n)]

    def take(self, index) -> 'TndDataset':
        index = np.asarray(index, dtype=np.int64)
        return TndDataset(self.x[index], self.v[index], self.y_star[index], self.covariate_names)

    def select_covariates(self, columns: Sequence) -> 'TndDataset':
        x, names = self._covariate_subset(columns)
        return TndDataset(x, self.v, self.y_star, names)

    def cell_counts(self) -> dict:
        """V x Y* cell counts keyed as (v, y_star)."""
        return {(a, b): int(np.sum((self.v == a) & (self.y_star == b))) for a in (0, 1) for b in (0, 1)}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.x, columns=list(self.covariate_names))
        frame['v'] = self.v
        frame['y_star'] = self.y_star
        return frame


def restrict_to_tested(cohort: CohortDataset) -> TndDataset:
    """Keep the tested (y != 0) records in order, mapping y to y_star = 1(y = 2)."""
    tested = cohort.y != 0
    return TndDataset(
        x=cohort.x[tested],
        v=cohort.v[tested],
        y_star=(cohort.y[tested] == 2).astype(np.int64),
        covariate_names=cohort.covariate_names,
    )
