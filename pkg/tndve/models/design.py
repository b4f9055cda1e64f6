"""
Design specifications for the nuisance regressions.

A DesignSpec is an ordered tuple of term labels:
    '1'      intercept (always first)
    'v'      vaccination
    'x{j}'   covariate column j
    'v:x{j}' vaccination by covariate j interaction
"""
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatch

_TERM = re.compile(r'^(1|v|x(\d+)|v:x(\d+))$')


@dataclass(frozen=True)
class DesignSpec:
    terms: Tuple[str, ...]

    def __post_init__(self):
        terms = tuple(t.strip() for t in self.terms)
        if not terms or terms[0] != '1':
            raise DimensionMismatch(f"design must start with the intercept '1', got {terms}")
        for t in terms:
            if not _TERM.match(t):
                raise DimensionMismatch(f"unknown design term {t!r}")
        if len(set(terms)) != len(terms):
            raise DimensionMismatch(f"duplicate terms in {terms}")
        object.__setattr__(self, 'terms', terms)

    # =====================================
    # Constructors
    # =====================================
    @classmethod
    def parse(cls, formula: str) -> 'DesignSpec':
        """Build from a string such as ``'1 + v + x0 + v:x0'``."""
        return cls(tuple(t for t in formula.replace(' ', '').split('+') if t))

    @classmethod
    def main_effects(cls, covariates: Sequence[int]) -> 'DesignSpec':
        """(1, V, X)"""
        return cls(('1', 'v') + tuple(f'x{j}' for j in covariates))

    @classmethod
    def interacted(cls, covariates: Sequence[int]) -> 'DesignSpec':
        """(1, V, X, VX)"""
        return cls(('1', 'v') + tuple(f'x{j}' for j in covariates)
                   + tuple(f'v:x{j}' for j in covariates))

    @classmethod
    def covariates_only(cls, covariates: Sequence[int]) -> 'DesignSpec':
        """(1, X)"""
        return cls(('1',) + tuple(f'x{j}' for j in covariates))

    # =====================================
    # Properties
    # =====================================
    @property
    def width(self) -> int:
        return len(self.terms)

    @property
    def uses_v(self) -> bool:
        return any(t.startswith('v') for t in self.terms)

    @property
    def max_covariate(self) -> int:
        """Largest covariate index referenced, -1 if none."""
        idx = [int(m.group(2) or m.group(3)) for m in map(_TERM.match, self.terms)
               if m.group(2) or m.group(3)]
        return max(idx) if idx else -1

    def index_of(self, term: str) -> int:
        try:
            return self.terms.index(term)
        except ValueError:
            raise DimensionMismatch(f"term {term!r} not in design {self.terms}")

    def check(self, covariate_dim: int) -> 'DesignSpec':
        if self.max_covariate >= covariate_dim:
            raise DimensionMismatch(
                f"design {self.terms} references x{self.max_covariate} but data has {covariate_dim} covariates")
        return self

    def labels(self, names: Optional[Sequence[str]] = None) -> List[str]:
        """Human-readable term labels using covariate names."""
        out = []
        for t in self.terms:
            m = _TERM.match(t)
            j = m.group(2) or m.group(3)
            if j is not None and names is not None:
                name = names[int(j)]
                out.append(f'v:{name}' if t.startswith('v:') else name)
            else:
                out.append(t)
        return out

    # =====================================
    # Design matrix
    # =====================================
    def matrix(self, x: np.ndarray, v: Optional[np.ndarray] = None) -> np.ndarray:
        """Design rows for covariates ``x`` (n x p) and vaccination ``v`` (scalar or length n)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        n = x.shape[0]
        self.check(x.shape[1])
        if self.uses_v:
            if v is None:
                raise DimensionMismatch(f"design {self.terms} needs vaccination values")
            v = np.broadcast_to(np.asarray(v, dtype=float), (n,))
        cols = []
        for t in self.terms:
            m = _TERM.match(t)
            if t == '1':
                cols.append(np.ones(n))
            elif t == 'v':
                cols.append(v)
            elif m.group(2) is not None:
                cols.append(x[:, int(m.group(2))])
            else:
                cols.append(v * x[:, int(m.group(3))])
        return np.column_stack(cols) if cols else np.empty((n, 0))
