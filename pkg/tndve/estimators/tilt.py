"""
Exponential tilt departure from odds-ratio equi-confounding.

The test-positive confounding odds ratio is OR2(X) = exp(eta q(X)) OR1(X); eta = 0 is
equi-confounding. The tilt enters the outcome-modeling denominator term by term.
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..data import TndDataset
from ..errors import ConfigError, DegenerateEstimand, DimensionMismatch
from .base import EstimateResult, ModelSpec
from .tnd import NuisanceTnd, estimate_tnd_om, fit_tnd_nuisance, om_denominator_terms

QFunction = Union[None, str, int, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class TiltSpec:
    """Sensitivity parameter(s) of the exponential tilt.

    Args:
        eta: Tilt used by single-point estimation.
        q: Sensitivity function of X: None for q = 1, a covariate name/index, or a callable
           mapping the (n, p) covariate array to n values.
        grid: Sorted eta values for a sensitivity curve.
    """
    eta: float = 0.0
    q: QFunction = None
    grid: Tuple[float, ...] = (0.0,)

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ConfigError("tilt grid must be nonempty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("tilt grid must be sorted")
        object.__setattr__(self, 'grid', grid)

    @classmethod
    def symmetric(cls, omega: float, points: int = 41, q: QFunction = None) -> 'TiltSpec':
        """Equally spaced grid of ``points`` values over [-omega, omega]."""
        if omega < 0 or points < 1:
            raise ConfigError("omega must be >= 0 and points >= 1")
        grid = (0.0,) if points == 1 else tuple(np.linspace(-omega, omega, points).tolist())
        return cls(eta=0.0, q=q, grid=grid)

    def at(self, eta: float) -> 'TiltSpec':
        return replace(self, eta=float(eta))

    def q_values(self, data: TndDataset) -> np.ndarray:
        if self.q is None:
            q = np.ones(data.n)
        elif callable(self.q):
            q = np.asarray(self.q(data.x), dtype=float).reshape(data.n)
        else:
            col = self.q
            if isinstance(col, str):
                if col not in data.covariate_names:
                    raise DimensionMismatch(f"unknown sensitivity column {col!r}")
                col = data.covariate_names.index(col)
            q = data.x[:, int(col)]
        if not np.all(np.isfinite(q)):
            raise ConfigError("sensitivity function q(X) must be finite")
        return q

    def weights(self, data: TndDataset, eta: Optional[float] = None) -> np.ndarray:
        eta = self.eta if eta is None else eta
        return np.exp(eta * self.q_values(data))


def estimate_tilted(data: TndDataset, spec: Optional[ModelSpec] = None,
                    tilt: Optional[TiltSpec] = None,
                    nuisance: Optional[NuisanceTnd] = None) -> EstimateResult:
    """Outcome-modeling estimate under the tilt exp(eta q(X)); eta = 0 equals estimate_tnd_om."""
    tilt = tilt or TiltSpec()
    if tilt.eta == 0.0:
        result = estimate_tnd_om(data, spec, nuisance=nuisance)
        return replace(result, method='tnd_om_tilted')
    if data.n == 0:
        raise DegenerateEstimand("empty TND dataset")
    num = float(np.sum(data.v * data.y_star))
    if num <= 0:
        raise DegenerateEstimand("no vaccinated test-positive records")
    if not np.any((data.v == 1) & (data.y_star == 0)):
        raise DegenerateEstimand("no vaccinated test-negative records")
    if nuisance is None:
        nuisance = fit_tnd_nuisance(data, spec, propensity=False)
    den = float(np.sum(om_denominator_terms(data, nuisance, tilt=tilt.weights(data))))
    if den <= 0:
        raise DegenerateEstimand("tilted denominator is not positive")
    diagnostics = nuisance.diagnostics()
    diagnostics['tilt_eta'] = tilt.eta
    return EstimateResult(psi_hat=num / den, method='tnd_om_tilted', n=data.n,
                          nuisance_diagnostics=diagnostics)
