"""
Nonparametric bootstrap: resample records with replacement, re-estimate, and form a
normal interval from the bootstrap standard deviation.
"""
import concurrent.futures
import logging
from typing import Optional

import numpy as np

from ..errors import ConfigError, TndveError, TooManyFailures
from ..estimators import ModelSpec, TiltSpec, run_estimator
from ..simulation.rng import substream
from .sandwich import CiReport, check_level, check_scale, normal_interval

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.10


def bootstrap_replicate(data, estimator: str, spec: Optional[ModelSpec], seed: int, index: int,
                        tilt: Optional[TiltSpec] = None, covariates=None) -> float:
    """psi_hat on resample ``index``; NaN when the estimator fails on it."""
    rng = substream(seed, index, 'bootstrap')
    sample = data.take(rng.integers(0, data.n, size=data.n))
    try:
        return run_estimator(estimator, sample, spec, tilt=tilt, covariates=covariates).psi_hat
    except TndveError as e:
        logger.debug(f"bootstrap replicate {index} failed: {e}")
        return float('nan')


def bootstrap_estimates(data, estimator: str, spec: Optional[ModelSpec] = None, B: int = 500,
                        seed: int = 0, workers: Optional[int] = None,
                        tilt: Optional[TiltSpec] = None, covariates=None) -> np.ndarray:
    """Array of B re-estimates in replicate order (NaN for failures)."""
    estimates = np.full(B, np.nan)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {
            executor.submit(bootstrap_replicate, data, estimator, spec, seed, b, tilt, covariates): b
            for b in range(B)
        }
        for future in concurrent.futures.as_completed(future_to_index):
            estimates[future_to_index[future]] = future.result()
    return estimates


def bootstrap_ci(data, estimator: str, spec: Optional[ModelSpec] = None, B: int = 500,
                 seed: int = 0, level: float = 0.95, scale: str = 'natural',
                 workers: Optional[int] = None, tilt: Optional[TiltSpec] = None,
                 covariates=None) -> CiReport:
    """Bootstrap standard error and normal interval centred at the original estimate.

    Resample b draws its indices from the keyed stream (seed, b, 'bootstrap'), so the
    result does not depend on ``workers``. Failed resamples are dropped and counted;
    more than 10% failures raise TooManyFailures.
    """
    if B < 2:
        raise ConfigError(f"bootstrap needs at least 2 replicates, got {B}")
    level = check_level(level)
    check_scale(scale)
    original = run_estimator(estimator, data, spec, tilt=tilt, covariates=covariates)
    estimates = bootstrap_estimates(data, estimator, spec, B, seed, workers, tilt, covariates)
    failed = int(np.sum(~np.isfinite(estimates)))
    if failed > MAX_FAILURE_SHARE * B:
        raise TooManyFailures(f"{failed} of {B} bootstrap replicates failed", failures=failed, total=B)
    if failed:
        logger.warning(f"{estimator}: {failed} of {B} bootstrap replicates failed and were dropped")
    valid = estimates[np.isfinite(estimates)]
    se = float(np.std(valid, ddof=1)) if valid.size > 1 else 0.0
    return CiReport(se=se, ci=normal_interval(original.psi_hat, se, level, scale), scale=scale,
                    method='bootstrap', level=level, psi_hat=original.psi_hat,
                    failures=failed, replicates=B)
