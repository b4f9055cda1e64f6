"""
Sensitivity curves for departures from odds-ratio equi-confounding.

Each grid value eta gives one tilted outcome-modeling estimate, with a confidence
interval that treats eta as known.
"""
import concurrent.futures
import logging
from dataclasses import dataclass
from typing import List, Optional

import pandas as pd

from .data import TndDataset
from .errors import ConfigError, TndveError
from .estimators import EstimateResult, ModelSpec, TiltSpec, estimate_tilted, fit_tnd_nuisance
from .inference import bootstrap_ci, sandwich_ci

logger = logging.getLogger(__name__)

CI_METHODS = ('sandwich', 'bootstrap', 'none')


@dataclass(frozen=True)
class SensitivityPoint:
    eta: float
    result: Optional[EstimateResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _evaluate_point(data: TndDataset, spec: Optional[ModelSpec], tilt: TiltSpec, nuisance,
                    ci: str, level: float, scale: str, B: int, seed: int) -> SensitivityPoint:
    try:
        result = estimate_tilted(data, spec, tilt, nuisance=nuisance)
        if ci == 'sandwich':
            result = result.with_ci(sandwich_ci(data, 'tilted-om', spec, level=level, scale=scale, tilt=tilt))
        elif ci == 'bootstrap':
            report = bootstrap_ci(data, 'tilted-om', spec, B=B, seed=seed, level=level, scale=scale,
                                  workers=1, tilt=tilt)
            result = result.with_ci(report)
        return SensitivityPoint(eta=tilt.eta, result=result)
    except TndveError as e:
        logger.warning(f"sensitivity point eta={tilt.eta:g} failed: {e}")
        return SensitivityPoint(eta=tilt.eta, error=f"{e.code}: {e}")


def sensitivity_curve(data: TndDataset, spec: Optional[ModelSpec] = None,
                      tilt: Optional[TiltSpec] = None, ci: str = 'sandwich', level: float = 0.95,
                      scale: str = 'natural', B: int = 500, seed: int = 0,
                      workers: Optional[int] = None) -> List[SensitivityPoint]:
    """Tilted estimates over ``tilt.grid``, ordered by eta.

    Args:
        data: TND dataset.
        spec: Nuisance designs.
        tilt: Grid and sensitivity function q(X).
        ci: 'sandwich', 'bootstrap' or 'none'.
        level: Confidence level.
        scale: Interval scale.
        B: Bootstrap replicates per point.
        seed: Bootstrap seed; every point reuses the same resamples.
        workers: Thread count across grid points.

    Returns:
        One SensitivityPoint per grid value; failed points carry an error string.
    """
    if ci not in CI_METHODS:
        raise ConfigError(f"ci must be one of {CI_METHODS}, got {ci!r}")
    tilt = tilt or TiltSpec()
    try:
        nuisance = fit_tnd_nuisance(data, spec, propensity=False)
    except TndveError as e:
        logger.warning(f"outcome model failed; every sensitivity point fails: {e}")
        return [SensitivityPoint(eta=eta, error=f"{e.code}: {e}") for eta in tilt.grid]

    points = [None] * len(tilt.grid)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_slot = {
            executor.submit(_evaluate_point, data, spec, tilt.at(eta), nuisance,
                            ci, level, scale, B, seed): slot
            for slot, eta in enumerate(tilt.grid)
        }
        for future in concurrent.futures.as_completed(future_to_slot):
            points[future_to_slot[future]] = future.result()
    logger.info(f"sensitivity curve: {sum(p.ok for p in points)} of {len(points)} points estimated")
    return points


def curve_to_frame(points: List[SensitivityPoint]) -> pd.DataFrame:
    """Columns eta, psi, ve, se, ci_lower, ci_upper, error."""
    rows = []
    for p in points:
        r = p.result
        lower, upper = r.ci if r is not None and r.ci is not None else (None, None)
        rows.append({
            'eta': p.eta,
            'psi': r.psi_hat if r is not None else None,
            've': r.ve_hat if r is not None else None,
            'se': r.se if r is not None else None,
            'ci_lower': lower,
            'ci_upper': upper,
            'error': p.error,
        })
    return pd.DataFrame(rows, columns=['eta', 'psi', 've', 'se', 'ci_lower', 'ci_upper', 'error'])
