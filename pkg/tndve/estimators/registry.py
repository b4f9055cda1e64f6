"""
Registry of estimators addressable by name (CLI, inference, Monte Carlo).
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from ..data import CohortDataset
from ..errors import ConfigError
from .base import EstimateResult, ModelSpec
from .cohort import estimate_cohort_did_ipw, estimate_cohort_did_om, estimate_standardized
from .tilt import TiltSpec, estimate_tilted
from .tnd import estimate_tnd_dr, estimate_tnd_ipw, estimate_tnd_logit, estimate_tnd_om
from .udid import estimate_cohort_udid_dr


@dataclass(frozen=True)
class EstimatorEntry:
    name: str
    design: str  # 'tnd' or 'cohort'
    func: Callable[..., EstimateResult]
    description: str


AVAILABLE_ESTIMATORS: Dict[str, EstimatorEntry] = {
    'logit': EstimatorEntry('logit', 'tnd', estimate_tnd_logit,
                            'logistic regression of Y* on (1, V, X)'),
    'om': EstimatorEntry('om', 'tnd', estimate_tnd_om, 'TND outcome modeling'),
    'ipw': EstimatorEntry('ipw', 'tnd', estimate_tnd_ipw, 'TND inverse probability weighting'),
    'dr': EstimatorEntry('dr', 'tnd', estimate_tnd_dr, 'TND doubly robust'),
    'tilted-om': EstimatorEntry('tilted-om', 'tnd', estimate_tilted,
                                'TND outcome modeling under an exponential tilt'),
    'did-om': EstimatorEntry('did-om', 'cohort', estimate_cohort_did_om,
                             'cohort odds-ratio DiD, outcome modeling'),
    'did-ipw': EstimatorEntry('did-ipw', 'cohort', estimate_cohort_did_ipw,
                              'cohort odds-ratio DiD, IPW'),
    'standardized': EstimatorEntry('standardized', 'cohort', estimate_standardized,
                                   'cohort standardization (no unmeasured-confounding adjustment)'),
    'udid-dr': EstimatorEntry('udid-dr', 'cohort', estimate_cohort_udid_dr,
                              'cohort doubly robust universal DiD'),
}


def get_estimator(name: str) -> EstimatorEntry:
    try:
        return AVAILABLE_ESTIMATORS[name]
    except KeyError:
        raise ConfigError(f"Unknown estimator {name!r}; available: {', '.join(AVAILABLE_ESTIMATORS)}")


def estimators_for(design: str) -> List[str]:
    return [name for name, entry in AVAILABLE_ESTIMATORS.items() if entry.design == design]


def run_estimator(name: str, data, spec: Optional[ModelSpec] = None,
                  tilt: Optional[TiltSpec] = None, covariates=None) -> EstimateResult:
    """Dispatch by name, checking the dataset kind matches the estimator's design."""
    entry = get_estimator(name)
    kind = 'cohort' if isinstance(data, CohortDataset) else 'tnd'
    if kind != entry.design:
        raise ConfigError(f"estimator {name!r} needs {entry.design} data, got {kind} data")
    if name == 'tilted-om':
        return entry.func(data, spec, tilt=tilt)
    if name == 'standardized' and covariates is not None:
        return entry.func(data, spec, covariates=covariates)
    return entry.func(data, spec)
