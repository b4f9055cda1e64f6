"""
Estimators of the risk ratio among the vaccinated from TND and cohort data.
"""

from .base import EstimateResult, ModelSpec, resolve_spec
from .tnd import (
    NuisanceTnd, DrSolution, fit_tnd_nuisance, solve_dr_or_function,
    estimate_tnd_logit, estimate_tnd_om, estimate_tnd_ipw, estimate_tnd_dr,
    conditional_odds_ratio,
)
from .cohort import (
    NuisanceCohort, estimate_cohort_did_om, estimate_cohort_did_ipw, estimate_standardized,
)
from .udid import UdidNuisance, fit_udid_nuisance, estimate_cohort_udid_dr
from .tilt import TiltSpec, estimate_tilted
from .registry import AVAILABLE_ESTIMATORS, EstimatorEntry, get_estimator, estimators_for, run_estimator

__all__ = [
    'EstimateResult', 'ModelSpec', 'resolve_spec',
    'NuisanceTnd', 'DrSolution', 'fit_tnd_nuisance', 'solve_dr_or_function',
    'estimate_tnd_logit', 'estimate_tnd_om', 'estimate_tnd_ipw', 'estimate_tnd_dr',
    'conditional_odds_ratio',
    'NuisanceCohort', 'estimate_cohort_did_om', 'estimate_cohort_did_ipw', 'estimate_standardized',
    'UdidNuisance', 'fit_udid_nuisance', 'estimate_cohort_udid_dr',
    'TiltSpec', 'estimate_tilted',
    'AVAILABLE_ESTIMATORS', 'EstimatorEntry', 'get_estimator', 'estimators_for', 'run_estimator',
]
