"""
tndve: vaccine effectiveness from test-negative designs under odds-ratio equi-confounding.

Estimators of the risk ratio among the vaccinated from test-negative and cohort data,
sandwich and bootstrap inference, tilt sensitivity analysis, and the simulation study.
"""

__version__ = '0.1.0'

from .errors import TndveError
from .data import CohortDataset, TndDataset, ColumnSchema, load_csv, restrict_to_tested
from .estimators import EstimateResult, ModelSpec, TiltSpec, run_estimator
from .inference import sandwich_ci, bootstrap_ci
from .sensitivity import sensitivity_curve
from .simulation import ScenarioParams, scenario_params, generate_cohort, true_psi
from .montecarlo import StudyConfig, run_study

__all__ = [
    '__version__', 'TndveError',
    'CohortDataset', 'TndDataset', 'ColumnSchema', 'load_csv', 'restrict_to_tested',
    'EstimateResult', 'ModelSpec', 'TiltSpec', 'run_estimator',
    'sandwich_ci', 'bootstrap_ci', 'sensitivity_curve',
    'ScenarioParams', 'scenario_params', 'generate_cohort', 'true_psi',
    'StudyConfig', 'run_study',
]
