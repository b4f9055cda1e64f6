"""
Structural data-generating process, scenario presets and truth oracles.
"""

from .rng import TAGS, substream, uniforms
from .scenarios import ScenarioParams, SCENARIO_PRESETS, MISSPEC_VARIANTS, scenario_params, scenario_description
from .dgp import GeneratedCohort, generate_cohort
from .truth import TruthValues, TRUTH_METHODS, true_psi, expected_vaccination_rate

__all__ = [
    'TAGS', 'substream', 'uniforms',
    'ScenarioParams', 'SCENARIO_PRESETS', 'MISSPEC_VARIANTS', 'scenario_params', 'scenario_description',
    'GeneratedCohort', 'generate_cohort',
    'TruthValues', 'TRUTH_METHODS', 'true_psi', 'expected_vaccination_rate',
]
