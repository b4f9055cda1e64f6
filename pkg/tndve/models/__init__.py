"""
Nuisance regressions (logistic, multinomial) and estimating-equation root solving.
"""

from .design import DesignSpec
from .glm import (
    FittedGlm, fit_logistic, fit_multinomial3, predict_prob, logistic_probs, multinomial_probs,
    logistic_loglik, logistic_score_rows, multinomial_loglik, multinomial_score_rows,
)
from .roots import RootResult, numeric_jacobian, solve_moment_equations

__all__ = [
    'DesignSpec',
    'FittedGlm', 'fit_logistic', 'fit_multinomial3', 'predict_prob', 'logistic_probs', 'multinomial_probs',
    'logistic_loglik', 'logistic_score_rows', 'multinomial_loglik', 'multinomial_score_rows',
    'RootResult', 'numeric_jacobian', 'solve_moment_equations',
]
