"""
Standard errors and confidence intervals: sandwich and nonparametric bootstrap.
"""

from .stacks import StackedEE, STACK_BUILDERS, build_stack
from .sandwich import CiReport, CI_SCALES, normal_interval, sandwich_variance, sandwich_ci
from .bootstrap import bootstrap_replicate, bootstrap_estimates, bootstrap_ci

__all__ = [
    'StackedEE', 'STACK_BUILDERS', 'build_stack',
    'CiReport', 'CI_SCALES', 'normal_interval', 'sandwich_variance', 'sandwich_ci',
    'bootstrap_replicate', 'bootstrap_estimates', 'bootstrap_ci',
]
