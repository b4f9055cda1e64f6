"""
Database package for Monte Carlo study runs.
"""

from .db import SessionLocal, init_db, drop_db, configure
from .models import StudyRun, ReplicateEstimate, StudySummary
from .db_utils import (
    create_study_run, finish_study_run,
    add_replicate_estimates, add_study_summaries,
    get_run_summaries, get_run_stats,
)

__all__ = [
    'SessionLocal', 'init_db', 'drop_db', 'configure',
    'StudyRun', 'ReplicateEstimate', 'StudySummary',
    'create_study_run', 'finish_study_run',
    'add_replicate_estimates', 'add_study_summaries',
    'get_run_summaries', 'get_run_stats',
]
