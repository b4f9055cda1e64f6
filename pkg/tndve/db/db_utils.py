import logging
import math
from datetime import datetime
from typing import Any, Dict, List, Optional

import pandas as pd
from sqlalchemy import func
from sqlalchemy.orm import Session

from .models import ReplicateEstimate, StudyRun, StudySummary

logger = logging.getLogger(__name__)


def _clean(value):
    """NaN and numpy scalars to plain Python values for the database."""
    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, 'item'):
        value = value.item()
        if isinstance(value, float) and math.isnan(value):
            return None
    return value


# Study runs
# 1.  open a run
def create_study_run(db: Session, command: str, seed: Optional[int], config: Dict[str, Any],
                     version: Optional[str] = None) -> StudyRun:
    """Record the start of a run with its resolved configuration."""
    try:
        run = StudyRun(command=command, seed=seed, config=config, version=version, status='running')
        db.add(run)
        db.commit()
        db.refresh(run)
        return run
    except Exception as e:
        db.rollback()
        logger.error(f"Error creating study run: {e}")
        raise


# 2.  close a run
def finish_study_run(db: Session, run_id: int, status: str = 'success',
                     error_message: Optional[str] = None) -> Optional[StudyRun]:
    try:
        run = db.query(StudyRun).filter(StudyRun.id == run_id).first()
        if run is None:
            return None
        run.status = status
        run.error_message = error_message
        run.finished_at = datetime.utcnow()
        if run.started_at is not None:
            run.duration_seconds = (run.finished_at - run.started_at).total_seconds()
        db.commit()
        db.refresh(run)
        return run
    except Exception as e:
        db.rollback()
        logger.error(f"Error finishing study run {run_id}: {e}")
        raise


# Results
# 1.  per-replicate estimates
def add_replicate_estimates(db: Session, run_id: int, replicates: pd.DataFrame) -> int:
    """Store one row per replicate x estimator; returns the number of rows added."""
    try:
        rows = [
            ReplicateEstimate(
                run_id=run_id,
                scenario=_clean(r.get('scenario')),
                misspec=r.get('misspec', 'none'),
                replicate=int(r['replicate']),
                estimator=r['estimator'],
                psi=_clean(r.get('psi')),
                se=_clean(r.get('se')),
                ci_lower=_clean(r.get('ci_lower')),
                ci_upper=_clean(r.get('ci_upper')),
                error=_clean(r.get('error')),
            )
            for r in replicates.to_dict(orient='records')
        ]
        db.add_all(rows)
        db.commit()
        return len(rows)
    except Exception as e:
        db.rollback()
        logger.error(f"Error storing replicate estimates for run {run_id}: {e}")
        raise


# 2.  summaries
def add_study_summaries(db: Session, run_id: int, summaries) -> int:
    try:
        rows = [
            StudySummary(
                run_id=run_id,
                scenario=s.scenario,
                misspec=s.misspec,
                estimator=s.estimator,
                truth=_clean(s.truth),
                mean_psi=_clean(s.mean_psi),
                bias=_clean(s.bias),
                mc_se=_clean(s.mc_se),
                coverage=_clean(s.coverage),
                failures=s.failures,
                n_success=s.n_success,
                aux={name: {k: _clean(v) for k, v in values.items()} for name, values in s.aux.items()},
            )
            for s in summaries
        ]
        db.add_all(rows)
        db.commit()
        return len(rows)
    except Exception as e:
        db.rollback()
        logger.error(f"Error storing summaries for run {run_id}: {e}")
        raise


# Queries
def get_run_summaries(db: Session, run_id: int) -> List[StudySummary]:
    try:
        return (db.query(StudySummary).filter(StudySummary.run_id == run_id)
                .order_by(StudySummary.id).all())
    except Exception as e:
        logger.error(f"Error getting summaries for run {run_id}: {e}")
        return []


def get_run_stats(db: Session, run_id: int) -> Dict[str, Any]:
    """Counts of stored estimates and failures for a run."""
    try:
        estimates = db.query(ReplicateEstimate).filter(ReplicateEstimate.run_id == run_id)
        total = estimates.count()
        failed = estimates.filter(ReplicateEstimate.error.isnot(None)).count()
        replicates = (db.query(func.count(func.distinct(ReplicateEstimate.replicate)))
                      .filter(ReplicateEstimate.run_id == run_id).scalar() or 0)
        run = db.query(StudyRun).filter(StudyRun.id == run_id).first()
        return {
            'estimates': total,
            'failed_estimates': failed,
            'replicates': replicates,
            'status': run.status if run else None,
            'duration_seconds': run.duration_seconds if run else None,
        }
    except Exception as e:
        logger.error(f"Error getting stats for run {run_id}: {e}")
        return {'estimates': 0, 'failed_estimates': 0, 'replicates': 0, 'status': None,
                'duration_seconds': None}
