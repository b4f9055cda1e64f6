from datetime import datetime

from sqlalchemy import JSON, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class StudyRun(Base):
    __tablename__ = 'study_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(64), nullable=False)
    seed = Column(Integer)
    config = Column(JSON)  # resolved configuration
    status = Column(String(32), default='running')
    error_message = Column(Text)
    version = Column(String(32))
    started_at = Column(DateTime, default=datetime.utcnow)
    finished_at = Column(DateTime)
    duration_seconds = Column(Float)

    estimates = relationship("ReplicateEstimate", back_populates="run", cascade="all, delete-orphan")
    summaries = relationship("StudySummary", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<StudyRun(id={self.id}, command='{self.command}', status='{self.status}')>"


class ReplicateEstimate(Base):
    __tablename__ = 'replicate_estimates'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('study_runs.id'), nullable=False)
    scenario = Column(Integer)
    misspec = Column(String(16), default='none')
    replicate = Column(Integer, nullable=False)
    estimator = Column(String(32), nullable=False)
    psi = Column(Float)
    se = Column(Float)
    ci_lower = Column(Float)
    ci_upper = Column(Float)
    error = Column(String(64))

    run = relationship("StudyRun", back_populates="estimates")

    def __repr__(self):
        return f"<ReplicateEstimate(scenario={self.scenario}, replicate={self.replicate}, estimator='{self.estimator}')>"


class StudySummary(Base):
    __tablename__ = 'study_summaries'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('study_runs.id'), nullable=False)
    scenario = Column(Integer)
    misspec = Column(String(16), default='none')
    estimator = Column(String(32), nullable=False)
    truth = Column(Float)
    mean_psi = Column(Float)
    bias = Column(Float)
    mc_se = Column(Float)
    coverage = Column(Float)
    failures = Column(Integer, default=0)
    n_success = Column(Integer)
    aux = Column(JSON)  # bias/coverage against the auxiliary reference truths

    run = relationship("StudyRun", back_populates="summaries")

    def __repr__(self):
        return f"<StudySummary(scenario={self.scenario}, estimator='{self.estimator}', bias={self.bias})>"
