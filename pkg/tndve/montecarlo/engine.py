"""
Replication engine: generate cohorts, run the estimator roster on each replicate and
summarize bias, Monte Carlo SE and coverage per (scenario, misspecification, estimator).

Replicates are the unit of parallelism. Each replicate draws from streams keyed by
(seed, replicate, tag) and lands in its own slot, so results do not depend on the
worker count.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..data import restrict_to_tested
from ..errors import ConfigError, TndveError
from ..estimators import ModelSpec, run_estimator
from ..inference import bootstrap_ci, sandwich_ci
from ..models import DesignSpec
from ..simulation import (
    MISSPEC_VARIANTS, SCENARIO_PRESETS, GeneratedCohort, ScenarioParams, TruthValues,
    generate_cohort, scenario_params, true_psi,
)

logger = logging.getLogger(__name__)

CI_METHODS = ('sandwich', 'bootstrap', 'none')
AUX_REFERENCES = ('psi_symptomatic', 'psi_ratio', 'psi_conditional_or')


# =====================================
# Estimator roster
# =====================================

@dataclass(frozen=True)
class RosterEntry:
    label: str
    display: str
    estimator: str   # registry name
    view: str        # 'tested', 'cohort' or 'cohort_u'
    spec: Optional[ModelSpec] = None
    covariates: Optional[Tuple[str, ...]] = None


# (1, V, X, VX, U) for the standardization that measures U
_MEASURED_U = ModelSpec(multinomial=DesignSpec.parse('1 + v + x0 + v:x0 + x1'))

ROSTER: Dict[str, RosterEntry] = {
    'tnd_logit': RosterEntry('tnd_logit', 'TND, logit', 'logit', 'tested'),
    'tnd_om': RosterEntry('tnd_om', 'TND, om', 'om', 'tested'),
    'tnd_ipw': RosterEntry('tnd_ipw', 'TND, ipw', 'ipw', 'tested'),
    'tnd_dr': RosterEntry('tnd_dr', 'TND, dr', 'dr', 'tested'),
    'did_om': RosterEntry('did_om', 'DiD', 'did-om', 'cohort'),
    'cohort_u': RosterEntry('cohort_u', 'cohort, U measured', 'standardized', 'cohort_u', spec=_MEASURED_U),
    'cohort': RosterEntry('cohort', 'cohort, U unmeasured', 'standardized', 'cohort', covariates=('x',)),
    'did_ipw': RosterEntry('did_ipw', 'DiD, ipw', 'did-ipw', 'cohort'),
    'udid_dr': RosterEntry('udid_dr', 'UDiD, dr', 'udid-dr', 'cohort'),
}

HEADLINE_ROSTER: Tuple[str, ...] = ('tnd_logit', 'tnd_om', 'tnd_ipw', 'tnd_dr', 'did_om', 'cohort_u', 'cohort')


def _view(gen: GeneratedCohort, view: str):
    if view == 'tested':
        return restrict_to_tested(gen.cohort)
    if view == 'cohort_u':
        return gen.with_measured_u()
    return gen.cohort


# =====================================
# Configuration and results
# =====================================

@dataclass
class StudyConfig:
    """Monte Carlo study settings.

    Args:
        scenarios: Preset ids (ignored when ``custom`` is given).
        reps: Replicates per (scenario, misspecification).
        estimators: Roster labels, reported in this order.
        seed: Master seed.
        misspec: Misspecification variants to run for every scenario.
        ci: 'sandwich', 'bootstrap' or 'none'.
        level: Confidence level.
        ci_scale: 'natural' or 'log'.
        boot_b: Bootstrap replicates when ci = 'bootstrap'.
        n: Population size override.
        workers: Process count; 1 runs in-process.
        truth_method: Passed to true_psi.
        n_oracle: Monte Carlo oracle size.
        custom: Custom ScenarioParams run instead of the presets.
    """
    scenarios: Tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    reps: int = 1000
    estimators: Tuple[str, ...] = HEADLINE_ROSTER
    seed: int = 20240101
    misspec: Tuple[str, ...] = ('none',)
    ci: str = 'sandwich'
    level: float = 0.95
    ci_scale: str = 'natural'
    boot_b: int = 200
    n: Optional[int] = None
    workers: int = 1
    truth_method: str = 'auto'
    n_oracle: int = 2_000_000
    custom: Optional[ScenarioParams] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> 'StudyConfig':
        self.scenarios = tuple(int(s) for s in self.scenarios)
        self.estimators = tuple(self.estimators)
        self.misspec = tuple([self.misspec] if isinstance(self.misspec, str) else self.misspec)
        if int(self.reps) < 1:
            raise ConfigError(f"replicate count must be at least 1, got {self.reps}")
        if not self.estimators:
            raise ConfigError("estimator list is empty")
        unknown = [e for e in self.estimators if e not in ROSTER]
        if unknown:
            raise ConfigError(f"Unknown estimators {unknown}; available: {', '.join(ROSTER)}")
        if self.custom is None:
            if not self.scenarios:
                raise ConfigError("no scenarios selected")
            bad = [s for s in self.scenarios if s not in SCENARIO_PRESETS]
            if bad:
                raise ConfigError(f"Unknown scenarios {bad}")
        for m in self.misspec:
            if m not in MISSPEC_VARIANTS:
                raise ConfigError(f"misspec must be among {MISSPEC_VARIANTS}, got {m!r}")
        if self.ci not in CI_METHODS:
            raise ConfigError(f"ci must be one of {CI_METHODS}, got {self.ci!r}")
        if self.n is not None and int(self.n) < 1:
            raise ConfigError(f"population size must be positive, got {self.n}")
        self.workers = max(1, int(self.workers or 1))
        return self

    def settings(self) -> List[ScenarioParams]:
        """ScenarioParams for every (scenario, misspecification) pair, in run order."""
        if self.custom is not None:
            out = [replace(self.custom, misspec=m) for m in self.misspec]
        else:
            out = [scenario_params(s, m) for s in self.scenarios for m in self.misspec]
        if self.n is not None:
            out = [replace(p, n=int(self.n)) for p in out]
        return out


@dataclass(frozen=True)
class McSummary:
    """Aggregate over successful replicates of one estimator in one setting."""
    scenario: Optional[int]
    misspec: str
    estimator: str
    display: str
    truth: float
    mean_psi: float
    bias: float
    mc_se: float
    coverage: Optional[float]
    failures: int
    n_success: int
    n_ci: int
    aux: Dict[str, Dict[str, Optional[float]]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        row = {
            'scenario': self.scenario,
            'misspec': self.misspec,
            'estimator': self.estimator,
            'display': self.display,
            'truth': self.truth,
            'mean_psi': self.mean_psi,
            'bias': self.bias,
            'mc_se': self.mc_se,
            'coverage': self.coverage,
            'failures': self.failures,
            'n_success': self.n_success,
            'n_ci': self.n_ci,
        }
        for name in AUX_REFERENCES:
            values = self.aux.get(name, {})
            row[f'truth_{name}'] = values.get('truth')
            row[f'bias_{name}'] = values.get('bias')
            row[f'coverage_{name}'] = values.get('coverage')
        return row


@dataclass
class StudyResult:
    config: StudyConfig
    summaries: List[McSummary]
    replicates: pd.DataFrame
    truths: Dict[Tuple[Optional[int], str], TruthValues]
    elapsed: float = 0.0


# =====================================
# Replicate worker
# =====================================

def _run_replicate(args) -> List[Dict[str, Any]]:
    """One replicate: generate a cohort and run every requested estimator on it."""
    params, seed, replicate, labels, ci, level, scale, boot_b = args
    gen = generate_cohort(params, seed, replicate)
    views = {}
    rows = []
    for label in labels:
        entry = ROSTER[label]
        row = {'scenario': params.scenario_id, 'misspec': params.misspec, 'replicate': replicate,
               'estimator': label, 'psi': np.nan, 'se': np.nan, 'ci_lower': np.nan,
               'ci_upper': np.nan, 'error': None}
        try:
            if entry.view not in views:
                views[entry.view] = _view(gen, entry.view)
            data = views[entry.view]
            result = run_estimator(entry.estimator, data, entry.spec, covariates=entry.covariates)
            row['psi'] = result.psi_hat
            if ci == 'sandwich':
                report = sandwich_ci(data, entry.estimator, entry.spec, level=level, scale=scale,
                                     covariates=entry.covariates)
            elif ci == 'bootstrap':
                report = bootstrap_ci(data, entry.estimator, entry.spec, B=boot_b, seed=seed * 100_003 + replicate,
                                      level=level, scale=scale, workers=1, covariates=entry.covariates)
            else:
                report = None
            if report is not None:
                row['se'] = report.se
                row['ci_lower'], row['ci_upper'] = report.ci
        except TndveError as e:
            row['error'] = e.code
        rows.append(row)
    return rows


def _summarize(frame: pd.DataFrame, params: ScenarioParams, truth: TruthValues,
               labels: Tuple[str, ...]) -> List[McSummary]:
    summaries = []
    for label in labels:
        sub = frame[frame['estimator'] == label]
        ok = sub[sub['psi'].notna()]
        psi = ok['psi'].to_numpy(dtype=float)
        with_ci = ok[ok['ci_lower'].notna()]
        lower = with_ci['ci_lower'].to_numpy(dtype=float)
        upper = with_ci['ci_upper'].to_numpy(dtype=float)

        def coverage(value):
            return float(np.mean((lower <= value) & (value <= upper))) if len(lower) else None

        mean_psi = float(np.mean(psi)) if len(psi) else float('nan')
        aux = {}
        for name in AUX_REFERENCES:
            ref = truth.reference(name)
            aux[name] = {'truth': ref, 'bias': mean_psi - ref, 'coverage': coverage(ref)}
        summaries.append(McSummary(
            scenario=params.scenario_id,
            misspec=params.misspec,
            estimator=label,
            display=ROSTER[label].display,
            truth=truth.psi_true,
            mean_psi=mean_psi,
            bias=mean_psi - truth.psi_true,
            mc_se=float(np.std(psi, ddof=1)) if len(psi) > 1 else float('nan'),
            coverage=coverage(truth.psi_true),
            failures=int(len(sub) - len(ok)),
            n_success=int(len(ok)),
            n_ci=int(len(with_ci)),
            aux=aux,
        ))
    return summaries


# =====================================
# Study driver
# =====================================

def run_study(config: StudyConfig) -> StudyResult:
    """Run every (scenario, misspecification) setting of the study.

    Returns:
        StudyResult with one McSummary per (setting, estimator) and the per-replicate
        estimates (one row per replicate x estimator) in replicate order.
    """
    config.validate()
    start = time.time()
    summaries: List[McSummary] = []
    frames = []
    truths = {}
    for params in config.settings():
        truth = true_psi(params, method=config.truth_method, n_oracle=config.n_oracle)
        truths[(params.scenario_id, params.misspec)] = truth
        logger.info(f"{params.label}: {config.reps} replicates, truth psi={truth.psi_true:.5f} "
                    f"({truth.method})")
        args = [(params, config.seed, r, config.estimators, config.ci, config.level,
                 config.ci_scale, config.boot_b) for r in range(config.reps)]
        slots: List[Optional[List[Dict[str, Any]]]] = [None] * config.reps
        if config.workers == 1:
            for r, a in enumerate(args):
                slots[r] = _run_replicate(a)
        else:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                futures = {executor.submit(_run_replicate, a): r for r, a in enumerate(args)}
                for future in as_completed(futures):
                    slots[futures[future]] = future.result()
        frame = pd.DataFrame([row for rows in slots for row in rows])
        failed = int(frame['psi'].isna().sum())
        if failed:
            logger.warning(f"{params.label}: {failed} estimator runs failed across replicates")
        frames.append(frame)
        block = _summarize(frame, params, truth, config.estimators)
        summaries.extend(block)
        for s in block:
            cov = 'n/a' if s.coverage is None else f"{s.coverage:.3f}"
            logger.info(f"  {s.display:22s} bias={s.bias:+.4f} se={s.mc_se:.4f} coverage={cov}")
    replicates = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    elapsed = time.time() - start
    logger.info(f"study finished in {elapsed:.1f} s")
    return StudyResult(config=config, summaries=summaries, replicates=replicates,
                       truths=truths, elapsed=elapsed)

