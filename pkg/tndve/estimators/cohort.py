"""
Cohort estimators: odds-ratio difference-in-differences (outcome modeling and IPW)
and the naive standardization comparator.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..data import CohortDataset
from ..errors import DegenerateData, DegenerateEstimand
from ..models import FittedGlm, fit_logistic, fit_multinomial3, predict_prob
from .base import EstimateResult, ModelSpec, odds, resolve_spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NuisanceCohort:
    """Cohort nuisance fits.

    ratio: model for mu_{2,0}(X)/mu_{1,0}(X) (logistic among V=0, Y!=0, or multinomial)
    pi1:   Pr[V = 1 | Y = 1, X]
    full:  multinomial Pr[Y = y | V, X] for standardization
    """
    spec: ModelSpec
    ratio: Optional[FittedGlm] = None
    pi1_model: Optional[FittedGlm] = None
    full: Optional[FittedGlm] = None

    def mu_ratio0(self, x: np.ndarray) -> np.ndarray:
        if self.ratio.family == 'multinomial3':
            probs = predict_prob(self.ratio, self.spec.multinomial.matrix(x, 0.0))
            return probs[:, 2] / probs[:, 1]
        return odds(predict_prob(self.ratio, self.spec.ratio.matrix(x)))

    def pi1(self, x: np.ndarray) -> np.ndarray:
        return predict_prob(self.pi1_model, self.spec.propensity.matrix(x))

    def mu_full(self, x: np.ndarray, v) -> np.ndarray:
        """(n, 3) class probabilities at vaccination v."""
        return predict_prob(self.full, self.spec.multinomial.matrix(x, v))

    def diagnostics(self) -> dict:
        out = {}
        for name, model in (('ratio', self.ratio), ('pi1', self.pi1_model), ('multinomial', self.full)):
            if model is not None:
                out[name] = model.diagnostics()
        return out


def _require_records(data: CohortDataset) -> None:
    if data.n == 0:
        raise DegenerateData("empty cohort dataset")


def _vaccinated_cases(data: CohortDataset) -> float:
    num = float(np.sum((data.v == 1) & (data.y == 2)))
    if num <= 0:
        raise DegenerateEstimand("no vaccinated test-positive records")
    return num


# =====================================
# Nuisance fitting
# =====================================

def fit_ratio_model(data: CohortDataset, spec: ModelSpec) -> FittedGlm:
    """Model for the unvaccinated ratio mu_{2,0}(X)/mu_{1,0}(X)."""
    if spec.ratio_model == 'multinomial':
        return fit_multinomial3(spec.multinomial.matrix(data.x, data.v), data.y,
                                terms=spec.multinomial.terms)
    tested0 = (data.v == 0) & (data.y != 0)
    if len(np.unique(data.y[tested0])) < 2:
        raise DegenerateData("unvaccinated tested records lack a test-positive or a test-negative")
    return fit_logistic(spec.ratio.matrix(data.x[tested0]), (data.y[tested0] == 2).astype(int),
                        terms=spec.ratio.terms)


def fit_pi1_model(data: CohortDataset, spec: ModelSpec) -> FittedGlm:
    """Logistic regression of V on the propensity design among test-negatives (Y = 1)."""
    negatives = data.y == 1
    if len(np.unique(data.v[negatives])) < 2:
        raise DegenerateData("test-negative records are all vaccinated or all unvaccinated")
    return fit_logistic(spec.propensity.matrix(data.x[negatives]), data.v[negatives],
                        terms=spec.propensity.terms)


def fit_full_multinomial(data: CohortDataset, spec: ModelSpec) -> FittedGlm:
    return fit_multinomial3(spec.multinomial.matrix(data.x, data.v), data.y,
                            terms=spec.multinomial.terms)


# =====================================
# Difference-in-differences estimators
# =====================================

def estimate_cohort_did_om(data: CohortDataset, spec: Optional[ModelSpec] = None) -> EstimateResult:
    """sum V 1(Y=2) / sum V 1(Y=1) mu_{2,0}(X)/mu_{1,0}(X)"""
    _require_records(data)
    spec = resolve_spec(spec, data.covariate_dim)
    num = _vaccinated_cases(data)
    if not np.any((data.v == 1) & (data.y == 1)):
        raise DegenerateEstimand("no vaccinated test-negative records")
    nuisance = NuisanceCohort(spec=spec, ratio=fit_ratio_model(data, spec))
    den = float(np.sum((data.v == 1) * (data.y == 1) * nuisance.mu_ratio0(data.x)))
    if den <= 0:
        raise DegenerateEstimand("DiD outcome-modeling denominator is not positive")
    return EstimateResult(psi_hat=num / den, method='cohort_did_om', n=data.n,
                          nuisance_diagnostics=nuisance.diagnostics())


def estimate_cohort_did_ipw(data: CohortDataset, spec: Optional[ModelSpec] = None) -> EstimateResult:
    """sum V 1(Y=2) / sum (1-V) 1(Y=2) pi1(X)/(1 - pi1(X))"""
    _require_records(data)
    spec = resolve_spec(spec, data.covariate_dim)
    num = _vaccinated_cases(data)
    if not np.any((data.v == 0) & (data.y == 2)):
        raise DegenerateEstimand("no unvaccinated test-positive records")
    nuisance = NuisanceCohort(spec=spec, pi1_model=fit_pi1_model(data, spec))
    den = float(np.sum((data.v == 0) * (data.y == 2) * odds(nuisance.pi1(data.x))))
    if den <= 0:
        raise DegenerateEstimand("DiD IPW denominator is not positive")
    return EstimateResult(psi_hat=num / den, method='cohort_did_ipw', n=data.n,
                          nuisance_diagnostics=nuisance.diagnostics())


# =====================================
# Standardization
# =====================================

def estimate_standardized(data: CohortDataset, spec: Optional[ModelSpec] = None,
                          covariates: Optional[Sequence] = None) -> EstimateResult:
    """Naive standardization: sum_i mu_1(X_i) / sum_i mu_0(X_i), mu_v = Pr[Y=2 | V=v, X].

    Args:
        data: Cohort.
        spec: Nuisance designs; the multinomial design is used.
        covariates: Optional covariate subset (names or indices) to adjust for.
    """
    _require_records(data)
    if covariates is not None:
        data = data.select_covariates(covariates)
    spec = resolve_spec(spec, data.covariate_dim)
    nuisance = NuisanceCohort(spec=spec, full=fit_full_multinomial(data, spec))
    mu1 = nuisance.mu_full(data.x, 1.0)[:, 2]
    mu0 = nuisance.mu_full(data.x, 0.0)[:, 2]
    return EstimateResult(psi_hat=float(np.sum(mu1) / np.sum(mu0)), method='cohort_standardized',
                          n=data.n, nuisance_diagnostics=nuisance.diagnostics())
