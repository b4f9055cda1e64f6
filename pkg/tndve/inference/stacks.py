"""
Stacked estimating equations for every registered estimator.

Each builder refits the estimator's nuisance models, then returns a StackedEE whose
parameter vector is (nuisance coefficients..., psi) and whose row function gives the
per-record residuals. At the fitted parameters the residual means are zero, so the
sandwich variance of the last component is the variance of psi_hat.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..data import CohortDataset, TndDataset
from ..errors import ConfigError
from ..estimators import (
    ModelSpec, TiltSpec, estimate_cohort_did_ipw, estimate_cohort_did_om, estimate_cohort_udid_dr,
    estimate_standardized, estimate_tilted, estimate_tnd_dr, estimate_tnd_ipw, estimate_tnd_logit,
    estimate_tnd_om, fit_tnd_nuisance, fit_udid_nuisance, resolve_spec, solve_dr_or_function,
)
from ..estimators.cohort import fit_pi1_model, fit_ratio_model, fit_full_multinomial
from ..estimators.udid import effect_denominator_terms, normalization_rows, odds_ratio_rows, xi_from
from ..models import (
    fit_logistic, logistic_probs, logistic_score_rows, multinomial_probs, multinomial_score_rows,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StackedEE:
    """Per-record residual function psi(O; theta) with theta = (nu, Psi).

    Args:
        rows_fn: Maps theta to the (n, k) residual matrix.
        theta_hat: Fitted parameter vector; its mean residual is zero.
        labels: Name of each parameter block entry.
        n: Record count.
        psi_index: Position of Psi in theta.
        psi_slope: Closed-form derivative of the mean effect row with respect to Psi,
            as a function of theta (None when only the numeric Jacobian is available).
    """
    rows_fn: Callable[[np.ndarray], np.ndarray]
    theta_hat: np.ndarray
    labels: List[str] = field(default_factory=list)
    n: int = 0
    psi_index: int = -1
    psi_slope: Optional[Callable[[np.ndarray], float]] = None

    @property
    def dim(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def psi_hat(self) -> float:
        return float(self.theta_hat[self.psi_index])

    def rows(self, theta: Optional[np.ndarray] = None) -> np.ndarray:
        return self.rows_fn(self.theta_hat if theta is None else np.asarray(theta, dtype=float))

    def mean(self, theta: Optional[np.ndarray] = None) -> np.ndarray:
        return self.rows(theta).mean(axis=0)

    def effect_slope(self, theta: Optional[np.ndarray] = None) -> Optional[float]:
        if self.psi_slope is None:
            return None
        return float(self.psi_slope(self.theta_hat if theta is None else np.asarray(theta, dtype=float)))


def _labels(prefix: str, k: int) -> List[str]:
    return [f'{prefix}[{j}]' for j in range(k)]


def _odds(p):
    return p / (1.0 - p)


# =====================================
# Test-negative design stacks
# =====================================

def _stack_logit(data: TndDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    """Logistic score rows, then Psi = exp(gamma_V) as a deterministic row."""
    spec = resolve_spec(spec, data.covariate_dim)
    result = estimate_tnd_logit(data, spec)
    X = spec.logit.matrix(data.x, data.v)
    gamma = fit_logistic(X, data.y_star, terms=spec.logit.terms).coefficients
    iv = spec.logit.index_of('v')
    k = X.shape[1]

    def rows(theta):
        score = logistic_score_rows(X, data.y_star, theta[:k])
        effect = np.full(data.n, np.exp(theta[iv]) - theta[k])
        return np.column_stack([score, effect])

    return StackedEE(rows, np.append(gamma, result.psi_hat), _labels('gamma', k) + ['psi'], data.n)


def _om_rows_factory(data: TndDataset, spec: ModelSpec, tilt_weights: np.ndarray):
    X = spec.outcome.matrix(data.x, data.v)
    X0 = spec.outcome.matrix(data.x, 0.0)
    X1 = spec.outcome.matrix(data.x, 1.0)
    k = X.shape[1]
    fitted = spec.om_form == 'fitted'

    def base(beta):
        odds0 = _odds(logistic_probs(X0, beta))
        if fitted:
            return data.v * (1.0 - logistic_probs(X1, beta)) * odds0 * tilt_weights
        return data.v * (1 - data.y_star) * odds0 * tilt_weights

    def rows(theta):
        beta, psi = theta[:k], theta[k]
        effect = data.v * data.y_star - psi * base(beta)
        return np.column_stack([logistic_score_rows(X, data.y_star, beta), effect])

    def slope(theta):
        return -float(np.mean(base(theta[:k])))

    return rows, slope, k


def _stack_om(data: TndDataset, spec: Optional[ModelSpec] = None,
              tilt: Optional[TiltSpec] = None, **_) -> StackedEE:
    """Outcome-model score rows plus the (optionally tilted) effect row with known eta."""
    spec = resolve_spec(spec, data.covariate_dim)
    nuisance = fit_tnd_nuisance(data, spec, propensity=False)
    if tilt is not None and tilt.eta != 0.0:
        result = estimate_tilted(data, spec, tilt, nuisance=nuisance)
        weights = tilt.weights(data)
    else:
        result = estimate_tnd_om(data, spec, nuisance=nuisance)
        weights = np.ones(data.n)
    rows, slope, k = _om_rows_factory(data, spec, weights)
    theta = np.append(nuisance.outcome.coefficients, result.psi_hat)
    return StackedEE(rows, theta, _labels('beta', k) + ['psi'], data.n, psi_slope=slope)


def _stack_ipw(data: TndDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    spec = resolve_spec(spec, data.covariate_dim)
    nuisance = fit_tnd_nuisance(data, spec, outcome=False)
    result = estimate_tnd_ipw(data, spec, nuisance=nuisance)
    Xp = spec.propensity.matrix(data.x)
    controls = (data.y_star == 0).astype(float)
    k = Xp.shape[1]

    def weighted_cases(alpha):
        return (1 - data.v) * data.y_star * _odds(logistic_probs(Xp, alpha))

    def rows(theta):
        alpha, psi = theta[:k], theta[k]
        effect = data.v * data.y_star - psi * weighted_cases(alpha)
        return np.column_stack([logistic_score_rows(Xp, data.v, alpha, w=controls), effect])

    def slope(theta):
        return -float(np.mean(weighted_cases(theta[:k])))

    theta = np.append(nuisance.propensity.coefficients, result.psi_hat)
    return StackedEE(rows, theta, _labels('alpha', k) + ['psi'], data.n, psi_slope=slope)


def _stack_dr(data: TndDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    """Outcome, propensity and odds-ratio moment rows, then the effect row."""
    spec = resolve_spec(spec, data.covariate_dim)
    nuisance = fit_tnd_nuisance(data, spec)
    result = estimate_tnd_dr(data, spec, nuisance=nuisance)
    solution = solve_dr_or_function(data, nuisance)
    X = spec.outcome.matrix(data.x, data.v)
    X0 = spec.outcome.matrix(data.x, 0.0)
    Xp = spec.propensity.matrix(data.x)
    B = spec.odds_ratio.matrix(data.x)
    controls = (data.y_star == 0).astype(float)
    ko, kp, kb = X.shape[1], Xp.shape[1], B.shape[1]
    cases = data.v * data.y_star

    def rows(theta):
        beta = theta[:ko]
        alpha = theta[ko:ko + kp]
        gamma = theta[ko + kp:ko + kp + kb]
        psi = theta[-1]
        mu0 = logistic_probs(X0, beta)
        pi0 = logistic_probs(Xp, alpha)
        phi = B @ gamma
        moment = (data.v - pi0) * np.exp(-phi * cases) * (data.y_star - mu0)
        effect = cases - psi * cases * np.exp(-phi)
        return np.column_stack([
            logistic_score_rows(X, data.y_star, beta),
            logistic_score_rows(Xp, data.v, alpha, w=controls),
            B * moment[:, None],
            effect,
        ])

    theta = np.concatenate([nuisance.outcome.coefficients, nuisance.propensity.coefficients,
                            solution.theta, [result.psi_hat]])
    labels = _labels('beta', ko) + _labels('alpha', kp) + _labels('phi', kb) + ['psi']
    return StackedEE(rows, theta, labels, data.n)


# =====================================
# Cohort stacks
# =====================================

def _stack_did_om(data: CohortDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    spec = resolve_spec(spec, data.covariate_dim)
    result = estimate_cohort_did_om(data, spec)
    model = fit_ratio_model(data, spec)
    negatives_v = data.v * (data.y == 1)
    cases_v = data.v * (data.y == 2)

    if spec.ratio_model == 'multinomial':
        Xm = spec.multinomial.matrix(data.x, data.v)
        Xm0 = spec.multinomial.matrix(data.x, 0.0)
        k = model.coefficients.shape[0]

        def rows(theta):
            probs = multinomial_probs(Xm0, theta[:k])
            effect = cases_v - theta[k] * negatives_v * probs[:, 2] / probs[:, 1]
            return np.column_stack([multinomial_score_rows(Xm, data.y, theta[:k]), effect])
    else:
        Xr = spec.ratio.matrix(data.x)
        tested0 = ((data.v == 0) & (data.y != 0)).astype(float)
        positive = (data.y == 2).astype(float)
        k = Xr.shape[1]

        def rows(theta):
            effect = cases_v - theta[k] * negatives_v * _odds(logistic_probs(Xr, theta[:k]))
            return np.column_stack([logistic_score_rows(Xr, positive, theta[:k], w=tested0), effect])

    theta = np.append(model.coefficients, result.psi_hat)
    return StackedEE(rows, theta, _labels('ratio', k) + ['psi'], data.n)


def _stack_did_ipw(data: CohortDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    spec = resolve_spec(spec, data.covariate_dim)
    result = estimate_cohort_did_ipw(data, spec)
    model = fit_pi1_model(data, spec)
    Xp = spec.propensity.matrix(data.x)
    negatives = (data.y == 1).astype(float)
    k = Xp.shape[1]

    def rows(theta):
        pi1 = logistic_probs(Xp, theta[:k])
        effect = data.v * (data.y == 2) - theta[k] * (1 - data.v) * (data.y == 2) * _odds(pi1)
        return np.column_stack([logistic_score_rows(Xp, data.v, theta[:k], w=negatives), effect])

    theta = np.append(model.coefficients, result.psi_hat)
    return StackedEE(rows, theta, _labels('alpha', k) + ['psi'], data.n)


def _stack_standardized(data: CohortDataset, spec: Optional[ModelSpec] = None,
                        covariates: Optional[Sequence] = None, **_) -> StackedEE:
    if covariates is not None:
        data = data.select_covariates(covariates)
    spec = resolve_spec(spec, data.covariate_dim)
    result = estimate_standardized(data, spec)
    model = fit_full_multinomial(data, spec)
    Xm = spec.multinomial.matrix(data.x, data.v)
    X0 = spec.multinomial.matrix(data.x, 0.0)
    X1 = spec.multinomial.matrix(data.x, 1.0)
    k = model.coefficients.shape[0]

    def rows(theta):
        beta = theta[:k]
        effect = multinomial_probs(X1, beta)[:, 2] - theta[k] * multinomial_probs(X0, beta)[:, 2]
        return np.column_stack([multinomial_score_rows(Xm, data.y, beta), effect])

    theta = np.append(model.coefficients, result.psi_hat)
    return StackedEE(rows, theta, _labels('mu', k) + ['psi'], data.n)


def _stack_udid(data: CohortDataset, spec: Optional[ModelSpec] = None, **_) -> StackedEE:
    """Steps 1-5 of the UDiD procedure as estimating equations, then the effect row."""
    spec = resolve_spec(spec, data.covariate_dim)
    result = estimate_cohort_udid_dr(data, spec)
    nuisance = fit_udid_nuisance(data, spec)
    B = nuisance.basis.matrix(data.x)
    v, y = data.v, data.y
    kb = B.shape[1]
    km = 2 * kb
    unvacc = (v == 0).astype(float)
    negatives = (y == 1).astype(float)
    cuts = np.cumsum([km, kb, kb, kb, kb])

    def rows(theta):
        beta_mu = theta[:cuts[0]]
        alpha = theta[cuts[0]:cuts[1]]
        kappa3 = theta[cuts[1]:cuts[2]]
        gamma4 = theta[cuts[2]:cuts[3]]
        kappa5 = theta[cuts[3]:cuts[4]]
        psi = theta[cuts[4]]
        mu = multinomial_probs(B, beta_mu)
        b = B @ gamma4
        den = effect_denominator_terms(v, y, B @ kappa5, b, xi_from(mu, b))
        return np.column_stack([
            multinomial_score_rows(B, y, beta_mu, w=unvacc),
            logistic_score_rows(B, v, alpha, w=negatives),
            normalization_rows(B, v, y, kappa3, B @ alpha, additive=False),
            odds_ratio_rows(B, v, y, gamma4, B @ kappa3, mu),
            normalization_rows(B, v, y, kappa5, b, additive=True),
            v * (y == 2) - psi * den,
        ])

    theta = np.concatenate([nuisance.mu_dagger.coefficients, nuisance.pi_dagger.coefficients,
                            nuisance.eta_dagger, nuisance.beta_dr, nuisance.eta_dr, [result.psi_hat]])
    labels = (_labels('mu', km) + _labels('pi', kb) + _labels('eta_dagger', kb)
              + _labels('b', kb) + _labels('eta', kb) + ['psi'])
    return StackedEE(rows, theta, labels, data.n)


STACK_BUILDERS: Dict[str, Callable[..., StackedEE]] = {
    'logit': _stack_logit,
    'om': _stack_om,
    'ipw': _stack_ipw,
    'dr': _stack_dr,
    'tilted-om': _stack_om,
    'did-om': _stack_did_om,
    'did-ipw': _stack_did_ipw,
    'standardized': _stack_standardized,
    'udid-dr': _stack_udid,
}


def build_stack(name: str, data, spec: Optional[ModelSpec] = None,
                tilt: Optional[TiltSpec] = None, covariates=None) -> StackedEE:
    """Stacked estimating equations for a registered estimator."""
    try:
        builder = STACK_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"No stacked estimating equations for estimator {name!r}")
    stack = builder(data, spec, tilt=tilt if name == 'tilted-om' else None, covariates=covariates)
    logger.debug(f"built {name} stack with {stack.dim} parameters over {stack.n} records")
    return stack
