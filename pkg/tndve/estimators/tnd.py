"""
Test-negative design estimators of the risk ratio among the vaccinated.

    logit  exp(coefficient on V) from a logistic regression of Y* on (1, V, X)
    om     sum V Y* / sum V (1 - Y*) mu0/(1 - mu0)
    ipw    sum V Y* / sum (1 - V) Y* pi0/(1 - pi0)
    dr     sum V Y* / sum V Y* exp(-phi(X)), phi solving the odds-ratio moment equation
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import TndDataset
from ..errors import DegenerateData, DegenerateEstimand
from ..models import DesignSpec, FittedGlm, fit_logistic, predict_prob, solve_moment_equations
from .base import EstimateResult, ModelSpec, odds, resolve_spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NuisanceTnd:
    """Fitted outcome model mu*_v(X) and extended propensity model pi*_0(X)."""
    outcome: Optional[FittedGlm]
    propensity: Optional[FittedGlm]
    spec: ModelSpec

    def mu(self, x: np.ndarray, v) -> np.ndarray:
        """Pr[Y* = 1 | S = 1, V = v, X]"""
        return predict_prob(self.outcome, self.spec.outcome.matrix(x, v))

    def mu0(self, x: np.ndarray) -> np.ndarray:
        return self.mu(x, 0.0)

    def mu1(self, x: np.ndarray) -> np.ndarray:
        return self.mu(x, 1.0)

    def pi0(self, x: np.ndarray) -> np.ndarray:
        """Pr[V = 1 | S = 1, Y* = 0, X]"""
        return predict_prob(self.propensity, self.spec.propensity.matrix(x))

    def diagnostics(self) -> dict:
        out = {}
        if self.outcome is not None:
            out['outcome'] = self.outcome.diagnostics()
        if self.propensity is not None:
            out['propensity'] = self.propensity.diagnostics()
        return out


@dataclass(frozen=True, eq=False)
class DrSolution:
    """Coefficients of the log conditional odds-ratio function phi(X) = basis(X)' theta."""
    theta: np.ndarray
    basis: DesignSpec
    residual_norm: float
    iterations: int
    method: str

    def phi(self, x: np.ndarray) -> np.ndarray:
        return self.basis.matrix(x) @ self.theta


# =====================================
# Nuisance fitting
# =====================================

def _require_records(data: TndDataset) -> None:
    if data.n == 0:
        raise DegenerateData("empty TND dataset")


def fit_outcome_model(data: TndDataset, spec: ModelSpec) -> FittedGlm:
    X = spec.outcome.matrix(data.x, data.v)
    return fit_logistic(X, data.y_star, terms=spec.outcome.terms)


def fit_propensity_model(data: TndDataset, spec: ModelSpec) -> FittedGlm:
    """Logistic regression of V on the propensity design among test-negatives (Y* = 0)."""
    controls = data.y_star == 0
    if not controls.any():
        raise DegenerateData("no test-negative records to fit the propensity model")
    if len(np.unique(data.v[controls])) < 2:
        raise DegenerateData("test-negatives are all vaccinated or all unvaccinated")
    X = spec.propensity.matrix(data.x[controls])
    return fit_logistic(X, data.v[controls], terms=spec.propensity.terms)


def fit_tnd_nuisance(data: TndDataset, spec: Optional[ModelSpec] = None,
                     outcome: bool = True, propensity: bool = True) -> NuisanceTnd:
    _require_records(data)
    spec = resolve_spec(spec, data.covariate_dim)
    return NuisanceTnd(
        outcome=fit_outcome_model(data, spec) if outcome else None,
        propensity=fit_propensity_model(data, spec) if propensity else None,
        spec=spec,
    )


def _vaccinated_cases(data: TndDataset) -> float:
    num = float(np.sum(data.v * data.y_star))
    if num <= 0:
        raise DegenerateEstimand("no vaccinated test-positive records")
    return num


# =====================================
# Logistic regression estimator
# =====================================

def estimate_tnd_logit(data: TndDataset, spec: Optional[ModelSpec] = None) -> EstimateResult:
    """Conventional estimator: exp of the V coefficient in a logistic regression of Y*."""
    _require_records(data)
    spec = resolve_spec(spec, data.covariate_dim)
    empty = [cell for cell, k in data.cell_counts().items() if k == 0]
    if empty:
        raise DegenerateData(f"empty V x Y* cell(s) {empty}")
    model = fit_logistic(spec.logit.matrix(data.x, data.v), data.y_star, terms=spec.logit.terms)
    gamma_v = model.coefficients[spec.logit.index_of('v')]
    return EstimateResult(psi_hat=float(np.exp(gamma_v)), method='tnd_logit', n=data.n,
                          nuisance_diagnostics={'logit': model.diagnostics()})


# =====================================
# Outcome-modeling estimator
# =====================================

def om_denominator_terms(data: TndDataset, nuisance: NuisanceTnd,
                         tilt: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-record terms of the outcome-modeling denominator.

    ``plugin`` form: V (1 - Y*) odds(mu0(X)); ``fitted`` form: V (1 - mu1(X)) odds(mu0(X)).
    ``tilt`` multiplies each term by exp(eta q(X_i)).
    """
    odds0 = odds(nuisance.mu0(data.x))
    if nuisance.spec.om_form == 'fitted':
        terms = data.v * (1.0 - nuisance.mu1(data.x)) * odds0
    else:
        terms = data.v * (1 - data.y_star) * odds0
    if tilt is not None:
        terms = terms * tilt
    return terms


def estimate_tnd_om(data: TndDataset, spec: Optional[ModelSpec] = None,
                    nuisance: Optional[NuisanceTnd] = None) -> EstimateResult:
    """Plug-in outcome-modeling estimator with mu*_0 from the pooled (1,V,X,VX) fit."""
    _require_records(data)
    num = _vaccinated_cases(data)
    if not np.any((data.v == 1) & (data.y_star == 0)):
        raise DegenerateEstimand("no vaccinated test-negative records")
    if nuisance is None:
        nuisance = fit_tnd_nuisance(data, spec, propensity=False)
    den = float(np.sum(om_denominator_terms(data, nuisance)))
    if den <= 0:
        raise DegenerateEstimand("outcome-modeling denominator is not positive")
    return EstimateResult(psi_hat=num / den, method='tnd_om', n=data.n,
                          nuisance_diagnostics=nuisance.diagnostics())


# =====================================
# Inverse probability weighting estimator
# =====================================

def estimate_tnd_ipw(data: TndDataset, spec: Optional[ModelSpec] = None,
                     nuisance: Optional[NuisanceTnd] = None) -> EstimateResult:
    """Odds-weighted unvaccinated cases with pi*_0 fit among test-negatives."""
    _require_records(data)
    num = _vaccinated_cases(data)
    if not np.any((data.v == 0) & (data.y_star == 1)):
        raise DegenerateEstimand("no unvaccinated test-positive records")
    if nuisance is None:
        nuisance = fit_tnd_nuisance(data, spec, outcome=False)
    den = float(np.sum((1 - data.v) * data.y_star * odds(nuisance.pi0(data.x))))
    if den <= 0:
        raise DegenerateEstimand("IPW denominator is not positive")
    return EstimateResult(psi_hat=num / den, method='tnd_ipw', n=data.n,
                          nuisance_diagnostics=nuisance.diagnostics())


# =====================================
# Doubly robust estimator
# =====================================

def dr_moment_rows(data: TndDataset, nuisance: NuisanceTnd, basis: DesignSpec,
                   theta: np.ndarray, pi0: Optional[np.ndarray] = None,
                   mu0: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-record rows B(X)(V - pi0) exp(-phi(X) V Y*) (Y* - mu0), phi = B(X)' theta."""
    B = basis.matrix(data.x)
    pi0 = nuisance.pi0(data.x) if pi0 is None else pi0
    mu0 = nuisance.mu0(data.x) if mu0 is None else mu0
    phi = B @ theta
    weight = (data.v - pi0) * np.exp(-phi * data.v * data.y_star) * (data.y_star - mu0)
    return B * weight[:, None]


def solve_dr_or_function(data: TndDataset, nuisance: NuisanceTnd,
                         basis: Optional[DesignSpec] = None) -> DrSolution:
    """Solve the empirical odds-ratio moment equation for phi(X) = (1, X)' theta.

    Starts at theta = 0; damped Newton with a numeric Jacobian, falling back to a
    root bracket in the intercept-only case.
    """
    basis = basis or nuisance.spec.odds_ratio
    pi0 = nuisance.pi0(data.x)
    mu0 = nuisance.mu0(data.x)

    def mean_moment(theta):
        return dr_moment_rows(data, nuisance, basis, theta, pi0=pi0, mu0=mu0).mean(axis=0)

    root = solve_moment_equations(mean_moment, np.zeros(basis.width))
    logger.debug(f"DR odds-ratio solve: theta={root.theta}, residual={root.residual_norm:.3g}")
    return DrSolution(theta=root.theta, basis=basis, residual_norm=root.residual_norm,
                      iterations=root.iterations, method=root.method)


def estimate_tnd_dr(data: TndDataset, spec: Optional[ModelSpec] = None,
                    nuisance: Optional[NuisanceTnd] = None) -> EstimateResult:
    """Doubly robust estimator: consistent if either mu*_0 or pi*_0 is correctly specified."""
    _require_records(data)
    num = _vaccinated_cases(data)
    if nuisance is None:
        nuisance = fit_tnd_nuisance(data, spec)
    solution = solve_dr_or_function(data, nuisance)
    cases = data.v * data.y_star
    den = float(np.sum(cases * np.exp(-solution.phi(data.x))))
    if den <= 0:
        raise DegenerateEstimand("doubly robust denominator is not positive")
    diagnostics = nuisance.diagnostics()
    diagnostics['odds_ratio'] = {
        'theta': solution.theta.tolist(),
        'residual_norm': solution.residual_norm,
        'iterations': solution.iterations,
        'method': solution.method,
    }
    return EstimateResult(psi_hat=num / den, method='tnd_dr', n=data.n,
                          nuisance_diagnostics=diagnostics)


# =====================================
# Effect modification
# =====================================

def conditional_odds_ratio(data: TndDataset, x_rows: np.ndarray,
                           spec: Optional[ModelSpec] = None, method: str = 'om') -> np.ndarray:
    """Conditional odds ratio Psi*(x) at covariate rows.

    ``om`` uses the pooled outcome model, odds(mu1(x)) / odds(mu0(x));
    ``dr`` uses exp(phi(x)) from the doubly robust moment solve.
    """
    x_rows = np.asarray(x_rows, dtype=float).reshape(-1, data.covariate_dim)
    if method == 'dr':
        nuisance = fit_tnd_nuisance(data, spec)
        return np.exp(solve_dr_or_function(data, nuisance).phi(x_rows))
    nuisance = fit_tnd_nuisance(data, spec, propensity=False)
    return odds(nuisance.mu1(x_rows)) / odds(nuisance.mu0(x_rows))
