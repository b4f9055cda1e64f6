"""
Doubly robust cohort estimator under universal difference-in-differences.

Vaccination is modeled through the generalized odds-ratio form
    logit Pr[V = 1 | Y0 = y, X] = eta(X) + beta(y, X),  beta(0, X) = 0,
with beta(1, X) = beta(2, X) = b(X) and eta, b linear in the basis (1, X).

Procedure:
    1. mu(y | X): multinomial regression of Y on the basis among V = 0
    2. pi(1, X): logistic regression of V on the basis among Y = 1
    3. eta from the normalization E[(1 - V) / (1 - pi(Y, X))] = 1, using pi(1, X) for Y != 0
    4. b from the doubly robust odds-ratio moment with S(Y) = 1(Y = 1)
    5. eta re-solved from the normalization with b plugged in
    6. psi = sum V 1(Y=2) / sum [(1 - V) e^{eta + b 1(Y!=0)} (1(Y=2) - xi(X)) + V xi(X)]
       with xi(X) = e^b mu(2|X) / (mu(0|X) + (mu(1|X) + mu(2|X)) e^b)

For vaccinated records with Y != 1 the untreated outcome is 0 or 2, unobserved;
the step-4 weight exp(-beta(Y0, X)) is replaced by its conditional mean under the
working outcome model, (mu0 + mu2) / (mu0 + mu2 e^b).
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from ..data import CohortDataset
from ..errors import DegenerateEstimand
from ..models import DesignSpec, FittedGlm, fit_logistic, fit_multinomial3, predict_prob, solve_moment_equations
from .base import EstimateResult, ModelSpec, resolve_spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class UdidNuisance:
    """Working models and solved coefficients of the six-step procedure."""
    basis: DesignSpec
    mu_dagger: FittedGlm
    pi_dagger: FittedGlm
    eta_dagger: np.ndarray
    beta_dr: np.ndarray
    eta_dr: np.ndarray
    residuals: dict

    def mu(self, x: np.ndarray) -> np.ndarray:
        """(n, 3) working probabilities Pr[Y = y | V = 0, X]."""
        return predict_prob(self.mu_dagger, self.basis.matrix(x))

    def b(self, x: np.ndarray) -> np.ndarray:
        """Log odds-ratio function beta(y, X) for y != 0."""
        return self.basis.matrix(x) @ self.beta_dr

    def eta(self, x: np.ndarray) -> np.ndarray:
        return self.basis.matrix(x) @ self.eta_dr

    def xi(self, x: np.ndarray) -> np.ndarray:
        """Pr[Y0 = 2 | V = 1, X] implied by the working model and b."""
        return xi_from(self.mu(x), self.b(x))

    def diagnostics(self) -> dict:
        return {
            'mu_dagger': self.mu_dagger.diagnostics(),
            'pi_dagger': self.pi_dagger.diagnostics(),
            'beta_dr': self.beta_dr.tolist(),
            'eta_dr': self.eta_dr.tolist(),
            'residuals': dict(self.residuals),
        }


# =====================================
# Estimating functions
# =====================================

def normalization_rows(B: np.ndarray, v: np.ndarray, y: np.ndarray, kappa: np.ndarray,
                       nonzero_lp: np.ndarray, additive: bool) -> np.ndarray:
    """Rows B(X) [(1 - V)(1 + exp(lp(Y, X))) - 1].

    With ``additive`` false (step 3), lp = B kappa for Y = 0 and ``nonzero_lp`` for Y != 0;
    with ``additive`` true (step 5), lp = B kappa + 1(Y != 0) nonzero_lp.
    """
    eta = B @ kappa
    if additive:
        lp = eta + np.where(y != 0, nonzero_lp, 0.0)
    else:
        lp = np.where(y == 0, eta, nonzero_lp)
    return B * ((1 - v) * (1.0 + np.exp(lp)) - 1.0)[:, None]


def odds_ratio_rows(B: np.ndarray, v: np.ndarray, y: np.ndarray, theta: np.ndarray,
                    eta: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Doubly robust rows B(X)(V - expit(eta)) w(Y, X) (1(Y=1) - mu(1|X)) for b = B theta.

    This is the centred form S - E[S | V = 0, X] with S = 1(Y = 1), whose conditional mean
    is mu(1|X); w is exp(-b) for observed Y0 = 1 and the imputed mean weight otherwise.
    """
    b = B @ theta
    eb = np.exp(b)
    imputed = (mu[:, 0] + mu[:, 2]) / (mu[:, 0] + mu[:, 2] * eb)
    w = np.where(v == 0, 1.0, np.where(y == 1, np.exp(-b), imputed))
    resid = (v - expit(eta)) * w * ((y == 1) - mu[:, 1])
    return B * resid[:, None]


def effect_denominator_terms(v: np.ndarray, y: np.ndarray, eta: np.ndarray, b: np.ndarray,
                             xi: np.ndarray) -> np.ndarray:
    return (1 - v) * np.exp(eta + b * (y != 0)) * ((y == 2) - xi) + v * xi


def xi_from(mu: np.ndarray, b: np.ndarray) -> np.ndarray:
    eb = np.exp(b)
    return eb * mu[:, 2] / (mu[:, 0] + (mu[:, 1] + mu[:, 2]) * eb)


# =====================================
# Procedure
# =====================================

def fit_udid_nuisance(data: CohortDataset, spec: Optional[ModelSpec] = None) -> UdidNuisance:
    spec = resolve_spec(spec, data.covariate_dim)
    basis = spec.udid
    B = basis.matrix(data.x)
    v, y = data.v, data.y
    n = data.n

    # 1
    unvacc = v == 0
    if len(np.unique(y[unvacc])) < 3:
        raise DegenerateEstimand("unvaccinated records must show all three outcome levels")
    mu_dagger = fit_multinomial3(B[unvacc], y[unvacc], terms=basis.terms)
    mu = predict_prob(mu_dagger, B)

    # 2
    negatives = y == 1
    if len(np.unique(v[negatives])) < 2:
        raise DegenerateEstimand("test-negative records are all vaccinated or all unvaccinated")
    pi_dagger = fit_logistic(B[negatives], v[negatives], terms=basis.terms)
    lp_pi = B @ pi_dagger.coefficients

    # 3
    step3 = solve_moment_equations(
        lambda k: normalization_rows(B, v, y, k, lp_pi, additive=False).sum(axis=0) / n,
        np.zeros(basis.width), step=3)
    eta_dagger = step3.theta

    # 4
    eta3 = B @ eta_dagger
    step4 = solve_moment_equations(
        lambda t: odds_ratio_rows(B, v, y, t, eta3, mu).sum(axis=0) / n,
        np.zeros(basis.width), step=4)
    beta_dr = step4.theta

    # 5
    b = B @ beta_dr
    step5 = solve_moment_equations(
        lambda k: normalization_rows(B, v, y, k, b, additive=True).sum(axis=0) / n,
        eta_dagger, step=5)

    logger.debug(f"UDiD: eta_dagger={eta_dagger}, beta_dr={beta_dr}, eta_dr={step5.theta}")
    return UdidNuisance(
        basis=basis, mu_dagger=mu_dagger, pi_dagger=pi_dagger,
        eta_dagger=eta_dagger, beta_dr=beta_dr, eta_dr=step5.theta,
        residuals={'step3': step3.residual_norm, 'step4': step4.residual_norm,
                   'step5': step5.residual_norm},
    )


def estimate_cohort_udid_dr(data: CohortDataset, spec: Optional[ModelSpec] = None) -> EstimateResult:
    """Doubly robust universal difference-in-differences estimator (steps 1-6)."""
    if data.n == 0:
        raise DegenerateEstimand("empty cohort dataset")
    num = float(np.sum((data.v == 1) & (data.y == 2)))
    if num <= 0:
        raise DegenerateEstimand("no vaccinated test-positive records")
    nuisance = fit_udid_nuisance(data, spec)
    B = nuisance.basis.matrix(data.x)
    b = B @ nuisance.beta_dr
    xi = xi_from(nuisance.mu(data.x), b)
    # 6
    den = float(np.sum(effect_denominator_terms(data.v, data.y, B @ nuisance.eta_dr, b, xi)))
    if den <= 0:
        raise DegenerateEstimand("UDiD denominator is not positive")
    return EstimateResult(psi_hat=num / den, method='cohort_udid_dr', n=data.n,
                          nuisance_diagnostics=nuisance.diagnostics())
