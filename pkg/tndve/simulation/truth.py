"""
True values of the estimands implied by ScenarioParams.

    psi_true           Pr[Y1 = 2 | V = 1] / Pr[Y0 = 2 | V = 1]
    psi_symptomatic    Pr[I1 = 2 | V = 1] / Pr[I0 = 2 | V = 1]
    psi_ratio          exp(beta2v + tau2v) / exp(beta1v + tau1v)
    psi_conditional_or exp(beta2v - beta1v + tau2v - tau1v), the V coefficient of
                       the tested-population logistic model (at X = 0)
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import ConfigError
from .dgp import generate_cohort, illness_probabilities, testing_probability, vaccination_probability
from .scenarios import ScenarioParams

logger = logging.getLogger(__name__)

TRUTH_METHODS = ('auto', 'closed', 'montecarlo', 'quadrature')
ORACLE_SEED = 8_675_309
ORACLE_CHUNK = 500_000
QUADRATURE_NODES = 64


@dataclass(frozen=True)
class TruthValues:
    psi_true: float
    psi_conditional_or: float
    psi_symptomatic: float
    psi_ratio: float
    method: str
    mc_se: Optional[float] = None

    def reference(self, name: str) -> float:
        if name not in ('psi_true', 'psi_conditional_or', 'psi_symptomatic', 'psi_ratio'):
            raise ConfigError(f"unknown reference truth {name!r}")
        return getattr(self, name)

    def to_dict(self) -> Dict:
        return asdict(self)


# =====================================
# Quadrature
# =====================================

def _grid(nodes: int = QUADRATURE_NODES):
    """Tensor Gauss-Legendre rule on (0,1)^2, X split at 0.5."""
    t, w = leggauss(nodes)
    half_x = np.concatenate([0.25 * (t + 1.0), 0.5 + 0.25 * (t + 1.0)])
    half_w = np.concatenate([0.25 * w, 0.25 * w])
    u = 0.5 * (t + 1.0)
    uw = 0.5 * w
    X, U = np.meshgrid(half_x, u, indexing='ij')
    W = np.outer(half_w, uw)
    return X.ravel(), U.ravel(), W.ravel()


def expected_vaccination_rate(params: ScenarioParams, nodes: int = QUADRATURE_NODES) -> float:
    """E[Pr(V = 1 | X, U)] over X, U ~ Unif(0, 1)."""
    x, u, w = _grid(nodes)
    return float(np.sum(w * vaccination_probability(params, x, u)))


def _quadrature_ratio(params: ScenarioParams, tested: bool, nodes: int) -> float:
    x, u, w = _grid(nodes)
    pv = vaccination_probability(params, x, u)
    num = illness_probabilities(params, 1, x, u)[1]
    den = illness_probabilities(params, 0, x, u)[1]
    if tested:
        num = num * testing_probability(params, 2, 1, x, u)
        den = den * testing_probability(params, 2, 0, x, u)
    return float(np.sum(w * pv * num) / np.sum(w * pv * den))


# =====================================
# Monte Carlo oracle
# =====================================

def _montecarlo_psi(params: ScenarioParams, n_oracle: int, seed: int):
    """Ratio of potential-outcome case counts among the vaccinated, with a delta-method SE."""
    sums = np.zeros(3)  # a, b, ab
    done = 0
    chunk = 0
    while done < n_oracle:
        size = min(ORACLE_CHUNK, n_oracle - done)
        gen = generate_cohort(params, seed, replicate=chunk, n=size)
        vacc = gen.cohort.v == 1
        a = (gen.y1 == 2) & vacc
        b = (gen.y0 == 2) & vacc
        sums += [a.sum(), b.sum(), (a & b).sum()]
        done += size
        chunk += 1
    ea, eb, eab = sums / n_oracle
    if eb <= 0:
        raise ConfigError("Monte Carlo oracle saw no untreated-branch cases among the vaccinated")
    ratio = ea / eb
    var = ea - 2.0 * ratio * eab + ratio ** 2 * eb - (ea - ratio * eb) ** 2
    se = float(np.sqrt(max(var, 0.0) / n_oracle) / eb)
    return float(ratio), se


# =====================================
# Entry point
# =====================================

def true_psi(params: ScenarioParams, method: str = 'auto', n_oracle: int = 2_000_000,
             seed: int = ORACLE_SEED, nodes: int = QUADRATURE_NODES) -> TruthValues:
    """All reference truths for a scenario.

    Args:
        params: Scenario parameters.
        method: 'closed' (needs beta2vx = 0), 'montecarlo', 'quadrature', or 'auto'
            (closed form when available, Monte Carlo otherwise).
        n_oracle: Population size of the Monte Carlo oracle.
        seed: Oracle seed, distinct from study seeds.
        nodes: Gauss-Legendre nodes per half interval.
    """
    if method not in TRUTH_METHODS:
        raise ConfigError(f"truth method must be one of {TRUTH_METHODS}, got {method!r}")
    homogeneous = params.beta2vx == 0.0
    if method == 'auto':
        method = 'closed' if homogeneous else 'montecarlo'
    if method == 'closed' and not homogeneous:
        raise ConfigError("closed-form truth needs beta2vx = 0")

    mc_se = None
    if method == 'closed':
        psi = float(np.exp(params.beta2v + params.tau2v))
    elif method == 'quadrature':
        psi = _quadrature_ratio(params, tested=True, nodes=nodes)
    else:
        psi, mc_se = _montecarlo_psi(params, n_oracle, seed)
        logger.info(f"{params.label}: Monte Carlo truth {psi:.5f} (SE {mc_se:.5f}, N={n_oracle})")

    if homogeneous:
        symptomatic = float(np.exp(params.beta2v))
    else:
        symptomatic = _quadrature_ratio(params, tested=False, nodes=nodes)
    return TruthValues(
        psi_true=psi,
        psi_conditional_or=float(np.exp(params.beta2v - params.beta1v + params.tau2v - params.tau1v)),
        psi_symptomatic=symptomatic,
        psi_ratio=float(np.exp(params.beta2v + params.tau2v) / np.exp(params.beta1v + params.tau1v)),
        method=method,
        mc_se=mc_se,
    )
