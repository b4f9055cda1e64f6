"""
Cohort generation from ScenarioParams.

Every record draws one uniform per variable tag from the keyed stream
(seed, replicate, tag). The illness and testing uniforms are shared by the two
potential-outcome branches (common random numbers), so y0 and y1 differ only
where vaccination changes the probabilities.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from ..data import CohortDataset
from ..errors import InvalidProbability
from .rng import uniforms
from .scenarios import ScenarioParams

logger = logging.getLogger(__name__)

PROB_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class GeneratedCohort:
    """Observed cohort plus latent columns kept for truth computations only."""
    cohort: CohortDataset
    u: np.ndarray
    i: np.ndarray
    t: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    params: ScenarioParams
    seed: int
    replicate: int = 0

    @property
    def n(self) -> int:
        return self.cohort.n

    def with_measured_u(self) -> CohortDataset:
        """The cohort with U appended as a covariate."""
        return self.cohort.with_covariates(self.u[:, None], ['u'])

    def to_frame(self, latent: bool = False) -> pd.DataFrame:
        frame = self.cohort.to_frame()
        if latent:
            frame['u'] = self.u
            frame['i'] = self.i
            frame['t'] = self.t
            frame['y0'] = self.y0
            frame['y1'] = self.y1
        return frame


# =====================================
# Model pieces
# =====================================

def vaccination_probability(params: ScenarioParams, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    xv = (x > 0.5).astype(float) if params.ps_misspecified else x
    return expit(params.alpha0 + params.alpha_x * xv + params.alpha_u * u)


def illness_probabilities(params: ScenarioParams, v, x: np.ndarray,
                          u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(p1, p2): probabilities of test-negative and target illness under vaccination v."""
    p1 = np.exp(params.beta10 + params.beta1v * v + params.beta1x * x
                + params.beta1vx * v * x + params.beta1u * u)
    x2 = (x - 0.5) ** 2 if params.om_misspecified else x
    p2 = np.exp(params.beta20 + params.beta2v * v + params.beta2x * x2
                + params.beta2vx * v * x + params.beta2u * u)
    return p1, p2


def testing_probability(params: ScenarioParams, illness: int, v, x: np.ndarray,
                        u: np.ndarray) -> np.ndarray:
    """Pr[T = 1 | I = illness, V = v, X, U] for illness in {1, 2}."""
    if illness == 1:
        lp = params.tau1 + params.tau1v * v
    else:
        lp = params.tau2 + params.tau2v * v + params.tau2u * u
    return np.exp(lp + params.tau_x * x + params.tau_u * u)


def _check(prob: np.ndarray, what: str, branch: int) -> None:
    worst = float(np.max(prob)) if prob.size else 0.0
    if worst > 1.0 + PROB_SLACK:
        raise InvalidProbability(f"{what} reaches {worst:.4f} > 1 in the v={branch} branch")


def _branch(params: ScenarioParams, v: int, x, u, u_illness, u_test):
    p1, p2 = illness_probabilities(params, v, x, u)
    _check(p1 + p2, "p1 + p2", v)
    t1 = testing_probability(params, 1, v, x, u)
    t2 = testing_probability(params, 2, v, x, u)
    _check(t1, "test-negative testing probability", v)
    _check(t2, "target testing probability", v)
    i = np.where(u_illness < p1, 1, np.where(u_illness < p1 + p2, 2, 0))
    p_test = np.where(i == 1, t1, np.where(i == 2, t2, 0.0))
    t = (u_test < p_test).astype(np.int64)
    return i.astype(np.int64), t


# =====================================
# Generation
# =====================================

def generate_cohort(params: ScenarioParams, seed: int, replicate: int = 0,
                    n: Optional[int] = None) -> GeneratedCohort:
    """Draw one population of ``n`` (default params.n) records.

    Args:
        params: Scenario parameters.
        seed: Master seed.
        replicate: Replicate index, part of every stream key.
        n: Population size override.

    Returns:
        GeneratedCohort whose observed (i, t, y) come from the branch of the drawn V.
    """
    n = int(params.n if n is None else n)
    x = uniforms(seed, replicate, 'x', n)
    u = uniforms(seed, replicate, 'u', n)
    v = (uniforms(seed, replicate, 'v', n) < vaccination_probability(params, x, u)).astype(np.int64)
    u_illness = uniforms(seed, replicate, 'i', n)
    u_test = uniforms(seed, replicate, 't', n)

    i0, t0 = _branch(params, 0, x, u, u_illness, u_test)
    i1, t1 = _branch(params, 1, x, u, u_illness, u_test)
    y0, y1 = i0 * t0, i1 * t1
    i = np.where(v == 1, i1, i0)
    t = np.where(v == 1, t1, t0)
    y = i * t

    cohort = CohortDataset(x=x[:, None], v=v, y=y, covariate_names=('x',))
    logger.debug(f"{params.label} replicate {replicate}: n={n}, vaccinated={v.mean():.3f}, "
                 f"tested={(y != 0).mean():.3f}")
    return GeneratedCohort(cohort=cohort, u=u, i=i, t=t, y0=y0, y1=y1,
                           params=params, seed=seed, replicate=replicate)
