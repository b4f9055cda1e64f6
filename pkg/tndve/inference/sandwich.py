"""
Sandwich standard errors from stacked estimating equations.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from ..errors import ConfigError, SingularJacobian
from ..estimators import ModelSpec, TiltSpec
from ..models import numeric_jacobian
from .stacks import StackedEE, build_stack

logger = logging.getLogger(__name__)

CI_SCALES = ('natural', 'log')
RESIDUAL_WARN = 1e-6
SLOPE_RTOL = 1e-4


@dataclass(frozen=True)
class CiReport:
    """Standard error and normal interval for psi.

    On the log scale the interval is exp(log psi_hat +/- z se / psi_hat); ``se``
    is always reported on the natural scale.
    """
    se: float
    ci: Tuple[float, float]
    scale: str
    method: str
    level: float
    psi_hat: float
    failures: int = 0
    replicates: Optional[int] = None


def check_level(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ConfigError(f"confidence level must lie in (0, 1), got {level}")
    return float(level)


def check_scale(scale: str) -> str:
    if scale not in CI_SCALES:
        raise ConfigError(f"CI scale must be one of {CI_SCALES}, got {scale!r}")
    return scale


def normal_interval(psi_hat: float, se: float, level: float = 0.95,
                    scale: str = 'natural') -> Tuple[float, float]:
    """psi_hat +/- z_{1-alpha/2} se, or its log-scale (delta method) counterpart."""
    z = norm.ppf(1.0 - (1.0 - level) / 2.0)
    if scale == 'log':
        if psi_hat <= 0:
            raise ConfigError("log-scale interval needs a positive estimate")
        half = z * se / psi_hat
        return (float(np.exp(np.log(psi_hat) - half)), float(np.exp(np.log(psi_hat) + half)))
    return (float(psi_hat - z * se), float(psi_hat + z * se))


def sandwich_variance(stack: StackedEE) -> np.ndarray:
    """Covariance of theta_hat: V1^{-1} V2 V1^{-T} / n.

    V1 is the central-difference Jacobian of the mean estimating function at
    theta_hat; V2 is the mean outer product of the residual rows.
    """
    R = stack.rows()
    n = R.shape[0]
    v1 = numeric_jacobian(stack.mean, stack.theta_hat)
    analytic = stack.effect_slope()
    if analytic is not None:
        numeric = v1[stack.psi_index, stack.psi_index]
        if abs(numeric - analytic) > SLOPE_RTOL * max(1.0, abs(analytic)):
            logger.warning(f"effect-row slope: numeric {numeric:.6g} vs closed form {analytic:.6g}")
    v2 = R.T @ R / n
    try:
        v1_inv = np.linalg.inv(v1)
    except np.linalg.LinAlgError:
        raise SingularJacobian("bread matrix of the stacked estimating equations is singular")
    if not np.all(np.isfinite(v1_inv)):
        raise SingularJacobian("bread matrix inverse is not finite")
    return v1_inv @ v2 @ v1_inv.T / n


def sandwich_ci(data, estimator: str, spec: Optional[ModelSpec] = None, level: float = 0.95,
                scale: str = 'natural', tilt: Optional[TiltSpec] = None,
                covariates=None) -> CiReport:
    """Sandwich standard error and normal interval for a registered estimator.

    Args:
        data: TND or cohort dataset matching the estimator.
        estimator: Registry name ('om', 'did-om', ...).
        spec: Nuisance designs.
        level: Confidence level.
        scale: 'natural' (default) or 'log'.
        tilt: Known tilt for 'tilted-om'.
        covariates: Covariate subset for 'standardized'.

    Returns:
        CiReport with method 'sandwich'.
    """
    level = check_level(level)
    check_scale(scale)
    stack = build_stack(estimator, data, spec, tilt=tilt, covariates=covariates)
    resid = float(np.max(np.abs(stack.mean())))
    if resid > RESIDUAL_WARN:
        logger.warning(f"{estimator}: stacked residual mean {resid:.3g} at the fitted parameters")
    cov = sandwich_variance(stack)
    var = float(cov[stack.psi_index, stack.psi_index])
    se = float(np.sqrt(max(var, 0.0)))
    psi_hat = stack.psi_hat
    return CiReport(se=se, ci=normal_interval(psi_hat, se, level, scale), scale=scale,
                    method='sandwich', level=level, psi_hat=psi_hat)
