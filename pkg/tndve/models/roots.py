"""
Root solving for estimating equations: damped Newton with a central-difference
Jacobian, and a bracketing fallback for scalar problems.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from ..errors import NotConverged, SingularJacobian

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-8
ROOT_MAX_ITER = 100
DAMPING = 0.5


@dataclass(frozen=True, eq=False)
class RootResult:
    theta: np.ndarray
    residual_norm: float
    iterations: int
    method: str


def numeric_jacobian(fun: Callable[[np.ndarray], np.ndarray], theta: np.ndarray,
                     rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with step rel_step * max(1, |theta_j|)."""
    theta = np.asarray(theta, dtype=float)
    f0 = np.asarray(fun(theta), dtype=float)
    jac = np.empty((f0.shape[0], theta.shape[0]))
    for j in range(theta.shape[0]):
        h = rel_step * max(1.0, abs(theta[j]))
        up = theta.copy()
        down = theta.copy()
        up[j] += h
        down[j] -= h
        jac[:, j] = (np.asarray(fun(up)) - np.asarray(fun(down))) / (2.0 * h)
    return jac


def _norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def solve_moment_equations(fun: Callable[[np.ndarray], np.ndarray], theta0: np.ndarray,
                           tol: float = ROOT_TOL, max_iter: int = ROOT_MAX_ITER,
                           step: Optional[int] = None, bracket_fallback: bool = True) -> RootResult:
    """Solve fun(theta) = 0 for a square system.

    Newton steps use the numeric Jacobian; a step is halved (factor 0.5) while it
    increases the residual max-norm. Scalar systems fall back to a root bracket
    (Brent's method) if Newton fails.

    Args:
        fun: Mean estimating function.
        theta0: Starting value.
        tol: Residual max-norm tolerance.
        max_iter: Newton iteration cap.
        step: Procedure step index reported in NotConverged.
        bracket_fallback: Allow the scalar fallback.
    """
    theta = np.array(theta0, dtype=float)
    try:
        return _damped_newton(fun, theta, tol, max_iter, step)
    except (NotConverged, SingularJacobian) as e:
        if theta.shape[0] != 1 or not bracket_fallback:
            raise
        logger.debug(f"Newton failed ({e}); trying bracketing fallback")
        return _bracket_scalar(fun, float(theta[0]), tol, step)


def _damped_newton(fun, theta, tol, max_iter, step) -> RootResult:
    resid = np.asarray(fun(theta), dtype=float)
    if resid.shape[0] != theta.shape[0]:
        raise SingularJacobian(f"moment system is not square ({resid.shape[0]} equations, "
                               f"{theta.shape[0]} parameters)")
    norm = _norm(resid)
    for iteration in range(1, max_iter + 1):
        if norm <= tol:
            theta, norm = _polish(fun, theta, norm)
            return RootResult(theta, norm, iteration - 1, 'newton')
        jac = numeric_jacobian(fun, theta)
        try:
            delta = np.linalg.solve(jac, -resid)
        except np.linalg.LinAlgError:
            raise SingularJacobian(f"singular Jacobian at iteration {iteration}")
        if not np.all(np.isfinite(delta)):
            raise SingularJacobian(f"non-finite Newton step at iteration {iteration}")
        t = 1.0
        while True:
            candidate = theta + t * delta
            cand_resid = np.asarray(fun(candidate), dtype=float)
            cand_norm = _norm(cand_resid)
            if np.isfinite(cand_norm) and cand_norm < norm:
                break
            t *= DAMPING
            if t < 1e-12:
                raise NotConverged(f"damped Newton stalled at residual {norm:.3g}", step=step)
        theta, resid, norm = candidate, cand_resid, cand_norm
        logger.debug(f"moment iteration {iteration}: residual={norm:.3g}")
    if norm <= tol:
        theta, norm = _polish(fun, theta, norm)
        return RootResult(theta, norm, max_iter, 'newton')
    raise NotConverged(f"residual {norm:.3g} above {tol:g} after {max_iter} iterations", step=step)


def _polish(fun, theta, norm):
    """One extra Newton step, kept only if it lowers the residual."""
    try:
        jac = numeric_jacobian(fun, theta)
        candidate = theta + np.linalg.solve(jac, -np.asarray(fun(theta), dtype=float))
        cand_norm = _norm(np.asarray(fun(candidate), dtype=float))
        if np.isfinite(cand_norm) and cand_norm < norm:
            return candidate, cand_norm
    except np.linalg.LinAlgError:
        pass
    return theta, norm


def _bracket_scalar(fun, start: float, tol: float, step) -> RootResult:
    f = lambda t: float(np.asarray(fun(np.array([t])))[0])
    f0 = f(start)
    width = 1.0
    lo = hi = start
    for _ in range(60):
        lo, hi = start - width, start + width
        flo, fhi = f(lo), f(hi)
        if np.sign(flo) != np.sign(f0):
            hi, lo = start, lo
            break
        if np.sign(fhi) != np.sign(f0):
            lo, hi = start, hi
            break
        width *= 2.0
    else:
        raise NotConverged("no sign change found for bracketing fallback", step=step)
    root = brentq(f, min(lo, hi), max(lo, hi), xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    norm = abs(f(root))
    if norm > tol:
        raise NotConverged(f"bracketed root residual {norm:.3g} above {tol:g}", step=step)
    return RootResult(np.array([root]), norm, 0, 'brentq')
