"""
Logistic and three-category multinomial logistic regression by Newton-Raphson (IRLS).

Both families share one Newton driver with step-halving on likelihood decrease.
Multinomial coefficients are stored as [class-1 block, class-2 block] with class 0
as the baseline.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from ..errors import DimensionMismatch, NotConverged, RankDeficient, Separation

logger = logging.getLogger(__name__)

SCORE_TOL = 1e-8
MAX_ITER = 50
SEPARATION_BOUND = 30.0
PROB_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class FittedGlm:
    """A fitted nuisance regression."""
    coefficients: np.ndarray
    converged: bool
    iterations: int
    loglik: float
    family: str  # 'binomial' or 'multinomial3'
    score_norm: float = 0.0
    n_obs: int = 0
    terms: Tuple[str, ...] = field(default=())

    @property
    def width(self) -> int:
        """Design-row width the model expects."""
        if self.family == 'multinomial3':
            return self.coefficients.shape[0] // 2
        return self.coefficients.shape[0]

    @property
    def coef_matrix(self) -> np.ndarray:
        """Multinomial coefficients as a (2, width) array, row c-1 for class c."""
        return self.coefficients.reshape(2, -1)

    def linear_predictor(self, rows: np.ndarray) -> np.ndarray:
        rows = _as_rows(rows)
        if rows.shape[1] != self.width:
            raise DimensionMismatch(f"design row width {rows.shape[1]} != model width {self.width}")
        if self.family == 'multinomial3':
            return rows @ self.coef_matrix.T
        return rows @ self.coefficients

    def diagnostics(self) -> dict:
        return {
            'family': self.family,
            'converged': self.converged,
            'iterations': self.iterations,
            'score_norm': self.score_norm,
            'n_obs': self.n_obs,
        }


def _as_rows(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    return rows.reshape(1, -1) if rows.ndim == 1 else rows


# =====================================
# Likelihood pieces
# =====================================

def logistic_loglik(X: np.ndarray, y: np.ndarray, beta: np.ndarray,
                    w: Optional[np.ndarray] = None) -> float:
    eta = X @ beta
    w = np.ones_like(eta) if w is None else w
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def logistic_score_rows(X: np.ndarray, y: np.ndarray, beta: np.ndarray,
                        w: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-record score contributions w_i x_i (y_i - p_i), shape (n, k)."""
    resid = y - expit(X @ beta)
    if w is not None:
        resid = w * resid
    return X * resid[:, None]


def _logistic_parts(X, y, w, beta):
    eta = X @ beta
    p = expit(eta)
    ll = float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))
    score = X.T @ (w * (y - p))
    info = (X * (w * p * (1.0 - p))[:, None]).T @ X
    return ll, score, info


def _softmax3(eta: np.ndarray) -> np.ndarray:
    """Class probabilities (n, 3) from class-1/class-2 linear predictors (n, 2)."""
    full = np.column_stack([np.zeros(eta.shape[0]), eta])
    return np.exp(full - logsumexp(full, axis=1, keepdims=True))


def multinomial_loglik(X: np.ndarray, y: np.ndarray, beta: np.ndarray,
                       w: Optional[np.ndarray] = None) -> float:
    eta = X @ beta.reshape(2, -1).T
    full = np.column_stack([np.zeros(X.shape[0]), eta])
    w = np.ones(X.shape[0]) if w is None else w
    picked = full[np.arange(X.shape[0]), y.astype(int)]
    return float(np.sum(w * (picked - logsumexp(full, axis=1))))


def multinomial_score_rows(X: np.ndarray, y: np.ndarray, beta: np.ndarray,
                           w: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-record score contributions, shape (n, 2k): class-1 block then class-2 block."""
    probs = _softmax3(X @ beta.reshape(2, -1).T)
    y = y.astype(int)
    blocks = []
    for c in (1, 2):
        resid = (y == c) - probs[:, c]
        if w is not None:
            resid = w * resid
        blocks.append(X * resid[:, None])
    return np.hstack(blocks)


def _multinomial_parts(X, y, w, beta):
    k = X.shape[1]
    eta = X @ beta.reshape(2, k).T
    full = np.column_stack([np.zeros(X.shape[0]), eta])
    lse = logsumexp(full, axis=1)
    probs = np.exp(full - lse[:, None])
    ll = float(np.sum(w * (full[np.arange(X.shape[0]), y] - lse)))
    score = np.concatenate([X.T @ (w * ((y == c) - probs[:, c])) for c in (1, 2)])
    info = np.empty((2 * k, 2 * k))
    for a in (1, 2):
        for b in (1, 2):
            weight = w * probs[:, a] * ((a == b) - probs[:, b])
            info[(a - 1) * k:a * k, (b - 1) * k:b * k] = (X * weight[:, None]).T @ X
    return ll, score, info


# =====================================
# Newton driver
# =====================================

def _newton(parts: Callable, beta0: np.ndarray, tol: float, max_iter: int, family: str):
    beta = beta0.copy()
    ll, score, info = parts(beta)
    iterations = 0
    for iterations in range(max_iter + 1):
        if np.max(np.abs(score)) <= tol or iterations == max_iter:
            break
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise RankDeficient(f"singular information matrix in {family} fit")
        t = 1.0
        accepted = False
        while t >= 1e-10:
            candidate = beta + t * step
            ll_new, score_new, info_new = parts(candidate)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12 * max(1.0, abs(ll)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            logger.debug(f"{family} step-halving exhausted at iteration {iterations}")
            break
        beta, ll, score, info = candidate, ll_new, score_new, info_new
        logger.debug(f"{family} iteration {iterations + 1}: loglik={ll:.10g} "
                     f"score={np.max(np.abs(score)):.3g}")
    converged = bool(np.max(np.abs(score)) <= tol)

    if converged:
        # one refinement step, kept only if it does not worsen the score
        try:
            candidate = beta + np.linalg.solve(info, score)
            ll_new, score_new, info_new = parts(candidate)
            if ll_new >= ll - 1e-12 * max(1.0, abs(ll)) and np.max(np.abs(score_new)) <= np.max(np.abs(score)):
                beta, ll, score = candidate, ll_new, score_new
        except np.linalg.LinAlgError:
            pass
        return beta, ll, score, iterations

    if np.max(np.abs(beta)) > SEPARATION_BOUND:
        raise Separation(f"{family} fit diverging (max |coef| = {np.max(np.abs(beta)):.1f}); "
                         f"fitted probabilities pinned at 0/1")
    raise NotConverged(f"{family} fit did not converge in {max_iter} iterations "
                       f"(score norm {np.max(np.abs(score)):.3g})")


def _prepare(X, y, weights, n_classes: int, family: str):
    X = _as_rows(X)
    y = np.asarray(y).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} design rows but {y.shape[0]} outcomes")
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float).ravel()
    active = w > 0
    present = set(np.unique(y[active]).astype(int).tolist())
    missing = set(range(n_classes)) - present
    if missing:
        raise Separation(f"{family} fit: outcome class(es) {sorted(missing)} absent")
    if np.linalg.matrix_rank(X[active]) < X.shape[1]:
        raise RankDeficient(f"{family} design matrix is not of full column rank ({X.shape[1]} columns)")
    return X, y.astype(int), w


def _check_pinned(eta: np.ndarray, beta: np.ndarray, family: str) -> None:
    """Converged fits can still be separated: huge coefficients with probabilities at 0/1."""
    if np.max(np.abs(beta)) > SEPARATION_BOUND and np.max(np.abs(eta)) > 25.0:
        raise Separation(f"{family} fit separated (max |coef| = {np.max(np.abs(beta)):.1f})")


def fit_logistic(X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None,
                 tol: float = SCORE_TOL, max_iter: int = MAX_ITER,
                 terms: Tuple[str, ...] = ()) -> FittedGlm:
    """Maximum-likelihood logistic regression.

    Args:
        X: Design rows (n x k), intercept first.
        y: Binary outcomes.
        weights: Optional nonnegative record weights.
        tol: Absolute score-norm tolerance.
        max_iter: Iteration cap.
        terms: Design labels kept for reporting.

    Returns:
        FittedGlm with family 'binomial'.
    """
    X, y, w = _prepare(X, y, weights, 2, 'logistic')
    beta, ll, score, iterations = _newton(
        lambda b: _logistic_parts(X, y, w, b), np.zeros(X.shape[1]), tol, max_iter, 'logistic')
    _check_pinned(X @ beta, beta, 'logistic')
    return FittedGlm(coefficients=beta, converged=True, iterations=iterations, loglik=ll,
                     family='binomial', score_norm=float(np.max(np.abs(score))),
                     n_obs=int(np.sum(w > 0)), terms=tuple(terms))


def fit_multinomial3(X: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None,
                     tol: float = SCORE_TOL, max_iter: int = MAX_ITER,
                     terms: Tuple[str, ...] = ()) -> FittedGlm:
    """Baseline-category (class 0) multinomial logit for outcomes in {0, 1, 2}."""
    X, y, w = _prepare(X, y, weights, 3, 'multinomial')
    if not np.isin(y, (0, 1, 2)).all():
        raise DimensionMismatch("multinomial outcomes must lie in {0, 1, 2}")
    beta, ll, score, iterations = _newton(
        lambda b: _multinomial_parts(X, y, w, b), np.zeros(2 * X.shape[1]), tol, max_iter, 'multinomial')
    _check_pinned(X @ beta.reshape(2, -1).T, beta, 'multinomial')
    return FittedGlm(coefficients=beta, converged=True, iterations=iterations, loglik=ll,
                     family='multinomial3', score_norm=float(np.max(np.abs(score))),
                     n_obs=int(np.sum(w > 0)), terms=tuple(terms))


def logistic_probs(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Clamped Pr[outcome = 1] for design rows X."""
    return np.clip(expit(X @ beta), PROB_EPS, 1.0 - PROB_EPS)


def multinomial_probs(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Clamped (n, 3) class probabilities for design rows X."""
    return np.clip(_softmax3(X @ beta.reshape(2, -1).T), PROB_EPS, 1.0 - PROB_EPS)


def predict_prob(model: FittedGlm, rows: np.ndarray) -> np.ndarray:
    """Fitted probabilities clamped to [1e-12, 1 - 1e-12].

    Binary models return Pr[outcome = 1] per row; multinomial models return the
    (n, 3) class probabilities. A single 1-d row gives a scalar / triple.
    """
    single = np.asarray(rows).ndim == 1
    rows = _as_rows(rows)
    if rows.shape[1] != model.width:
        raise DimensionMismatch(f"design row width {rows.shape[1]} != model width {model.width}")
    if model.family == 'multinomial3':
        probs = multinomial_probs(rows, model.coefficients)
    else:
        probs = logistic_probs(rows, model.coefficients)
    return probs[0] if single else probs
