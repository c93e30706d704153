"""Constant-mean Gaussian-process interpolation with power-exponential correlation.

The correlation between two points is ``prod_k exp(-theta_k |x_k - x'_k|^1.95)``.
``theta`` maximizes the profile log-likelihood (mean and process variance
profiled out) over ``log10(theta)`` in ``[-2, 3]^d``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from .errors import DomainError, IllConditioned, TooFewPoints
from .sampling import SampleMatrix, lhs

logger = logging.getLogger(__name__)

POWER = 1.95
LOG10_THETA_BOUNDS = (-2.0, 3.0)
NUGGET_START = 1e-8
NUGGET_CAP = 1e-2
SD_THRESHOLD = 1.0
POOL_SIZE = 20_000
# Final coordinate poll step (log10 units) that the returned optimum must survive.
POLISH_STEP = 0.1
_CHUNK = 4096


def _powdist(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """``(d, na, nb)`` array of ``|xa_k - xb_k|^1.95``."""
    return np.abs(xa.T[:, :, None] - xb.T[:, None, :]) ** POWER


def correlation(xa: np.ndarray, xb: np.ndarray, theta: np.ndarray) -> np.ndarray:
    xa = np.atleast_2d(xa)
    xb = np.atleast_2d(xb)
    out = np.zeros((xa.shape[0], xb.shape[0]))
    for k, t in enumerate(theta):
        out -= t * np.abs(xa[:, k, None] - xb[None, :, k]) ** POWER
    return np.exp(out)


def factorize(R: np.ndarray, nugget: float = NUGGET_START, cap: float = NUGGET_CAP):
    """Cholesky factor of ``R + nugget I``, escalating the nugget tenfold on failure.

    Returns ``(L, nugget)`` or raises :class:`IllConditioned` past ``cap``.
    """
    n = R.shape[0]
    while nugget <= cap * (1 + 1e-9):
        try:
            L = linalg.cholesky(R + nugget * np.eye(n), lower=True, check_finite=False)
            return L, nugget
        except linalg.LinAlgError:
            nugget *= 10.0
    raise IllConditioned(f"correlation matrix not positive definite with nugget up to {cap:g}")


@dataclass
class _Profile:
    loglik: float
    L: np.ndarray
    nugget: float
    mu: float
    sigma2: float
    alpha: np.ndarray   # R^-1 (y - mu 1)
    rinv_one: np.ndarray  # R^-1 1


def _profile(R: np.ndarray, y: np.ndarray) -> _Profile:
    L, nugget = factorize(R)
    n = y.shape[0]
    cho = (L, True)
    rinv_one = linalg.cho_solve(cho, np.ones(n), check_finite=False)
    rinv_y = linalg.cho_solve(cho, y, check_finite=False)
    one_rinv_one = rinv_one.sum()
    mu = rinv_y.sum() / one_rinv_one
    alpha = rinv_y - mu * rinv_one
    resid = y - mu
    sigma2 = float(resid @ alpha) / n
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    if sigma2 <= 0.0:
        # Exactly interpolated constant data: the likelihood is flat in theta.
        loglik = -0.5 * logdet
        sigma2 = 0.0
    else:
        loglik = -0.5 * n * np.log(sigma2) - 0.5 * logdet
    return _Profile(loglik, L, nugget, mu, sigma2, alpha, rinv_one)


@dataclass
class KrigingPrediction:
    mean: np.ndarray
    sd: np.ndarray


@dataclass
class KrigingModel:
    training_inputs: np.ndarray
    training_outputs: np.ndarray
    theta: np.ndarray
    mu_hat: float
    sigma2_hat: float
    correlation_factor: np.ndarray
    nugget: float
    log_likelihood: float = float("nan")
    _alpha: np.ndarray = field(default=None, repr=False)
    _rinv_one: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.training_inputs.shape[1]

    def predict(self, x) -> KrigingPrediction:
        return predict(self, x)

    def __call__(self, x):
        return predict(self, x, return_sd=False).mean


def profile_loglik(X: np.ndarray, y: np.ndarray, log10_theta: np.ndarray) -> float:
    """Profile log-likelihood ``-n/2 log sigma2 - 1/2 log|R|`` (``-inf`` if unfactorizable)."""
    try:
        return _profile(correlation(X, X, 10.0 ** np.asarray(log10_theta)), y).loglik
    except IllConditioned:
        return -np.inf


class _Objective:
    """Negative profile log-likelihood over log10(theta) with cached distances."""

    def __init__(self, X, y):
        self.D = _powdist(X, X)
        self.y = y
        self.n_evals = 0

    def profile(self, u: np.ndarray) -> _Profile:
        R = np.exp(-np.tensordot(10.0 ** u, self.D, axes=1))
        return _profile(R, self.y)

    def __call__(self, u) -> float:
        self.n_evals += 1
        u = np.clip(u, *LOG10_THETA_BOUNDS)
        try:
            return -self.profile(u).loglik
        except IllConditioned:
            return np.inf


def _polish(obj: _Objective, u: np.ndarray, f: float, step: float = POLISH_STEP, max_sweeps: int = 200):
    """Coordinate poll at ``step`` until no single move improves by more than 1e-9."""
    lo, hi = LOG10_THETA_BOUNDS
    for _ in range(max_sweeps):
        improved = False
        for k in range(u.size):
            for delta in (step, -step):
                cand = u.copy()
                cand[k] = np.clip(cand[k] + delta, lo, hi)
                if cand[k] == u[k]:
                    continue
                fc = obj(cand)
                if fc < f - 1e-9:
                    u, f, improved = cand, fc, True
                    break
        if not improved:
            break
    return u, f


def fit_kriging(X, y, seed=0, n_starts: int | None = None, n_refine: int | None = 3,
                theta: np.ndarray | None = None, nugget: float | None = None) -> KrigingModel:
    """Fit by maximum profile likelihood.

    Parameters
    ----------
    X, y : training inputs in ``[0, 1]^d`` and outputs.
    seed : seeds the Latin hypercube of multi-start points.
    n_starts : number of starting points in the log10(theta) box, ``2d + 1`` by default.
    n_refine : how many of the best starts get a Powell refinement (``None`` = all).
    theta : if given, skip the search and use these correlation parameters.
    nugget : with ``theta``, force this nugget instead of the escalation rule.
    """
    X = np.asarray(X.points if isinstance(X, SampleMatrix) else X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    if y.shape[0] != n:
        raise ValueError("X and y have different numbers of rows")
    if n < d + 1:
        raise TooFewPoints(f"need at least d + 1 = {d + 1} points, got {n}")
    if np.any((X < 0.0) | (X > 1.0)):
        raise DomainError("training inputs must lie in [0, 1]")

    if theta is not None:
        theta = np.asarray(theta, dtype=float)
        R = correlation(X, X, theta)
        if nugget is not None:
            L = linalg.cholesky(R + nugget * np.eye(n), lower=True)
            prof = _profile_from_factor(L, nugget, y)
        else:
            prof = _profile(R, y)
        return _model_from_profile(X, y, theta, prof)

    lo, hi = LOG10_THETA_BOUNDS
    obj = _Objective(X, y)
    n_starts = 2 * d + 1 if n_starts is None else n_starts
    starts = lo + (hi - lo) * lhs(n_starts, d, seed).points
    values = np.array([obj(u) for u in starts])
    order = np.argsort(values, kind="stable")
    if n_refine is not None:
        order = order[:n_refine]
    best_u, best_f = starts[order[0]], values[order[0]]
    for i in order:
        if not np.isfinite(values[i]):
            continue
        res = minimize(obj, starts[i], method="Powell", bounds=[LOG10_THETA_BOUNDS] * d,
                       options={"xtol": 1e-3, "ftol": 1e-8, "maxfev": 200 * d})
        u = np.clip(res.x, lo, hi)
        fu = obj(u)
        if fu < best_f:
            best_u, best_f = u, fu
    if not np.isfinite(best_f):
        raise IllConditioned("no theta in the search box gives a factorizable correlation matrix")
    best_u, best_f = _polish(obj, best_u, best_f)
    prof = obj.profile(best_u)
    logger.debug("kriging fit n=%d d=%d: %d likelihood evals, loglik %.4g", n, d, obj.n_evals, prof.loglik)
    return _model_from_profile(X, y, 10.0 ** best_u, prof)


def _profile_from_factor(L, nugget, y) -> _Profile:
    n = y.shape[0]
    cho = (L, True)
    rinv_one = linalg.cho_solve(cho, np.ones(n))
    rinv_y = linalg.cho_solve(cho, y)
    mu = rinv_y.sum() / rinv_one.sum()
    alpha = rinv_y - mu * rinv_one
    sigma2 = max(float((y - mu) @ alpha) / n, 0.0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    loglik = -0.5 * n * np.log(sigma2) - 0.5 * logdet if sigma2 > 0 else -0.5 * logdet
    return _Profile(loglik, L, nugget, mu, sigma2, alpha, rinv_one)


def _model_from_profile(X, y, theta, prof: _Profile) -> KrigingModel:
    # One step of iterative refinement: S = A^-1 + nugget A^-2 with A = R + nugget I
    # removes most of the bias the nugget puts on the interpolating mean, while the
    # fitted likelihood stays on A.
    cho = (prof.L, True)
    alpha, rinv_one = prof.alpha, prof.rinv_one
    if prof.nugget > 0.0:
        alpha = alpha + prof.nugget * linalg.cho_solve(cho, alpha, check_finite=False)
        rinv_one = rinv_one + prof.nugget * linalg.cho_solve(cho, rinv_one, check_finite=False)
    return KrigingModel(
        training_inputs=X,
        training_outputs=y,
        theta=np.asarray(theta, dtype=float),
        mu_hat=float(prof.mu),
        sigma2_hat=float(prof.sigma2),
        correlation_factor=prof.L,
        nugget=prof.nugget,
        log_likelihood=float(prof.loglik),
        _alpha=alpha,
        _rinv_one=rinv_one,
    )


def predict(model: KrigingModel, x, return_sd: bool = True) -> KrigingPrediction:
    """BLUP mean and standard error at one point or a batch of points.

    ``mean = mu + r' S (y - mu 1)`` and
    ``sd^2 = sigma2 [1 - r' S r + (1 - 1' S r)^2 / (1' S 1)]``, clamped at
    zero. ``S = A^-1 + nugget A^-2`` refines the inverse of the regularized
    ``A = R + nugget I`` towards ``R^-1``; it equals ``R^-1`` at zero nugget.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.dimension:
        raise ValueError(f"expected {model.dimension} columns, got {x.shape[1]}")
    if np.any((x < 0.0) | (x > 1.0)):
        raise DomainError("prediction points must lie in [0, 1]")
    L = model.correlation_factor
    one_rinv_one = model._rinv_one.sum()
    means, sds = [], []
    for start in range(0, x.shape[0], _CHUNK):
        r = correlation(x[start:start + _CHUNK], model.training_inputs, model.theta)
        means.append(model.mu_hat + r @ model._alpha)
        if return_sd:
            w = linalg.solve_triangular(L, r.T, lower=True, check_finite=False)
            quad = np.sum(w * w, axis=0)
            if model.nugget > 0.0:
                v = linalg.solve_triangular(L, w, lower=True, trans="T", check_finite=False)
                quad += model.nugget * np.sum(v * v, axis=0)
            gap = 1.0 - r @ model._rinv_one
            s2 = model.sigma2_hat * (1.0 - quad + gap * gap / one_rinv_one)
            sds.append(np.sqrt(np.maximum(s2, 0.0)))
    mean = np.concatenate(means)
    sd = np.concatenate(sds) if return_sd else np.full_like(mean, np.nan)
    if single:
        return KrigingPrediction(mean[0], sd[0])
    return KrigingPrediction(mean, sd)


@dataclass
class EmulationLoopReport:
    model: object
    n_model_evals: int
    final_sample_size: int
    pool_max_sd_history: list[float]
    converged: bool = True
    sample_size_history: list[int] = field(default_factory=list)


def _as_evaluator(evaluator) -> Callable[[np.ndarray], np.ndarray]:
    def f(X):
        return np.asarray(evaluator(X), dtype=float).reshape(-1)
    return f


def kriging_emulation_loop(evaluator, d: int, pool_size: int = POOL_SIZE, seed=0,
                           threshold: float = SD_THRESHOLD, max_size: int | None = None,
                           on_round: Callable | None = None, should_stop: Callable[[], bool] | None = None,
                           **fit_kw) -> EmulationLoopReport:
    """Refit on fresh Latin hypercube samples of size ``10d, 11d, ...`` until the pool sd is below ``threshold``.

    Every round draws a new sample, so evaluations accumulate across rounds.
    ``max_size`` (default ``200 d``) bounds the sample size; exceeding it
    yields an unconverged report, as does ``should_stop()`` returning true
    after a round (used for CPU budgets).
    """
    f = _as_evaluator(evaluator)
    rng = np.random.default_rng(seed)
    pool = lhs(pool_size, d, rng).points
    max_size = 200 * d if max_size is None else max_size
    n = 10 * d
    evals = 0
    history, sizes = [], []
    model = None
    while n <= max_size:
        X = lhs(n, d, rng).points
        y = f(X)
        evals += n
        model = fit_kriging(X, y, seed=rng, **fit_kw)
        max_sd = float(np.max(predict(model, pool).sd))
        history.append(max_sd)
        sizes.append(n)
        if on_round is not None:
            on_round(n, model, max_sd)
        logger.info("kriging loop d=%d n=%d max pool sd %.4g", d, n, max_sd)
        if max_sd < threshold:
            return EmulationLoopReport(model, evals, n, history, True, sizes)
        if should_stop is not None and should_stop():
            break
        n += d
    return EmulationLoopReport(model, evals, sizes[-1] if sizes else 0, history, False, sizes)
