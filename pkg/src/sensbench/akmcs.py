"""Adaptive Kriging with Monte Carlo sampling (AK-MCS).

A Kriging model is fitted to a small random subset of a fixed candidate pool
and grown one point at a time, each time adding the pool point picked by a
learning function.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kriging import POOL_SIZE, SD_THRESHOLD, KrigingModel, fit_kriging, predict
from .sampling import SampleMatrix, lhs

logger = logging.getLogger(__name__)

U_STOP = 2.0


class LearningKind(enum.Enum):
    UNCERTAINTY_SD = "sd"
    THRESHOLD_U = "u"


@dataclass(frozen=True)
class LearningFunction:
    """``UNCERTAINTY_SD`` scores by predictive sd; ``THRESHOLD_U`` by ``|mean - l| / sd``."""

    kind: LearningKind = LearningKind.UNCERTAINTY_SD
    threshold_l: float | None = None

    def __post_init__(self):
        if self.kind is LearningKind.THRESHOLD_U and (self.threshold_l is None or not np.isfinite(self.threshold_l)):
            raise ValueError("THRESHOLD_U needs a finite threshold_l")

    @classmethod
    def sd(cls):
        return cls(LearningKind.UNCERTAINTY_SD)

    @classmethod
    def threshold(cls, level: float):
        return cls(LearningKind.THRESHOLD_U, float(level))


@dataclass
class AkmcsReport:
    model: KrigingModel
    n_model_evals: int
    selection_history: list[int]
    stop_metric_history: list[float]
    converged: bool = True
    initial_indices: list[int] = field(default_factory=list)


def score_pool(model: KrigingModel, pool, lf: LearningFunction) -> np.ndarray:
    pts = pool.points if isinstance(pool, SampleMatrix) else np.asarray(pool, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("pool is empty")
    pred = predict(model, pts)
    if lf.kind is LearningKind.UNCERTAINTY_SD:
        return pred.sd
    gap = np.abs(pred.mean - lf.threshold_l)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = gap / pred.sd
    # sd == 0 means the point is known exactly; it should never be picked.
    u[pred.sd == 0.0] = np.inf
    return u


def initial_size(d: int) -> int:
    return max(12, d + 2)


def run_akmcs(evaluator, d: int, lf: LearningFunction | None = None, pool_size: int = POOL_SIZE, seed=0,
              threshold: float = SD_THRESHOLD, max_additions: int | None = None,
              on_step: Callable | None = None, should_stop: Callable[[], bool] | None = None,
              **fit_kw) -> AkmcsReport:
    """Run the adaptive loop on a ``pool_size`` Latin hypercube pool.

    With the sd learning function the loop stops once the largest sd over the
    unevaluated pool drops below ``threshold`` and otherwise adds the argmax.
    With the threshold learning function it stops once ``min U >= 2`` and
    otherwise adds the argmin. Ties go to the lowest pool index.
    ``should_stop()`` returning true after a step ends the loop unconverged.
    """
    lf = lf or LearningFunction.sd()
    rng = np.random.default_rng(seed)
    pool = lhs(pool_size, d, rng).points
    max_additions = 200 * d if max_additions is None else max_additions
    n0 = initial_size(d)
    if n0 > pool_size:
        raise ValueError("pool smaller than the initial design")
    chosen = [int(i) for i in rng.choice(pool_size, size=n0, replace=False)]
    initial = list(chosen)
    remaining = np.ones(pool_size, dtype=bool)
    remaining[chosen] = False
    y = list(np.asarray(evaluator(pool[chosen]), dtype=float).reshape(-1))
    history: list[float] = []
    added: list[int] = []
    converged = False
    while True:
        model = fit_kriging(pool[chosen], np.array(y), seed=rng, **fit_kw)
        cand = np.flatnonzero(remaining)
        if cand.size == 0:
            break
        scores = score_pool(model, pool[cand], lf)
        if lf.kind is LearningKind.UNCERTAINTY_SD:
            pos = int(np.argmax(scores))
            metric = float(scores[pos])
            stop = metric < threshold
        else:
            pos = int(np.argmin(scores))
            metric = float(scores[pos])
            stop = metric >= U_STOP
        history.append(metric)
        if on_step is not None:
            on_step(len(chosen), model, metric)
        logger.debug("akmcs d=%d n=%d metric %.4g", d, len(chosen), metric)
        if stop:
            converged = True
            break
        if len(added) >= max_additions or (should_stop is not None and should_stop()):
            break
        pick = int(cand[pos])
        remaining[pick] = False
        chosen.append(pick)
        added.append(pick)
        y.append(float(np.asarray(evaluator(pool[pick][None, :]), dtype=float).reshape(-1)[0]))
    return AkmcsReport(model, len(chosen), chosen, history, converged, initial)
