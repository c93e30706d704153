"""Sample-based Sobol' indices with bootstrap intervals and a convergence loop.

First-order indices use the Saltelli (2010) estimator and total-order indices
the Jansen estimator; both are normalized by the sample variance of the pooled
A and B outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateVariance, InvalidPair, InvalidReplicates
from .sampling import sobol_design

#: Default base-size schedule: 2^7 ... 2^17.
DEFAULT_SCHEDULE = tuple(2**p for p in range(7, 18))
CI_WIDTH_TOL = 0.05
N_REPLICATES = 100


@dataclass
class SobolIndices:
    first_order: np.ndarray
    total_order: np.ndarray
    total_variance: float
    base_size: int
    second_order: dict[tuple[int, int], float] | None = None


@dataclass
class BootstrapCI:
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95
    replicates: int = N_REPLICATES

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass
class ConvergenceReport:
    converged: bool
    final_base_size: int
    history: list[tuple[int, SobolIndices, BootstrapCI]] = field(default_factory=list)
    n_model_evals: int = 0

    @property
    def indices(self) -> SobolIndices:
        return self.history[-1][1]

    @property
    def ci(self) -> BootstrapCI:
        return self.history[-1][2]


def _as_outputs(y_a, y_b, y_ab):
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    y_ab = np.atleast_2d(np.asarray(y_ab, dtype=float))
    n = y_a.shape[0]
    if n < 2 or y_b.shape != (n,) or y_ab.shape[1] != n:
        raise ValueError("outputs must be vectors of a common length N >= 2")
    return y_a, y_b, y_ab


def pooled_variance(y_a: np.ndarray, y_b: np.ndarray) -> float:
    pooled = np.concatenate([y_a, y_b])
    scale = max(np.max(np.abs(pooled)), np.finfo(float).tiny)
    if np.ptp(pooled) <= 4 * np.finfo(float).eps * scale:
        raise DegenerateVariance("all model outputs are equal; indices are undefined")
    return float(np.var(pooled, ddof=1))


def estimate_indices(y_a, y_b, y_ab) -> SobolIndices:
    """Point estimates from outputs on A, B and the ``k`` AB_i matrices.

    ``y_ab`` has shape ``(k, N)``.
    """
    y_a, y_b, y_ab = _as_outputs(y_a, y_b, y_ab)
    v = pooled_variance(y_a, y_b)
    first = np.mean(y_b * (y_ab - y_a), axis=1) / v
    total = 0.5 * np.mean((y_a - y_ab) ** 2, axis=1) / v
    return SobolIndices(first, total, v, y_a.shape[0])


def estimate_second_order(y_a, y_b, y_ab, y_ab_pairs: dict[tuple[int, int], np.ndarray]) -> dict[tuple[int, int], float]:
    """Second-order shares from the closed pair effect minus both main effects.

    ``y_ab_pairs[(i, j)]`` holds outputs on A with columns ``i`` and ``j``
    replaced by those of B.
    """
    y_a, y_b, y_ab = _as_outputs(y_a, y_b, y_ab)
    v = pooled_variance(y_a, y_b)
    v_first = np.mean(y_b * (y_ab - y_a), axis=1)
    out = {}
    for (i, j), y_ij in y_ab_pairs.items():
        if i == j:
            raise InvalidPair(f"second-order index needs two distinct inputs, got ({i}, {j})")
        closed = np.mean(y_b * (np.asarray(y_ij, dtype=float) - y_a))
        out[(min(i, j), max(i, j))] = float((closed - v_first[i] - v_first[j]) / v)
    return out


def bootstrap_ci(y_a, y_b, y_ab, replicates: int = N_REPLICATES, level: float = 0.95, seed=0,
                 target: str = "total") -> BootstrapCI:
    """Percentile bootstrap over design rows.

    The same resampled row indices are applied to A, B and every AB_i.
    """
    if replicates < 2:
        raise InvalidReplicates(f"need at least 2 bootstrap replicates, got {replicates}")
    y_a, y_b, y_ab = _as_outputs(y_a, y_b, y_ab)
    pooled_variance(y_a, y_b)
    rng = np.random.default_rng(seed)
    n = y_a.shape[0]
    draws = np.empty((replicates, y_ab.shape[0]))
    for r in range(replicates):
        idx = rng.integers(0, n, n)
        a, b, ab = y_a[idx], y_b[idx], y_ab[:, idx]
        pooled = np.concatenate([a, b])
        v = np.var(pooled, ddof=1)
        if v == 0.0:
            # A resample can collapse onto identical outputs; its index is 0.
            draws[r] = 0.0
        elif target == "total":
            draws[r] = 0.5 * np.mean((a - ab) ** 2, axis=1) / v
        else:
            draws[r] = np.mean(b * (ab - a), axis=1) / v
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(draws, [alpha, 1.0 - alpha], axis=0)
    return BootstrapCI(lower, upper, level, replicates)


def evaluate_design(evaluator: Callable[[np.ndarray], np.ndarray], design):
    """Evaluate every design row; returns ``(y_a, y_b, y_ab)``."""
    n, k = design.base_size, design.k
    y = np.asarray(evaluator(design.stacked()), dtype=float).reshape(-1)
    return y[:n], y[n:2 * n], y[2 * n:].reshape(k, n)


def sobol_indices(evaluator, k: int, N: int, seed=0, second_order: Iterable[tuple[int, int]] | None = None,
                  replicates: int = N_REPLICATES) -> tuple[SobolIndices, BootstrapCI]:
    """One-shot analysis at base size ``N``, optionally with second-order pairs."""
    design = sobol_design(N, k)
    y_a, y_b, y_ab = evaluate_design(evaluator, design)
    idx = estimate_indices(y_a, y_b, y_ab)
    if second_order is not None:
        pairs = {}
        for i, j in second_order:
            if i == j:
                raise InvalidPair(f"second-order index needs two distinct inputs, got ({i}, {j})")
            pairs[(i, j)] = np.asarray(evaluator(design.ab_pair(i, j)), dtype=float)
        idx.second_order = estimate_second_order(y_a, y_b, y_ab, pairs)
    ci = bootstrap_ci(y_a, y_b, y_ab, replicates=replicates, seed=seed)
    return idx, ci


def run_to_convergence(evaluator, k: int, schedule: Sequence[int] = DEFAULT_SCHEDULE, seed=0,
                       tol: float = CI_WIDTH_TOL, replicates: int = N_REPLICATES,
                       on_stage: Callable | None = None) -> ConvergenceReport:
    """Grow the base size along ``schedule`` until every total-order CI is narrower than ``tol``.

    Each stage builds a fresh design of ``N (k + 2)`` rows and the evaluation
    count accumulates over stages. An exhausted schedule returns
    ``converged=False`` rather than raising.
    """
    schedule = list(schedule)
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be a non-empty strictly increasing sequence")
    report = ConvergenceReport(converged=False, final_base_size=schedule[0])
    for N in schedule:
        design = sobol_design(N, k)
        y_a, y_b, y_ab = evaluate_design(evaluator, design)
        report.n_model_evals += design.n_rows
        idx = estimate_indices(y_a, y_b, y_ab)
        ci = bootstrap_ci(y_a, y_b, y_ab, replicates=replicates, seed=seed)
        report.history.append((N, idx, ci))
        report.final_base_size = N
        if on_stage is not None:
            on_stage(N, idx, ci)
        if np.all(ci.width < tol):
            report.converged = True
            break
    return report
