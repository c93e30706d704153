"""Bayesian adaptive spline surfaces fitted by reversible-jump MCMC.

The regression function is an intercept plus a sum of ``M`` basis functions,
each a product of one to three hinges ``max(0, s (x_j - t))`` on distinct
inputs. Coefficients get a Zellner-Siow prior ``beta ~ N(0, sigma2 / tau
(B'B)^-1)``, ``tau ~ Gamma(1/2, n/2)``; they are integrated out in the
birth/death/change acceptance ratios and redrawn by Gibbs steps together with
``sigma2``, ``tau`` and the Poisson rate ``lam ~ Gamma(10, 10)`` of ``M``.

Sobol' indices of a posterior draw follow in closed form from first and
second moments of hinges under independent ``U[0, 1]`` inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import DegenerateVariance, DomainError, InvalidPair
from .kriging import POOL_SIZE, SD_THRESHOLD, EmulationLoopReport
from .sampling import SampleMatrix, lhs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HingeFactor:
    variable: int
    sign: int
    knot: float

    def __call__(self, t):
        return np.maximum(0.0, self.sign * (np.asarray(t, dtype=float) - self.knot))


@dataclass(frozen=True)
class BasisFunction:
    """Product of hinges on distinct variables, kept sorted by variable."""

    factors: tuple[HingeFactor, ...]

    def __post_init__(self):
        vars_ = [f.variable for f in self.factors]
        if not 1 <= len(vars_) <= MAX_DEGREE or len(set(vars_)) != len(vars_):
            raise ValueError("a basis needs 1-3 hinges on distinct variables")
        object.__setattr__(self, "factors", tuple(sorted(self.factors, key=lambda f: f.variable)))

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.ones(X.shape[0])
        for f in self.factors:
            out *= np.maximum(0.0, f.sign * (X[:, f.variable] - f.knot))
        return out


MAX_DEGREE = 3
MAX_BASES = 1000


@dataclass(frozen=True)
class McmcConfig:
    chain_length: int = 500_000
    burn_in: int = 100_000
    thin: int = 1_000

    @property
    def n_samples(self) -> int:
        return (self.chain_length - self.burn_in) // self.thin


PAPER_MCMC = McmcConfig(500_000, 100_000, 1_000)
DESK_MCMC = McmcConfig(50_000, 10_000, 100)
MCMC_PROFILES = {"paper": PAPER_MCMC, "desk": DESK_MCMC}


@dataclass(frozen=True)
class PriorConfig:
    max_degree: int = MAX_DEGREE
    max_bases: int = MAX_BASES
    lam_shape: float = 10.0
    lam_rate: float = 10.0
    s2_shape: float = 0.0
    s2_scale: float = 0.0
    tau_shape: float = 0.5
    tau_rate: float | None = None  # n / 2 when None
    min_support: int | None = None  # min(20, n / 10) when None


@dataclass
class BassSample:
    intercept: float
    coefficients: np.ndarray
    bases: list[BasisFunction]
    noise_variance: float

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], self.intercept)
        for a, b in zip(self.coefficients, self.bases):
            out += a * b(X)
        return out

    @property
    def n_bases(self) -> int:
        return len(self.bases)


@dataclass
class BassPosterior:
    samples: list[BassSample]
    mcmc_config: McmcConfig
    dimension: int = 0
    acceptance: dict[str, float] = field(default_factory=dict)

    def predict_samples(self, X) -> np.ndarray:
        """``(n_samples, n_points)`` evaluations of every posterior draw."""
        return predict_ensemble(self, X)

    def __call__(self, X):
        return bass_predict(self, X)[0]


def _hinge_col(x: np.ndarray, sign: int, knot: float) -> np.ndarray:
    return np.maximum(0.0, sign * (x - knot))


class _Chain:
    """Mutable RJMCMC state; columns of ``B`` after the first hold basis values."""

    def __init__(self, X, y, prior: PriorConfig, rng):
        self.X, self.y, self.rng, self.prior = X, y, rng, prior
        self.n, self.d = X.shape
        self.max_deg = min(prior.max_degree, self.d)
        self.min_support = prior.min_support if prior.min_support is not None else max(1, int(min(20, 0.1 * self.n)))
        self.tau_rate = prior.tau_rate if prior.tau_rate is not None else self.n / 2.0
        self.bases: list[BasisFunction] = []
        self.B = np.ones((self.n, 1))
        self.BtB = self.B.T @ self.B
        self.Bty = self.B.T @ y
        self.yty = float(y @ y)
        self.L, self.qf = self._qf(self.BtB, self.Bty)
        self.s2 = max(float(np.var(y)), 1e-12)
        self.tau = 1.0 / self.n
        self.lam = prior.lam_shape / prior.lam_rate
        self.beta = np.zeros(1)

    def _qf(self, BtB, Bty):
        """Cholesky of B'B and ``Bty' (B'B)^-1 Bty``, or ``(None, None)`` if singular."""
        try:
            L = linalg.cholesky(BtB, lower=True, check_finite=False)
        except (linalg.LinAlgError, ValueError):
            return None, None
        # Reject columns that are numerically in the span of the others.
        if np.min(np.diag(L) ** 2 / np.diag(BtB)) < 1e-10:
            return None, None
        z = linalg.solve_triangular(L, Bty, lower=True, check_finite=False)
        return L, float(z @ z)

    def _move_probs(self, M):
        if M == 0:
            return {"birth": 1.0}
        if M >= self.prior.max_bases:
            return {"death": 0.5, "change": 0.5}
        return {"birth": 1 / 3, "death": 1 / 3, "change": 1 / 3}

    def _propose_basis(self, variables=None) -> BasisFunction:
        rng = self.rng
        if variables is None:
            deg = int(rng.integers(1, self.max_deg + 1))
            variables = rng.choice(self.d, size=deg, replace=False)
        signs = rng.choice((-1, 1), size=len(variables))
        knots = rng.random(len(variables))
        return BasisFunction(tuple(HingeFactor(int(v), int(s), float(t)) for v, s, t in zip(variables, signs, knots)))

    def _column(self, basis: BasisFunction):
        col = np.ones(self.n)
        for f in basis.factors:
            col *= _hinge_col(self.X[:, f.variable], f.sign, f.knot)
        if np.count_nonzero(col) < self.min_support:
            return None
        return col

    def _lik_ratio(self, qf_new):
        return (qf_new - self.qf) / (2.0 * self.s2 * (1.0 + self.tau))

    def step(self, counts):
        M = len(self.bases)
        probs = self._move_probs(M)
        moves = list(probs)
        move = moves[int(self.rng.choice(len(moves), p=list(probs.values())))] if len(moves) > 1 else moves[0]
        counts[move][0] += 1
        if move == "birth":
            basis = self._propose_basis()
            col = self._column(basis)
            if col is None:
                return
            Btc = self.B.T @ col
            BtB = np.block([[self.BtB, Btc[:, None]], [Btc[None, :], np.array([[col @ col]])]])
            Bty = np.append(self.Bty, col @ self.y)
            L, qf = self._qf(BtB, Bty)
            if L is None:
                return
            log_a = (0.5 * np.log(self.tau / (1.0 + self.tau)) + self._lik_ratio(qf)
                     + np.log(self.lam / (M + 1))
                     + np.log(self._move_probs(M + 1)["death"] / probs["birth"]))
            if np.log(self.rng.random()) < log_a:
                self.bases.append(basis)
                self.B = np.column_stack([self.B, col])
                self.BtB, self.Bty, self.L, self.qf = BtB, Bty, L, qf
                counts[move][1] += 1
        elif move == "death":
            m = int(self.rng.integers(M))
            keep = np.r_[0:m + 1, m + 2:M + 1]
            BtB = self.BtB[np.ix_(keep, keep)]
            Bty = self.Bty[keep]
            L, qf = self._qf(BtB, Bty)
            if L is None:
                return
            back = self._move_probs(M - 1)
            log_a = (-0.5 * np.log(self.tau / (1.0 + self.tau)) + self._lik_ratio(qf)
                     + np.log(M / self.lam)
                     + np.log(back["birth"] / probs["death"]))
            if np.log(self.rng.random()) < log_a:
                del self.bases[m]
                self.B = self.B[:, keep]
                self.BtB, self.Bty, self.L, self.qf = BtB, Bty, L, qf
                counts[move][1] += 1
        else:
            m = int(self.rng.integers(M))
            old = self.bases[m]
            basis = self._propose_basis([f.variable for f in old.factors])
            col = self._column(basis)
            if col is None:
                return
            B = self.B.copy()
            B[:, m + 1] = col
            Btc = B.T @ col
            BtB = self.BtB.copy()
            BtB[m + 1, :] = Btc
            BtB[:, m + 1] = Btc
            Bty = self.Bty.copy()
            Bty[m + 1] = col @ self.y
            L, qf = self._qf(BtB, Bty)
            if L is None:
                return
            if np.log(self.rng.random()) < self._lik_ratio(qf):
                self.bases[m] = basis
                self.B = B
                self.BtB, self.Bty, self.L, self.qf = BtB, Bty, L, qf
                counts[move][1] += 1

    def gibbs(self):
        rng, p = self.rng, self.prior
        k = self.B.shape[1]
        shrink = 1.0 / (1.0 + self.tau)
        mean = shrink * linalg.cho_solve((self.L, True), self.Bty, check_finite=False)
        z = rng.standard_normal(k)
        # Cov = s2 * shrink * (L L')^-1, so draw L'^-1 z.
        noise = linalg.solve_triangular(self.L, z, lower=True, trans="T", check_finite=False)
        self.beta = mean + np.sqrt(self.s2 * shrink) * noise
        fit = self.B @ self.beta
        sse = float(np.sum((self.y - fit) ** 2))
        bbb = float(self.beta @ self.BtB @ self.beta)
        shape = p.s2_shape + 0.5 * (self.n + k)
        scale = p.s2_scale + 0.5 * (sse + self.tau * bbb)
        self.s2 = max(scale / rng.gamma(shape), 1e-300)
        self.tau = rng.gamma(p.tau_shape + 0.5 * k) / (self.tau_rate + 0.5 * bbb / self.s2)
        self.lam = rng.gamma(p.lam_shape + len(self.bases)) / (p.lam_rate + 1.0)


def fit_bass(X, y, mcmc: McmcConfig = DESK_MCMC, prior: PriorConfig | None = None, seed=0) -> BassPosterior:
    """Run one RJMCMC chain and keep every ``thin``-th draw after burn-in.

    Outputs are centered before fitting; the mean is added back to each
    stored intercept. Proposals whose basis matrix is numerically singular,
    or whose new basis is nonzero on too few training points, are rejected.
    """
    X = np.asarray(X.points if isinstance(X, SampleMatrix) else X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    if n < 2 or y.shape[0] != n:
        raise ValueError("need at least 2 training points with matching outputs")
    if np.any((X < 0.0) | (X > 1.0)):
        raise DomainError("training inputs must lie in [0, 1]")
    prior = prior or PriorConfig()
    rng = np.random.default_rng(seed)
    y_mean = float(np.mean(y))
    chain = _Chain(X, y - y_mean, prior, rng)
    counts = {m: [0, 0] for m in ("birth", "death", "change")}
    samples = []
    for it in range(1, mcmc.chain_length + 1):
        chain.step(counts)
        chain.gibbs()
        if it > mcmc.burn_in and (it - mcmc.burn_in) % mcmc.thin == 0:
            samples.append(BassSample(
                intercept=float(chain.beta[0]) + y_mean,
                coefficients=chain.beta[1:].copy(),
                bases=list(chain.bases),
                noise_variance=chain.s2,
            ))
    return BassPosterior(samples, mcmc, d, {m: (a / t if t else 0.0) for m, (t, a) in counts.items()})


def predict_ensemble(posterior: BassPosterior, X, chunk: int = 4096) -> np.ndarray:
    """Evaluate every posterior draw, computing each distinct basis only once."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if np.any((X < 0.0) | (X > 1.0)):
        raise DomainError("prediction points must lie in [0, 1]")
    ids: dict[BasisFunction, int] = {}
    for s in posterior.samples:
        for b in s.bases:
            ids.setdefault(b, len(ids))
    unique = list(ids)
    coef = np.zeros((len(posterior.samples), len(unique)))
    for r, s in enumerate(posterior.samples):
        for a, b in zip(s.coefficients, s.bases):
            coef[r, ids[b]] += a
    intercepts = np.array([s.intercept for s in posterior.samples])
    out = np.empty((len(posterior.samples), X.shape[0]))
    for start in range(0, X.shape[0], chunk):
        xs = X[start:start + chunk]
        cols = np.empty((xs.shape[0], len(unique)))
        for j, b in enumerate(unique):
            cols[:, j] = b(xs)
        out[:, start:start + chunk] = intercepts[:, None] + coef @ cols.T
    return out


def bass_predict(posterior: BassPosterior, X):
    """Posterior mean and standard deviation of the draws at each point."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    draws = predict_ensemble(posterior, np.atleast_2d(X))
    mean, sd = draws.mean(axis=0), draws.std(axis=0)
    if single:
        return float(mean[0]), float(sd[0])
    return mean, sd


# ---------------------------------------------------------------------------
# closed-form moments and indices

def hinge_moment_c1(f: HingeFactor) -> float:
    """``int_0^1 max(0, s (t - knot)) dt``."""
    return (1.0 - f.knot) ** 2 / 2.0 if f.sign > 0 else f.knot ** 2 / 2.0


def _cross_moment(s1, t1, s2, t2):
    # Product is s1 s2 (t - t1)(t - t2) on the intersection of the supports.
    lo = np.maximum(np.where(s1 > 0, t1, 0.0), np.where(s2 > 0, t2, 0.0))
    hi = np.minimum(np.where(s1 > 0, 1.0, t1), np.where(s2 > 0, 1.0, t2))

    def F(t):
        return t ** 3 / 3.0 - (t1 + t2) * t ** 2 / 2.0 + t1 * t2 * t

    return np.where(hi > lo, s1 * s2 * (F(hi) - F(lo)), 0.0)


def hinge_cross_moment_e(f: HingeFactor, g: HingeFactor) -> float:
    """``int_0^1 h_f(t) h_g(t) dt`` for two hinges on the same variable."""
    if f.variable != g.variable:
        raise InvalidPair(f"hinges act on different variables ({f.variable}, {g.variable})")
    return float(_cross_moment(np.float64(f.sign), np.float64(f.knot), np.float64(g.sign), np.float64(g.knot)))


def _moment_tables(sample: BassSample, variables: list[int]):
    """Per-variable first moments ``C1[m, j]`` and cross moments ``E2[m, m', j]``.

    Row 0 is the intercept. A basis without variable ``j`` contributes a
    factor 1 to every moment in that coordinate.
    """
    M = sample.n_bases + 1
    p = len(variables)
    col = {v: j for j, v in enumerate(variables)}
    present = np.zeros((M, p), dtype=bool)
    sign = np.ones((M, p))
    knot = np.zeros((M, p))
    for m, b in enumerate(sample.bases, start=1):
        for f in b.factors:
            j = col[f.variable]
            present[m, j], sign[m, j], knot[m, j] = True, f.sign, f.knot
    c1 = np.where(sign > 0, (1.0 - knot) ** 2 / 2.0, knot ** 2 / 2.0)
    C1 = np.where(present, c1, 1.0)
    E2 = _cross_moment(sign[:, None, :], knot[:, None, :], sign[None, :, :], knot[None, :, :])
    both = present[:, None, :] & present[None, :, :]
    E2 = np.where(both, E2, C1[:, None, :] * C1[None, :, :])
    return C1, E2


@dataclass
class BassSobol:
    """Per-draw closed-form indices and their posterior summaries."""

    first_order: np.ndarray  # (n_samples, d)
    total_order: np.ndarray
    total_variance: np.ndarray
    second_order: dict[tuple[int, int], np.ndarray] | None = None
    level: float = 0.95

    def _band(self, a):
        alpha = (1.0 - self.level) / 2.0
        return np.quantile(a, alpha, axis=0), np.quantile(a, 1.0 - alpha, axis=0)

    @property
    def first_mean(self):
        return self.first_order.mean(axis=0)

    @property
    def total_mean(self):
        return self.total_order.mean(axis=0)

    @property
    def total_band(self):
        return self._band(self.total_order)

    @property
    def first_band(self):
        return self._band(self.first_order)

    def summary(self):
        from .sobol_analysis import BootstrapCI, SobolIndices

        lo, hi = self.total_band
        second = None
        if self.second_order is not None:
            second = {ij: float(v.mean()) for ij, v in self.second_order.items()}
        idx = SobolIndices(self.first_mean, self.total_mean, float(self.total_variance.mean()), 0, second)
        return idx, BootstrapCI(lo, hi, self.level, self.first_order.shape[0])


def sample_sobol(sample: BassSample, d: int, pairs=None):
    """Closed-form ``(first, total, variance, second)`` for one posterior draw.

    With ``G_u = E[E[f | x_u]^2]`` and ``f0 = E f``: ``S_i = (G_i - f0^2) / V``,
    ``T_i = (G_all - G_{-i}) / V`` and ``V = G_all - f0^2``.
    """
    a = np.concatenate([[sample.intercept], sample.coefficients])
    used = sorted({f.variable for b in sample.bases for f in b.factors})
    first = np.zeros(d)
    total = np.zeros(d)
    second = {} if pairs is not None else None
    if not used:
        raise DegenerateVariance("emulator draw is constant")
    C1, E2 = _moment_tables(sample, used)
    P1 = C1[:, None, :] * C1[None, :, :]
    aa = np.outer(a, a)
    f0 = float(a @ np.prod(C1, axis=1))
    g_all = float(np.sum(aa * np.prod(E2, axis=2)))
    V = g_all - f0 * f0
    if not V > 1e-12 * max(abs(g_all), 1e-300):
        raise DegenerateVariance("emulator draw has zero variance")
    p = len(used)
    # Products over all coordinates except j, via prefix/suffix cumulative products.
    def excl(T):
        ones = np.ones(T.shape[:2] + (1,))
        pre = np.concatenate([ones, np.cumprod(T, axis=2)[:, :, :-1]], axis=2)
        suf = np.concatenate([np.cumprod(T[:, :, ::-1], axis=2)[:, :, ::-1][:, :, 1:], ones], axis=2)
        return pre * suf
    P1_excl = excl(P1)
    E2_excl = excl(E2)
    for j, v in enumerate(used):
        g_i = float(np.sum(aa * E2[:, :, j] * P1_excl[:, :, j]))
        g_not_i = float(np.sum(aa * P1[:, :, j] * E2_excl[:, :, j]))
        first[v] = (g_i - f0 * f0) / V
        total[v] = (g_all - g_not_i) / V
    if pairs is not None:
        pos = {v: j for j, v in enumerate(used)}
        for i, k in pairs:
            if i == k:
                raise InvalidPair(f"second-order index needs two distinct inputs, got ({i}, {k})")
            if i not in pos or k not in pos:
                second[(min(i, k), max(i, k))] = 0.0
                continue
            ji, jk = pos[i], pos[k]
            mask = np.ones(p, dtype=bool)
            mask[[ji, jk]] = False
            g_ik = float(np.sum(aa * E2[:, :, ji] * E2[:, :, jk] * np.prod(P1[:, :, mask], axis=2)))
            second[(min(i, k), max(i, k))] = (g_ik - f0 * f0) / V - first[i] - first[k]
    return first, total, V, second


def bass_sobol(posterior: BassPosterior, d: int, second_order=False) -> BassSobol:
    """Closed-form indices for every posterior draw.

    ``second_order`` may be ``True`` (all pairs) or an iterable of pairs.
    """
    if not posterior.samples:
        raise ValueError("posterior has no samples")
    pairs = None
    if second_order is True:
        pairs = list(combinations(range(d), 2))
    elif second_order:
        pairs = list(second_order)
    firsts, totals, vs, seconds = [], [], [], []
    for s in posterior.samples:
        f, t, v, sec = sample_sobol(s, d, pairs)
        firsts.append(f)
        totals.append(t)
        vs.append(v)
        seconds.append(sec)
    second = None
    if pairs is not None:
        second = {ij: np.array([sec[ij] for sec in seconds]) for ij in seconds[0]}
    return BassSobol(np.array(firsts), np.array(totals), np.array(vs), second)


def bass_emulation_loop(evaluator, d: int, pool_size: int = POOL_SIZE, seed=0,
                        mcmc: McmcConfig = DESK_MCMC, prior: PriorConfig | None = None,
                        threshold: float = SD_THRESHOLD, max_size: int | None = None,
                        on_round: Callable | None = None,
                        should_stop: Callable[[], bool] | None = None) -> EmulationLoopReport:
    """Refit on fresh Latin hypercube samples of size ``10d, 11d, ...`` until
    the posterior ensemble sd is below ``threshold`` over the whole pool.

    ``should_stop()`` returning true after a round ends the loop unconverged.
    """
    rng = np.random.default_rng(seed)
    pool = lhs(pool_size, d, rng).points
    max_size = 200 * d if max_size is None else max_size
    n = 10 * d
    evals = 0
    history, sizes = [], []
    post = None
    while n <= max_size:
        X = lhs(n, d, rng).points
        y = np.asarray(evaluator(X), dtype=float).reshape(-1)
        evals += n
        post = fit_bass(X, y, mcmc=mcmc, prior=prior, seed=rng)
        max_sd = float(np.max(bass_predict(post, pool)[1]))
        history.append(max_sd)
        sizes.append(n)
        if on_round is not None:
            on_round(n, post, max_sd)
        logger.info("bass loop d=%d n=%d max pool sd %.4g", d, n, max_sd)
        if max_sd < threshold:
            return EmulationLoopReport(post, evals, n, history, True, sizes)
        if should_stop is not None and should_stop():
            break
        n += d
    return EmulationLoopReport(post, evals, sizes[-1] if sizes else 0, history, False, sizes)
