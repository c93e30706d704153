"""Expandable polynomial test models and their exact Sobol' indices.

The family repeats a three-term pattern::

    y = x1 + 10 x1 x2^2 + 100 x3 + x4 + 10 x4 x5^2 + 100 x6 + ...

and a ``d``-dimensional model keeps the first ``d`` terms. Variables are
indexed from 0 in code, so term ``k`` (0-based) of block ``b = k // 3``
touches variables ``3b`` and ``3b + 1`` (interaction) or ``3b + 2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, InvalidDimension


class TermKind(enum.Enum):
    WEAK_LINEAR = "weak_linear"
    INTERACTION = "interaction"
    STRONG_LINEAR = "strong_linear"


@dataclass(frozen=True)
class TermDescriptor:
    kind: TermKind
    variable_indices: tuple[int, ...]
    coefficient: float

    def __str__(self):
        names = [f"x{i + 1}" for i in self.variable_indices]
        coef = "" if self.coefficient == 1 else f"{self.coefficient:g}"
        if self.kind is TermKind.INTERACTION:
            return f"{coef}{names[0]}{names[1]}^2"
        return f"{coef}{names[0]}"


def term(k: int) -> TermDescriptor:
    """Descriptor of the ``k``-th term (0-based) of the infinite sequence."""
    b, r = divmod(k, 3)
    if r == 0:
        return TermDescriptor(TermKind.WEAK_LINEAR, (3 * b,), 1.0)
    if r == 1:
        return TermDescriptor(TermKind.INTERACTION, (3 * b, 3 * b + 1), 10.0)
    return TermDescriptor(TermKind.STRONG_LINEAR, (3 * b + 2,), 100.0)


@dataclass(frozen=True)
class TestModel:
    """A ``dimension``-term polynomial model with a nominal cost per call.

    ``nominal_eval_time`` is in seconds and is only used for virtual-time
    accounting; calling the model never sleeps.
    """

    __test__ = False  # keep pytest from collecting this class

    dimension: int
    nominal_eval_time: float = 1.0
    terms: tuple[TermDescriptor, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise InvalidDimension(f"dimension must be an integer >= 2, got {self.dimension}")
        if not self.nominal_eval_time > 0:
            raise ValueError("nominal_eval_time must be positive")
        object.__setattr__(self, "terms", tuple(term(k) for k in range(self.dimension)))

    def __call__(self, x):
        return evaluate(self, x)

    def __str__(self):
        return " + ".join(str(t) for t in self.terms)


def build_model(d: int, t_nominal: float = 1.0) -> TestModel:
    return TestModel(d, t_nominal)


def _check_unit(x: np.ndarray) -> None:
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise DomainError("inputs must lie in [0, 1]")


def evaluate(model: TestModel, x) -> float | np.ndarray:
    """Exact model output for one point (shape ``(d,)``) or a batch ``(n, d)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dimension:
        raise ValueError(f"expected {model.dimension} columns, got shape {x.shape}")
    _check_unit(x)
    y = np.zeros(x.shape[:-1])
    for t in model.terms:
        if t.kind is TermKind.INTERACTION:
            i, j = t.variable_indices
            y = y + t.coefficient * x[..., i] * x[..., j] ** 2
        else:
            y = y + t.coefficient * x[..., t.variable_indices[0]]
    return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class AnalyticIndices:
    first_order: np.ndarray
    total_order: np.ndarray
    second_order: dict[tuple[int, int], float]
    total_variance: float


def _moment(p: int) -> Fraction:
    # E[t^p] for t ~ U[0, 1]
    return Fraction(1, p + 1)


def analytic_indices(d: int) -> AnalyticIndices:
    """Closed-form first-, second- and total-order indices for ``d`` terms.

    Blocks are independent and additive. Inside a full block the first two
    terms form ``u * w`` with ``u = x_a`` and ``w = 1 + 10 x_c^2``, so the
    ANOVA parts are ``Var(u) E[w]^2``, ``E[u]^2 Var(w)`` and
    ``Var(u) Var(w)``. All arithmetic is exact rational.
    """
    if int(d) != d or d < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {d}")
    mean_u, mean_u2 = _moment(1), _moment(2)
    var_u = mean_u2 - mean_u**2
    mean_w = 1 + 10 * _moment(2)
    mean_w2 = 1 + 20 * _moment(2) + 100 * _moment(4)
    var_w = mean_w2 - mean_w**2

    first = [Fraction(0)] * d
    second: dict[tuple[int, int], Fraction] = {}
    for k in range(d):
        t = term(k)
        if t.kind is TermKind.WEAK_LINEAR:
            a = t.variable_indices[0]
            # Overwritten below if the interaction term of this block exists.
            first[a] = var_u
        elif t.kind is TermKind.INTERACTION:
            a, c = t.variable_indices
            first[a] = var_u * mean_w**2
            first[c] = mean_u**2 * var_w
            second[(a, c)] = var_u * var_w
        else:
            first[t.variable_indices[0]] = 100**2 * var_u

    total_var = sum(first) + sum(second.values())
    total = list(first)
    for (i, j), v in second.items():
        total[i] += v
        total[j] += v
    return AnalyticIndices(
        first_order=np.array([float(v / total_var) for v in first]),
        total_order=np.array([float(v / total_var) for v in total]),
        second_order={ij: float(v / total_var) for ij, v in second.items()},
        total_variance=float(total_var),
    )
