"""Sobol' sequences, the A/B/AB_i Sobol' design, and Latin hypercube samples."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import UnsupportedDimension

#: Bits of precision of the digital net; supports up to 2**32 - 1 points.
N_BITS = 32
MAX_DIM = 64


def parse_direction_numbers(text: str) -> list[tuple[int, int, list[int]]]:
    """Parse a Joe-Kuo style table: header line then ``d s a m_1 ... m_s``.

    Returns ``(s, a, m)`` entries for dimensions 2, 3, ... in order.
    """
    rows = []
    expected = 2
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        fields = [int(v) for v in line.split()]
        d, s, a, m = fields[0], fields[1], fields[2], fields[3:]
        if d != expected or len(m) != s:
            raise ValueError(f"malformed direction-number line for dimension {d}: {line!r}")
        rows.append((s, a, m))
        expected += 1
    return rows


@lru_cache(maxsize=1)
def direction_numbers() -> np.ndarray:
    """``(MAX_DIM, N_BITS)`` array of direction integers ``v_j = m_j 2^(32-j)``."""
    text = resources.files("sensbench").joinpath("data/joe_kuo_64.txt").read_text()
    table = parse_direction_numbers(text)
    v = np.zeros((len(table) + 1, N_BITS), dtype=np.uint64)
    # First coordinate is the van der Corput sequence: all m_j = 1.
    v[0] = [1 << (N_BITS - 1 - j) for j in range(N_BITS)]
    for dim, (s, a, m) in enumerate(table, start=1):
        vv = [0] * N_BITS
        for j in range(min(s, N_BITS)):
            vv[j] = m[j] << (N_BITS - 1 - j)
        for j in range(s, N_BITS):
            new = vv[j - s] ^ (vv[j - s] >> s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    new ^= vv[j - k]
            vv[j] = new
        v[dim] = vv
    return v


@dataclass(frozen=True)
class SampleMatrix:
    """``n x k`` point set in the unit hypercube."""

    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.points if dtype is None else self.points.astype(dtype)

    def __len__(self):
        return self.n


def sobol_sequence(n: int, k: int, skip: int = 0) -> SampleMatrix:
    """First ``n`` points of the unscrambled ``k``-dimensional Sobol' sequence.

    The all-zeros point at index 0 is always dropped, so row ``i`` holds
    sequence point ``skip + i + 1``. Points are generated in Gray-code order,
    i.e. point ``i`` is the XOR of the direction integers selected by the bits
    of ``i ^ (i >> 1)``.
    """
    if k > MAX_DIM:
        raise UnsupportedDimension(f"Sobol' table supports at most {MAX_DIM} dimensions, got {k}")
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    if n == 0:
        return SampleMatrix(np.zeros((0, k)))
    idx = np.arange(skip + 1, skip + n + 1, dtype=np.uint64)
    if idx[-1] >= np.uint64(1 << N_BITS):
        raise ValueError("too many points for a 32-bit Sobol' net")
    gray = idx ^ (idx >> np.uint64(1))
    v = direction_numbers()[:k]
    x = np.zeros((n, k), dtype=np.uint64)
    for bit in range(int(gray.max()).bit_length()):
        on = ((gray >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        x[on] ^= v[:, bit]
    return SampleMatrix(x.astype(np.float64) / float(1 << N_BITS))


@dataclass(frozen=True)
class SobolDesign:
    """Paired matrices for Saltelli-type estimators.

    ``ab_matrices[i]`` is ``a_matrix`` with column ``i`` taken from ``b_matrix``.
    """

    a_matrix: SampleMatrix
    b_matrix: SampleMatrix
    ab_matrices: tuple[SampleMatrix, ...]

    @property
    def base_size(self) -> int:
        return self.a_matrix.n

    @property
    def k(self) -> int:
        return self.a_matrix.k

    @property
    def n_rows(self) -> int:
        return self.base_size * (self.k + 2)

    def stacked(self) -> np.ndarray:
        """All evaluation rows in the order A, B, AB_0, ..., AB_{k-1}."""
        return np.vstack([self.a_matrix.points, self.b_matrix.points] + [m.points for m in self.ab_matrices])

    def ab_pair(self, i: int, j: int) -> np.ndarray:
        """A with columns ``i`` and ``j`` both taken from B."""
        m = self.a_matrix.points.copy()
        m[:, [i, j]] = self.b_matrix.points[:, [i, j]]
        return m


def ab_matrix(a: np.ndarray, b: np.ndarray, i: int) -> np.ndarray:
    m = a.copy()
    m[:, i] = b[:, i]
    return m


def sobol_design(N: int, k: int) -> SobolDesign:
    if N < 2 or k < 1:
        raise ValueError("need N >= 2 and k >= 1")
    pts = sobol_sequence(N, 2 * k).points
    a, b = pts[:, :k], pts[:, k:]
    return SobolDesign(
        SampleMatrix(a),
        SampleMatrix(b),
        tuple(SampleMatrix(ab_matrix(a, b, i)) for i in range(k)),
    )


def lhs(n: int, k: int, seed) -> SampleMatrix:
    """Latin hypercube sample with uniform jitter inside each stratum.

    Each column is an independent random permutation of ``0..n-1`` plus a
    ``U[0, 1)`` offset, divided by ``n``. Randomness comes from numpy's
    PCG64 generator, so ``seed`` may be an int or a ``np.random.Generator``.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((k, n)), axis=1).T
    pts = (perms + rng.random((n, k))) / n
    # Guard against rounding up to exactly 1.0.
    return SampleMatrix(np.minimum(pts, np.nextafter(1.0, 0.0)))
