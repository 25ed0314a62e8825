"""Dense operators on the N^M-dimensional chain space with weight sectors.

Basis states are tuples of colors (s_1, ..., s_M), s_n in {1..N}, ordered
lexicographically with site 1 the slowest index. Internally colors are
stored 0-based.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

DENSE_LIMIT = 3 ** 8


class DimensionError(ValueError):
    """Raised when the chain space exceeds the dense limit or shapes mismatch."""


def check_dense(N: int, M: int, limit: int = DENSE_LIMIT) -> int:
    if N < 2 or M < 1:
        raise ValueError(f"need N >= 2 and M >= 1, got N={N}, M={M}")
    dim = N ** M
    if dim > limit:
        raise DimensionError(f"N^M = {dim} exceeds the dense limit {limit}")
    return dim


@lru_cache(maxsize=32)
def basis_digits(N: int, M: int) -> np.ndarray:
    """(N^M, M) array of 0-based colors, row index = global basis index."""
    d = np.array(list(itertools.product(range(N), repeat=M)), dtype=np.int64)
    d.setflags(write=False)
    return d


@lru_cache(maxsize=32)
def _place_values(N: int, M: int) -> np.ndarray:
    return N ** np.arange(M - 1, -1, -1, dtype=np.int64)


def occupations(N: int, M: int) -> np.ndarray:
    """(N^M, N) array: number of sites in each color, per basis state."""
    d = basis_digits(N, M)
    return np.stack([(d == k).sum(axis=1) for k in range(N)], axis=1)


@dataclass(frozen=True)
class WeightSector:
    occupations: tuple[int, ...]
    basis_indices: np.ndarray = field(compare=False, repr=False)

    @property
    def dim(self) -> int:
        return int(self.basis_indices.size)

    @property
    def levels(self) -> tuple[int, ...]:
        """Bethe level cardinalities (a_1, ..., a_{N-1}); a_k = sum_{l>k} n_l."""
        occ = self.occupations
        return tuple(sum(occ[k:]) for k in range(1, len(occ)))


def compositions(M: int, N: int):
    """All tuples of N non-negative integers summing to M, lexicographic."""
    for cut in itertools.combinations(range(M + N - 1), N - 1):
        parts, prev = [], -1
        for x in cut + (M + N - 1,):
            parts.append(x - prev - 1)
            prev = x
        yield tuple(parts)


def sector_from_levels(levels, M: int) -> tuple[int, ...]:
    """Occupations (M - a_1, a_1 - a_2, ..., a_{N-1}) of a Bethe sector."""
    a = [M] + list(levels) + [0]
    occ = tuple(a[k] - a[k + 1] for k in range(len(a) - 1))
    if min(occ) < 0:
        raise ValueError(f"levels {tuple(levels)} not admissible for M={M}")
    return occ


def get_sector(N: int, M: int, occ) -> WeightSector:
    occ = tuple(int(x) for x in occ)
    if len(occ) != N or sum(occ) != M or min(occ) < 0:
        raise ValueError(f"invalid occupations {occ} for N={N}, M={M}")
    idx = np.nonzero((occupations(N, M) == np.array(occ)).all(axis=1))[0]
    return WeightSector(occ, idx)


def enumerate_sectors(N: int, M: int, limit: int = DENSE_LIMIT) -> list[WeightSector]:
    check_dense(N, M, limit)
    occ_all = occupations(N, M)
    out = []
    for occ in sorted(compositions(M, N), reverse=True):
        idx = np.nonzero((occ_all == np.array(occ)).all(axis=1))[0]
        out.append(WeightSector(occ, idx))
    return out


def sector_dimension(occ) -> int:
    d = factorial(sum(occ))
    for k in occ:
        d //= factorial(k)
    return d


@dataclass(frozen=True, eq=False)
class ManyBodyOperator:
    """Dense operator on the chain space; immutable by convention."""

    N: int
    M: int
    matrix: np.ndarray

    def __post_init__(self):
        d = self.N ** self.M
        if self.matrix.shape != (d, d):
            raise DimensionError(f"matrix shape {self.matrix.shape} != ({d}, {d})")

    @property
    def dimension(self) -> int:
        return self.N ** self.M

    @classmethod
    def identity(cls, N: int, M: int) -> "ManyBodyOperator":
        return cls(N, M, np.eye(N ** M, dtype=complex))

    @classmethod
    def zeros(cls, N: int, M: int) -> "ManyBodyOperator":
        return cls(N, M, np.zeros((N ** M, N ** M), dtype=complex))

    def block(self, rows: WeightSector, cols: WeightSector | None = None) -> np.ndarray:
        cols = rows if cols is None else cols
        return self.matrix[np.ix_(rows.basis_indices, cols.basis_indices)]

    def is_block_diagonal(self, sectors, tol: float = 0.0) -> bool:
        mask = np.zeros(self.matrix.shape, dtype=bool)
        for s in sectors:
            mask[np.ix_(s.basis_indices, s.basis_indices)] = True
        off = np.abs(self.matrix[~mask])
        return off.size == 0 or off.max() <= tol

    def norm(self) -> float:
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    def _same(self, other: "ManyBodyOperator"):
        if (self.N, self.M) != (other.N, other.M):
            raise DimensionError("operators act on different chains")

    def __matmul__(self, other):
        if isinstance(other, ManyBodyOperator):
            return op_mul(self, other)
        return self.matrix @ other

    def __rmatmul__(self, other):
        return other @ self.matrix

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1))

    def __neg__(self):
        return op_scale(self, -1)

    def __mul__(self, s):
        return op_scale(self, s)

    __rmul__ = __mul__


def op_mul(A: ManyBodyOperator, B: ManyBodyOperator) -> ManyBodyOperator:
    A._same(B)
    return ManyBodyOperator(A.N, A.M, A.matrix @ B.matrix)


def op_add(A: ManyBodyOperator, B: ManyBodyOperator) -> ManyBodyOperator:
    A._same(B)
    return ManyBodyOperator(A.N, A.M, A.matrix + B.matrix)


def op_scale(A: ManyBodyOperator, s: complex) -> ManyBodyOperator:
    return ManyBodyOperator(A.N, A.M, s * A.matrix)


def op_commutator(A: ManyBodyOperator, B: ManyBodyOperator) -> ManyBodyOperator:
    A._same(B)
    return ManyBodyOperator(A.N, A.M, A.matrix @ B.matrix - B.matrix @ A.matrix)


def _check_indices(i: int, j: int, n: int, N: int, M: int):
    if not (1 <= i <= N and 1 <= j <= N):
        raise IndexError(f"color indices ({i}, {j}) outside 1..{N}")
    if not 1 <= n <= M:
        raise IndexError(f"site {n} outside 1..{M}")


def elementary_map(i: int, j: int, n: int, N: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Source and target basis indices of E_ij on site n (1-based labels).

    E_ij^{(n)} e_src = e_tgt for each listed pair; all other columns vanish.
    """
    _check_indices(i, j, n, N, M)
    d = basis_digits(N, M)
    src = np.nonzero(d[:, n - 1] == j - 1)[0]
    tgt = src + (i - j) * _place_values(N, M)[n - 1]
    return src, tgt


def apply_elementary(i: int, j: int, n: int, X: np.ndarray, N: int, M: int) -> np.ndarray:
    """E_ij^{(n)} @ X without forming the operator."""
    src, tgt = elementary_map(i, j, n, N, M)
    out = np.zeros_like(X, dtype=np.result_type(X, complex))
    out[tgt] = X[src]
    return out


def embed_elementary(i: int, j: int, n: int, N: int, M: int) -> ManyBodyOperator:
    """E_ij (the N x N matrix unit |i><j|) on site n, identity elsewhere."""
    check_dense(N, M)
    src, tgt = elementary_map(i, j, n, N, M)
    A = np.zeros((N ** M, N ** M), dtype=complex)
    A[tgt, src] = 1.0
    return ManyBodyOperator(N, M, A)
