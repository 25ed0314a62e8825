"""Fundamental GL(N) inhomogeneous chain: L-operators, monodromies, zero modes.

The L-operator on site n is L_n(u)_{ij} = delta_ij + g(u, xi_n) E_ji^{(n)}.
The monodromy over a site range is the ordered product with the highest site
leftmost, so the full monodromy factorizes as T = T_right T_left with the
left part covering sites 1..m.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from .algebra import TOL_DISTINCT, PoleError, VacuumRatios, g, tol_pole
from .hilbert import (DENSE_LIMIT, ManyBodyOperator, apply_elementary, check_dense,
                      embed_elementary)

RANGES = ("full", "left", "right")


@dataclass(frozen=True)
class ModelSpec:
    """Chain definition. Colors and sites are 1-based in the public API."""

    N: int
    M: int
    c: complex
    xi: tuple[complex, ...]
    m: int
    twist: tuple[complex, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "xi", tuple(complex(x) for x in self.xi))
        tw = tuple(complex(k) for k in self.twist) or (1 + 0j,) * self.N
        object.__setattr__(self, "twist", tw)
        self.validate()

    def validate(self, limit: int = DENSE_LIMIT) -> None:
        if self.c == 0:
            raise ValueError("coupling c must be nonzero")
        check_dense(self.N, self.M, limit)
        if len(self.xi) != self.M:
            raise ValueError(f"need {self.M} inhomogeneities, got {len(self.xi)}")
        if not 0 <= self.m <= self.M:
            raise ValueError(f"split site m={self.m} outside 0..{self.M}")
        if len(self.twist) != self.N:
            raise ValueError(f"twist must have {self.N} entries")
        bad = _xi_violation(np.array(self.xi), self.c)
        if bad:
            raise ValueError(f"inhomogeneities violate invariants: {bad}")

    @classmethod
    def random(cls, N: int = 3, M: int = 4, seed: int = 7, c: complex = 1.0,
               m: int | None = None, twist=()) -> "ModelSpec":
        """xi uniform in [0,1] + i[0,0.3], resampled until admissible."""
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            xi = rng.uniform(0, 1, M) + 1j * rng.uniform(0, 0.3, M)
            if not _xi_violation(xi, complex(c)):
                break
        else:  # pragma: no cover
            raise RuntimeError("could not sample admissible inhomogeneities")
        m = M // 2 if m is None else m
        return cls(N, M, c, tuple(xi), m, twist)

    def with_twist(self, twist) -> "ModelSpec":
        return ModelSpec(self.N, self.M, self.c, self.xi, self.m, tuple(twist))

    def with_split(self, m: int) -> "ModelSpec":
        return ModelSpec(self.N, self.M, self.c, self.xi, m, self.twist)

    def sites(self, rng) -> tuple[int, ...]:
        """Resolve a range tag or an explicit iterable of 1-based sites."""
        if isinstance(rng, str):
            if rng == "full":
                return tuple(range(1, self.M + 1))
            if rng == "left":
                return tuple(range(1, self.m + 1))
            if rng == "right":
                return tuple(range(self.m + 1, self.M + 1))
            raise ValueError(f"unknown range {rng!r}; expected one of {RANGES}")
        out = tuple(int(n) for n in rng)
        if any(not 1 <= n <= self.M for n in out):
            raise IndexError(f"sites {out} outside 1..{self.M}")
        return out


def _xi_violation(xi: np.ndarray, c: complex) -> str:
    d = xi[:, None] - xi[None, :]
    off = ~np.eye(xi.size, dtype=bool)
    if xi.size > 1 and np.abs(d[off]).min() <= TOL_DISTINCT:
        return "coinciding inhomogeneities"
    if xi.size > 1 and min(np.abs(d[off] - c).min(), np.abs(d[off] + c).min()) <= TOL_DISTINCT:
        return "two inhomogeneities differ by +-c"
    return ""


def build_L(n: int, u: complex, spec: ModelSpec) -> list[list[np.ndarray]]:
    """Site-local N x N matrix of N x N matrices: L_n(u)_{ij} acting on site n."""
    if not 1 <= n <= spec.M:
        raise IndexError(f"site {n} outside 1..{spec.M}")
    gg = g(u, spec.xi[n - 1], spec.c)
    N = spec.N
    out = []
    for i in range(N):
        row = []
        for j in range(N):
            a = np.eye(N, dtype=complex) if i == j else np.zeros((N, N), dtype=complex)
            a[j, i] += gg
            row.append(a)
        out.append(row)
    return out


@dataclass(frozen=True, eq=False)
class Monodromy:
    """N x N array of chain operators at spectral parameter u (or zero mode)."""

    entries: tuple[tuple[ManyBodyOperator, ...], ...]
    u: complex | None
    range: str

    def __getitem__(self, ij) -> ManyBodyOperator:
        """1-based (i, j) access."""
        i, j = ij
        return self.entries[i - 1][j - 1]

    @property
    def N(self) -> int:
        return len(self.entries)


def _as_monodromy(mats, N: int, M: int, u, tag: str) -> Monodromy:
    return Monodromy(tuple(tuple(ManyBodyOperator(N, M, mats[i][j]) for j in range(N))
                           for i in range(N)), u, tag)


@lru_cache(maxsize=128)
def _monodromy_mats(spec: ModelSpec, u: complex, sites: tuple[int, ...]):
    N, M = spec.N, spec.M
    D = N ** M
    for n in sites:
        if abs(u - spec.xi[n - 1]) < tol_pole(spec.c):
            raise PoleError(f"spectral parameter {u} hits xi_{n}")
    T = [[np.eye(D, dtype=complex) if i == j else np.zeros((D, D), dtype=complex)
          for j in range(N)] for i in range(N)]
    for n in sorted(sites):
        gg = spec.c / (u - spec.xi[n - 1])
        new = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = T[i][j].copy()
                # (L T)_ij = T_ij + g sum_k E_ki^{(n)} T_kj
                for k in range(N):
                    acc += gg * apply_elementary(k + 1, i + 1, n, T[k][j], N, M)
                row.append(acc)
            new.append(row)
        T = new
    for row in T:
        for a in row:
            a.setflags(write=False)
    return T


def build_monodromy(u: complex, rng, spec: ModelSpec) -> Monodromy:
    """T(u) over 'full', 'left' (1..m), 'right' (m+1..M) or explicit sites."""
    sites = spec.sites(rng)
    mats = _monodromy_mats(spec, complex(u), sites)
    return _as_monodromy(mats, spec.N, spec.M, complex(u), rng if isinstance(rng, str) else "sites")


@lru_cache(maxsize=64)
def _zero_mode_mats(spec: ModelSpec, sites: tuple[int, ...]):
    N, M = spec.N, spec.M
    D = N ** M
    out = []
    for i in range(N):
        row = []
        for j in range(N):
            acc = np.zeros((D, D), dtype=complex)
            for n in sites:
                acc += embed_elementary(j + 1, i + 1, n, N, M).matrix
            acc.setflags(write=False)
            row.append(acc)
        out.append(row)
    return out


def build_zero_mode(rng, spec: ModelSpec) -> Monodromy:
    """(T[0])_{ij} = sum over sites in range of E_ji^{(n)}."""
    sites = spec.sites(rng)
    return _as_monodromy(_zero_mode_mats(spec, sites), spec.N, spec.M, None,
                         rng if isinstance(rng, str) else "sites")


def transfer_matrix(w: complex, spec: ModelSpec, twist=None) -> ManyBodyOperator:
    """sum_i kappa_i T_ii(w); twist defaults to spec.twist."""
    kap = spec.twist if twist is None else tuple(complex(k) for k in twist)
    if len(kap) != spec.N:
        raise ValueError(f"twist must have {spec.N} entries")
    T = _monodromy_mats(spec, complex(w), spec.sites("full"))
    acc = sum(kap[i] * T[i][i] for i in range(spec.N))
    return ManyBodyOperator(spec.N, spec.M, acc)


def check_rtt(u: complex, v: complex, spec: ModelSpec, rng="full") -> float:
    """Max-norm of R(u,v) T1(u) T2(v) - T2(v) T1(u) R(u,v), R = 1 + g(u,v) P.

    Componentwise this is
    T_ac(u)T_bd(v) - T_bd(v)T_ac(u) + g(u,v)[T_bc(u)T_ad(v) - T_bc(v)T_ad(u)].
    """
    Tu = _monodromy_mats(spec, complex(u), spec.sites(rng))
    Tv = _monodromy_mats(spec, complex(v), spec.sites(rng))
    gg = g(u, v, spec.c)
    N = spec.N
    worst = 0.0
    for a in range(N):
        for b in range(N):
            for c_ in range(N):
                for d in range(N):
                    r = (Tu[a][c_] @ Tv[b][d] - Tv[b][d] @ Tu[a][c_]
                         + gg * (Tu[b][c_] @ Tv[a][d] - Tv[b][c_] @ Tu[a][d]))
                    worst = max(worst, float(np.abs(r).max()))
    return worst


def factorization_residual(u: complex, spec: ModelSpec) -> float:
    """Max-norm of T(u) - T_right(u) T_left(u), entrywise in auxiliary space."""
    T = _monodromy_mats(spec, complex(u), spec.sites("full"))
    L = _monodromy_mats(spec, complex(u), spec.sites("left"))
    R = _monodromy_mats(spec, complex(u), spec.sites("right"))
    N = spec.N
    worst = 0.0
    for i in range(N):
        for j in range(N):
            prod = sum(R[i][k] @ L[k][j] for k in range(N))
            worst = max(worst, float(np.abs(T[i][j] - prod).max()))
    return worst


def vacuum_ratios(spec: ModelSpec) -> VacuumRatios:
    """lambda_i(w) of the full chain: lambda_1 = prod f(w, xi), the rest 1."""
    return VacuumRatios.fundamental(spec.xi, spec.c, spec.N)


@dataclass(frozen=True)
class CompositeRatios:
    """Vacuum eigenvalues of the left block (sites in `sites`).

    For GL(3), l1 = lambda_1/lambda_2 and l3 = lambda_3/lambda_2 of the block;
    the zero-mode coefficients lambda_i[0] are the 1/u coefficients.
    """

    ratios: VacuumRatios
    zero: tuple[complex, ...]
    sites: tuple[int, ...]

    def ell(self, k: int, u):
        """l_1 for k = 1, l_3 for k = 3 (GL(3) naming, also valid for GL(2) k=1)."""
        if k == 1:
            return self.ratios.lambdas[0](u) / self.ratios.lambdas[1](u)
        if k == 3 and self.ratios.rank >= 3:
            return self.ratios.lambdas[2](u) / self.ratios.lambdas[1](u)
        raise ValueError(f"no ratio l_{k} for rank {self.ratios.rank}")

    def ell_zero(self, k: int) -> complex:
        if k == 1:
            return self.zero[0] - self.zero[1]
        if k == 3 and len(self.zero) >= 3:
            return self.zero[2] - self.zero[1]
        raise ValueError(f"no coefficient l_{k}[0] for rank {len(self.zero)}")

    def log_alpha_sum(self, roots) -> complex:
        """sum_k log alpha_k(t^k) over all levels; alpha_k = lambda_k/lambda_{k+1}."""
        tot = 0j
        for k, t in enumerate(roots):
            t = np.asarray(t, dtype=complex)
            if t.size:
                tot += complex(np.sum(self.ratios.log_alpha(k, t)))
        return tot

    def alpha_product(self, roots) -> complex:
        """prod_k alpha_k(t^k), e.g. l1(u)/l3(v) for GL(3)."""
        out = 1 + 0j
        for k, t in enumerate(roots):
            t = np.asarray(t, dtype=complex)
            if t.size:
                lam = self.ratios.lambdas
                out *= complex(np.prod(lam[k](t) / lam[k + 1](t)))
        return out


def composite_ratios(spec: ModelSpec, sites="left") -> CompositeRatios:
    """Block ratios for the fundamental chain; per-site ratios via sites=[n]."""
    s = spec.sites(sites)
    xi = [spec.xi[n - 1] for n in s]
    zero = (complex(len(s)),) + (0j,) * (spec.N - 1)
    return CompositeRatios(VacuumRatios.fundamental(xi, spec.c, spec.N), zero, s)


def local_ratios(spec: ModelSpec, n: int) -> CompositeRatios:
    """Single-site ratios l_k(u|n): f(u, xi_n) for k = 1, 1 for k = 3."""
    return composite_ratios(spec, [n])


def identity(spec: ModelSpec) -> ManyBodyOperator:
    return ManyBodyOperator.identity(spec.N, spec.M)


def elementary(i: int, j: int, n: int, spec: ModelSpec) -> ManyBodyOperator:
    return embed_elementary(i, j, n, spec.N, spec.M)


def left_number_diagonal(spec: ModelSpec, sites: Iterable[int] | str = "left") -> np.ndarray:
    """(N^M, N) array: per basis state, count of color i on the given sites.

    T^{(range)}_{ii}[0] is diagonal with these entries, which lets exp of any
    linear combination be formed exactly.
    """
    from .hilbert import basis_digits
    s = np.array(spec.sites(sites), dtype=int) - 1
    d = basis_digits(spec.N, spec.M)[:, s]
    return np.stack([(d == k).sum(axis=1) for k in range(spec.N)], axis=1)


def sample_points(spec: ModelSpec, n: int, seed: int, rmin: float = 3.0,
                  rmax: float = 10.0) -> list[complex]:
    """Points with |w| in [rmin, rmax] * max|xi| (at least [rmin, rmax]).

    A ring far outside the xi cloud keeps tau away from its poles.
    """
    rng = np.random.default_rng(seed)
    scale = max(1.0, max(abs(x) for x in spec.xi))
    out = []
    while len(out) < n:
        r = scale * rng.uniform(rmin, rmax)
        w = r * np.exp(2j * np.pi * rng.uniform())
        if all(abs(w - x) > 1 for x in spec.xi):
            out.append(complex(w))
    return out

