"""Scalar building blocks of the rational GL(N) Bethe ansatz.

Rational functions ``g`` and ``f``, set products, the transfer-matrix
eigenvalue and the nested Bethe equations (residual and analytic Jacobian)
in logarithmic form.

Bethe roots are passed as a sequence of levels ``(t^1, ..., t^{N-1})``.
For GL(3) the two levels are the usual sets ``u`` and ``v``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TOL_DISTINCT = 1e-8


class PoleError(ArithmeticError):
    """Raised when an argument hits a pole (or zero) of a rational function."""


def tol_pole(c: complex) -> float:
    return 1e-10 * max(1.0, abs(c))


def _check_coupling(c: complex) -> None:
    if c == 0:
        raise ValueError("coupling c must be nonzero")


def g(u: complex, v: complex, c: complex = 1.0) -> complex:
    """c / (u - v)."""
    _check_coupling(c)
    if abs(u - v) < tol_pole(c):
        raise PoleError(f"g: u={u!r} and v={v!r} coincide")
    return c / (u - v)


def f(u: complex, v: complex, c: complex = 1.0) -> complex:
    """(u - v + c) / (u - v), i.e. 1 + g(u, v)."""
    return 1 + g(u, v, c)


def prod_f(us: Sequence[complex], vs: Sequence[complex], c: complex = 1.0) -> complex:
    """Double product of f over two sets; 1 if either set is empty."""
    us = np.asarray(us, dtype=complex).ravel()
    vs = np.asarray(vs, dtype=complex).ravel()
    if us.size == 0 or vs.size == 0:
        return 1.0 + 0j
    _check_coupling(c)
    d = us[:, None] - vs[None, :]
    if np.min(np.abs(d)) < tol_pole(c):
        raise PoleError("prod_f: coinciding parameters")
    return complex(np.prod((d + c) / d))


def _log_f(x: np.ndarray, y: np.ndarray, c: complex) -> np.ndarray:
    """Elementwise principal log of f(x, y); rejects poles and zeros."""
    d = x - y
    tp = tol_pole(c)
    if d.size and (np.min(np.abs(d)) < tp or np.min(np.abs(d + c)) < tp):
        raise PoleError("log f: argument at a pole or zero")
    return np.log(d + c) - np.log(d)


def _dlog_f(x: np.ndarray, y: np.ndarray, c: complex) -> np.ndarray:
    """d/dx log f(x, y) = 1/(x-y+c) - 1/(x-y)."""
    d = x - y
    return 1.0 / (d + c) - 1.0 / d


@dataclass(frozen=True)
class VacuumRatios:
    """Vacuum eigenvalues lambda_i(w) of the diagonal monodromy entries.

    ``lambdas[i]`` and ``dlog_lambdas[i]`` are vectorized callables. The
    Bethe equations only see the ratios alpha_k = lambda_k / lambda_{k+1};
    for GL(3) with lambda_2 = 1 these are r1 and 1/r3.
    """

    lambdas: tuple[Callable[[np.ndarray], np.ndarray], ...]
    dlog_lambdas: tuple[Callable[[np.ndarray], np.ndarray], ...]

    @property
    def rank(self) -> int:
        return len(self.lambdas)

    @classmethod
    def fundamental(cls, xi: Sequence[complex], c: complex, N: int) -> "VacuumRatios":
        """Fundamental chain: lambda_1(w) = prod_n f(w, xi_n), the rest 1."""
        xi = np.asarray(xi, dtype=complex).ravel()

        def lam1(w):
            w = np.asarray(w, dtype=complex)
            if xi.size == 0:
                return np.ones_like(w)
            d = w[..., None] - xi
            if np.min(np.abs(d)) < tol_pole(c):
                raise PoleError("vacuum eigenvalue evaluated at an inhomogeneity")
            return np.prod((d + c) / d, axis=-1)

        def dlog1(w):
            w = np.asarray(w, dtype=complex)
            if xi.size == 0:
                return np.zeros_like(w)
            return np.sum(_dlog_f(w[..., None], xi, c), axis=-1)

        def one(w):
            return np.ones_like(np.asarray(w, dtype=complex))

        def zero(w):
            return np.zeros_like(np.asarray(w, dtype=complex))

        return cls((lam1,) + (one,) * (N - 1), (dlog1,) + (zero,) * (N - 1))

    def r(self, k: int, w):
        """lambda_k / lambda_2 (k = 1, 3) in the GL(3) normalization."""
        return self.lambdas[k - 1](w) / self.lambdas[1](w)

    def log_alpha(self, k: int, w) -> np.ndarray:
        """log(lambda_k / lambda_{k+1}), level index k counted from 0."""
        return np.log(self.lambdas[k](w)) - np.log(self.lambdas[k + 1](w))

    def dlog_alpha(self, k: int, w) -> np.ndarray:
        return self.dlog_lambdas[k](w) - self.dlog_lambdas[k + 1](w)


def _levels(roots: Sequence[Sequence[complex]]) -> list[np.ndarray]:
    return [np.asarray(t, dtype=complex).ravel() for t in roots]


def _twist(twist, N: int) -> np.ndarray:
    if twist is None:
        return np.ones(N, dtype=complex)
    k = np.asarray(twist, dtype=complex).ravel()
    if k.size != N:
        raise ValueError(f"twist must have {N} entries, got {k.size}")
    return k


def tau(w: complex, roots: Sequence[Sequence[complex]], ratios: VacuumRatios,
        c: complex = 1.0, twist=None) -> complex:
    """Eigenvalue of the (twisted) transfer matrix on an on-shell state.

    sum_i kappa_i lambda_i(w) f(w, t^{i-1}) f(t^i, w), with t^0 = t^N = {}.
    For GL(3): r1(w) f(u, w) + f(w, u) f(v, w) + r3(w) f(w, v).
    """
    N = ratios.rank
    lv = _levels(roots)
    if len(lv) != N - 1:
        raise ValueError(f"expected {N - 1} root levels, got {len(lv)}")
    kap = _twist(twist, N)
    total = 0j
    for i in range(N):
        term = kap[i] * complex(ratios.lambdas[i](w))
        if i > 0:
            term *= prod_f([w], lv[i - 1], c)
        if i < N - 1:
            term *= prod_f(lv[i], [w], c)
        total += term
    return total


def _offdiag(n: int) -> tuple[np.ndarray, np.ndarray]:
    jj, ll = np.nonzero(~np.eye(n, dtype=bool))
    return jj, ll


def _reduce(x: np.ndarray) -> np.ndarray:
    """Map imaginary parts onto the principal strip (-pi, pi]."""
    im = -((-x.imag + np.pi) % (2 * np.pi) - np.pi)
    return x.real + 1j * im


def bethe_residual(roots: Sequence[Sequence[complex]], ratios: VacuumRatios,
                   twist=None, c: complex = 1.0) -> np.ndarray:
    """Log-form residuals of the twisted nested Bethe equations.

    For a root t_j of level k:

        log alpha_k(t_j) - log(kappa_{k+1}/kappa_k)
          - sum_{l != j} [log f(t_j, t_l) - log f(t_l, t_j)]
          - log f(t^{k+1}, t_j) + log f(t_j, t^{k-1})

    reduced modulo 2*pi*i. Components are ordered level by level.
    """
    N = ratios.rank
    lv = _levels(roots)
    kap = _twist(twist, N)
    out = []
    for k, t in enumerate(lv):
        if t.size == 0:
            continue
        r = ratios.log_alpha(k, t) - np.log(kap[k + 1] / kap[k])
        if t.size > 1:
            jj, ll = _offdiag(t.size)
            pair = np.zeros((t.size, t.size), dtype=complex)
            pair[jj, ll] = _log_f(t[jj], t[ll], c) - _log_f(t[ll], t[jj], c)
            r = r - pair.sum(axis=1)
        if k + 1 < len(lv) and lv[k + 1].size:
            r = r - _log_f(lv[k + 1][None, :], t[:, None], c).sum(axis=1)
        if k > 0 and lv[k - 1].size:
            r = r + _log_f(t[:, None], lv[k - 1][None, :], c).sum(axis=1)
        out.append(r)
    if not out:
        return np.zeros(0, dtype=complex)
    return _reduce(np.concatenate(out))


def bethe_jacobian(roots: Sequence[Sequence[complex]], ratios: VacuumRatios,
                   twist=None, c: complex = 1.0) -> np.ndarray:
    """Analytic d(residual_p)/d(root_q); twist only shifts the residual."""
    lv = _levels(roots)
    sizes = [t.size for t in lv]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    n = offs[-1]
    J = np.zeros((n, n), dtype=complex)
    for k, t in enumerate(lv):
        if t.size == 0:
            continue
        sl = slice(offs[k], offs[k + 1])
        diag = ratios.dlog_alpha(k, t).astype(complex)
        if t.size > 1:
            jj, ll = _offdiag(t.size)
            sym = np.zeros((t.size, t.size), dtype=complex)
            sym[jj, ll] = _dlog_f(t[jj], t[ll], c) + _dlog_f(t[ll], t[jj], c)
            diag = diag - sym.sum(axis=1)
            J[sl, sl] += sym
        if k + 1 < len(lv) and lv[k + 1].size:
            s = lv[k + 1]
            d1 = _dlog_f(s[None, :], t[:, None], c)
            diag = diag + d1.sum(axis=1)
            J[sl, offs[k + 1]:offs[k + 2]] = -d1
        if k > 0 and lv[k - 1].size:
            s = lv[k - 1]
            d1 = _dlog_f(t[:, None], s[None, :], c)
            diag = diag + d1.sum(axis=1)
            J[sl, offs[k - 1]:offs[k]] = -d1
        J[sl, sl] += np.diag(diag)
    return J


def bethe_twist_derivative(roots: Sequence[Sequence[complex]], N: int, i: int,
                           twist=None) -> np.ndarray:
    """d(residual)/d(kappa_i), i counted from 1."""
    kap = _twist(twist, N)
    out = []
    for k, t in enumerate(_levels(roots)):
        # residual carries -log kappa_{k+1} + log kappa_k (0-based k)
        val = 0j
        if i - 1 == k + 1:
            val -= 1 / kap[k + 1]
        if i - 1 == k:
            val += 1 / kap[k]
        out.append(np.full(t.size, val, dtype=complex))
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)
