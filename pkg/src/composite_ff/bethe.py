"""Multistart damped Newton solver for the nested Bethe equations.

Also provides twist derivatives of the roots by implicit differentiation,
with a finite-difference cross-check that re-solves the twisted system.
"""
from __future__ import annotations

import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .algebra import (TOL_DISTINCT, PoleError, VacuumRatios, bethe_jacobian,
                      bethe_residual, bethe_twist_derivative)
from .model import CompositeRatios, ModelSpec, composite_ratios, vacuum_ratios

TOL_ROOT = 1e-11
TOL_DEDUPE = 1e-7
ROOT_INFINITY = 1e6
MAX_ITER = 200
MAX_HALVINGS = 8

STATS: Counter = Counter()
_stats_lock = threading.Lock()


def _bump(key: str, n: int = 1) -> None:
    with _stats_lock:
        STATS[key] += n


class SingularJacobianError(np.linalg.LinAlgError):
    pass


def _canon(t) -> tuple[complex, ...]:
    return tuple(sorted((complex(z) for z in t), key=lambda z: (z.real, z.imag)))


@dataclass(frozen=True)
class BetheRootSet:
    """One solution: roots per nesting level in canonical sorted order."""

    levels: tuple[tuple[complex, ...], ...]
    twist: tuple[complex, ...]
    residual: float = 0.0
    admissible: bool = True

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(_canon(t) for t in self.levels))
        object.__setattr__(self, "twist", tuple(complex(k) for k in self.twist))

    @property
    def sector(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.levels)

    @property
    def u(self) -> tuple[complex, ...]:
        return self.levels[0]

    @property
    def v(self) -> tuple[complex, ...]:
        return self.levels[1] if len(self.levels) > 1 else ()

    def flat(self) -> np.ndarray:
        return np.array([z for t in self.levels for z in t], dtype=complex)

    def label(self) -> str:
        body = ";".join(",".join(f"{z.real:.6f}{z.imag:+.6f}j" for z in t) for t in self.levels)
        return f"{self.sector}[{body}]"


@dataclass(frozen=True)
class RootDerivatives:
    """d(roots)/d(kappa_i) at the given root set, per level."""

    i: int
    levels: tuple[tuple[complex, ...], ...]

    def flat(self) -> np.ndarray:
        return np.array([z for t in self.levels for z in t], dtype=complex)


def _unflat(x: np.ndarray, card) -> list[np.ndarray]:
    out, p = [], 0
    for a in card:
        out.append(x[p:p + a])
        p += a
    return out


def _check_card(card, spec: ModelSpec) -> tuple[int, ...]:
    card = tuple(int(a) for a in card)
    if len(card) != spec.N - 1:
        raise ValueError(f"sector needs {spec.N - 1} level cardinalities, got {card}")
    chain = (spec.M,) + card + (0,)
    if any(chain[k] < chain[k + 1] for k in range(len(chain) - 1)):
        raise ValueError(f"sector {card} violates M >= a_1 >= ... >= 0 (M={spec.M})")
    return card


def newton(x0, card, ratios: VacuumRatios, twist, c: complex,
           tol: float = TOL_ROOT, max_iter: int = MAX_ITER) -> tuple[np.ndarray, float, int]:
    """Damped Newton on the log residual; returns (x, max|residual|, iterations).

    Failure (singular step, poles) returns residual inf.
    """
    x = np.array(x0, dtype=complex)
    _bump("newton_runs")
    with np.errstate(all="ignore"):
        try:
            F = bethe_residual(_unflat(x, card), ratios, twist, c)
        except PoleError:
            return x, np.inf, 0
        nF = float(np.abs(F).max()) if F.size else 0.0
        it = 0
        while it < max_iter and nF > 1e-2 * tol:
            it += 1
            try:
                dx = np.linalg.solve(bethe_jacobian(_unflat(x, card), ratios, twist, c), -F)
            except np.linalg.LinAlgError:
                return x, np.inf, it
            if not np.all(np.isfinite(dx)):
                return x, np.inf, it
            lam = 1.0
            for _ in range(MAX_HALVINGS + 1):
                xn = x + lam * dx
                try:
                    Fn = bethe_residual(_unflat(xn, card), ratios, twist, c)
                    nFn = float(np.abs(Fn).max())
                    if np.isfinite(nFn) and nFn < nF:
                        break
                except PoleError:
                    pass
                lam /= 2
            else:
                # no decrease; stop if already converged, otherwise give up
                break
            x, F, nF = xn, Fn, nFn
    return x, nF, it


def initial_guess(card, spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    """Random start near the xi cloud; level L is centered at mean(xi) - c(L+1)/2.

    With probability 0.4 two roots of a level are seeded as a pair split by c,
    which is how bound pairs appear in finite chains.
    """
    xi = np.array(spec.xi)
    center = xi.mean()
    radius = 2 * max(abs(spec.c), np.abs(xi - center).max())
    out = []
    for L, a in enumerate(card):
        ts = []
        while len(ts) < a:
            base = center - spec.c / 2 * (L + 1) \
                + radius * rng.uniform() * np.exp(2j * np.pi * rng.uniform())
            if a - len(ts) >= 2 and rng.uniform() < 0.4:
                ts += [base + spec.c / 2 + 0.05 * rng.normal(),
                       base - spec.c / 2 + 0.05 * rng.normal()]
            else:
                ts.append(base)
        out += ts
    return np.array(out, dtype=complex)


def admissibility(levels, spec: ModelSpec, residual: float, tol_root: float = TOL_ROOT) -> bool:
    if not residual < tol_root:
        return False
    flat = np.array([z for t in levels for z in t], dtype=complex)
    if flat.size and (not np.all(np.isfinite(flat)) or np.abs(flat).max() > ROOT_INFINITY):
        return False
    for t in levels:
        t = np.asarray(t)
        if t.size > 1:
            d = np.abs(t[:, None] - t[None, :]) + np.eye(t.size) * 1e300
            if d.min() < TOL_DISTINCT:
                return False
    return True


def _same(a: BetheRootSet, b: BetheRootSet, tol: float = TOL_DEDUPE) -> bool:
    return all(np.max(np.abs(np.array(x) - np.array(y)), initial=0.0) < tol
               for x, y in zip(a.levels, b.levels))


def _sort_key(rs: BetheRootSet):
    return tuple((round(z.real, 6), round(z.imag, 6)) for z in rs.flat())


def solve_sector(card, spec: ModelSpec, twist=None, seed: int = 0,
                 n_starts: int | None = None, workers: int = 1,
                 tol_root: float = TOL_ROOT) -> list[BetheRootSet]:
    """Distinct admissible root sets found from n_starts random starts.

    Completeness is not promised. Output is deterministic for a given seed
    regardless of `workers`: starts are drawn up front and results merged
    in start order before a canonical sort.
    """
    card = _check_card(card, spec)
    twist = spec.twist if twist is None else tuple(complex(k) for k in twist)
    _bump("solve_calls")
    if sum(card) == 0:
        return [BetheRootSet(tuple(() for _ in card), twist, 0.0, True)]
    n_starts = 50 * sum(card) if n_starts is None else int(n_starts)
    rng = np.random.default_rng(seed)
    starts = [initial_guess(card, spec, rng) for _ in range(n_starts)]
    ratios = vacuum_ratios(spec)

    def run(x0):
        x, nF, _ = newton(x0, card, ratios, twist, spec.c, tol_root)
        lv = [np.asarray(t) for t in _unflat(x, card)]
        if not admissibility(lv, spec, nF, tol_root):
            return None
        return BetheRootSet(tuple(lv), twist, nF, True)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            found = list(ex.map(run, starts))
    else:
        found = [run(x0) for x0 in starts]
    sols: list[BetheRootSet] = []
    for rs in found:
        if rs is not None and not any(_same(rs, s) for s in sols):
            sols.append(rs)
    return sorted(sols, key=_sort_key)


def refine(roots: BetheRootSet, spec: ModelSpec, twist=None, max_iter: int = MAX_ITER,
           tol_root: float = TOL_ROOT) -> tuple[BetheRootSet, int]:
    """Newton-polish a root set (possibly at another twist); returns (roots, steps)."""
    twist = roots.twist if twist is None else tuple(complex(k) for k in twist)
    card = roots.sector
    x, nF, it = newton(roots.flat(), card, vacuum_ratios(spec), twist, spec.c, tol_root, max_iter)
    lv = [np.asarray(t) for t in _unflat(x, card)]
    return BetheRootSet(tuple(lv), twist, nF, admissibility(lv, spec, nF, tol_root)), it


def residual_of(roots: BetheRootSet, spec: ModelSpec) -> float:
    F = bethe_residual(roots.levels, vacuum_ratios(spec), roots.twist, spec.c)
    return float(np.abs(F).max()) if F.size else 0.0


def jacobian_condition(roots: BetheRootSet, spec: ModelSpec) -> float:
    if not roots.flat().size:
        return 1.0
    J = bethe_jacobian(roots.levels, vacuum_ratios(spec), roots.twist, spec.c)
    return float(np.linalg.cond(J))


def kappa_derivatives(roots: BetheRootSet, spec: ModelSpec, i: int,
                      cond_max: float = 1e12) -> RootDerivatives:
    """d(roots)/d(kappa_i) = -J^{-1} dG/dkappa_i at the root set's own twist."""
    if not 1 <= i <= spec.N:
        raise IndexError(f"twist index {i} outside 1..{spec.N}")
    card = roots.sector
    if sum(card) == 0:
        return RootDerivatives(i, tuple(() for _ in card))
    J = bethe_jacobian(roots.levels, vacuum_ratios(spec), roots.twist, spec.c)
    if not np.isfinite(np.linalg.cond(J)) or np.linalg.cond(J) > cond_max:
        raise SingularJacobianError(f"singular Bethe Jacobian at {roots.label()}")
    dG = bethe_twist_derivative(roots.levels, spec.N, i, roots.twist)
    dx = np.linalg.solve(J, -dG)
    return RootDerivatives(i, tuple(tuple(t) for t in _unflat(dx, card)))


def kappa_derivatives_fd(roots: BetheRootSet, spec: ModelSpec, i: int,
                         h: float = 1e-6) -> tuple[RootDerivatives, int]:
    """Central differences of roots re-solved at kappa_i +- h.

    Returns the derivatives and the worst Newton step count used; the
    continuation starts from the unperturbed roots.
    """
    card = roots.sector
    outs, steps = [], 0
    for sgn in (1, -1):
        k = list(roots.twist)
        k[i - 1] += sgn * h
        rs, it = refine(roots, spec, k)
        if not rs.residual < TOL_ROOT:
            raise RuntimeError(f"twisted re-solve failed at kappa_{i} = {k[i - 1]}")
        outs.append(_match_order(roots.flat(), rs.flat(), card))
        steps = max(steps, it)
    d = (outs[0] - outs[1]) / (2 * h)
    return RootDerivatives(i, tuple(tuple(t) for t in _unflat(d, card))), steps


def _match_order(ref: np.ndarray, x: np.ndarray, card) -> np.ndarray:
    """Reorder x within levels to follow ref (canonical sorting may swap)."""
    out = []
    for r, t in zip(_unflat(ref, card), _unflat(x, card)):
        t = list(t)
        for z in r:
            k = int(np.argmin([abs(z - y) for y in t]))
            out.append(t.pop(k))
    return np.array(out, dtype=complex)


def log_ell_kappa_derivative(roots: BetheRootSet, derivs: RootDerivatives, spec: ModelSpec,
                             i: int | None = None, ratios: CompositeRatios | None = None) -> complex:
    """d/dkappa_i of sum_k log alpha_k(t^k) for the left-block ratios.

    For GL(3) this is d/dkappa_i log(l1(u)/l3(v)). `ratios` defaults to the
    block of sites 1..m; pass local ratios for a single site.
    """
    if i is not None and derivs.i != i:
        raise ValueError("derivatives belong to another twist index")
    ratios = composite_ratios(spec) if ratios is None else ratios
    tot = 0j
    for k, (t, dt) in enumerate(zip(roots.levels, derivs.levels)):
        if t:
            tot += complex(np.sum(ratios.ratios.dlog_alpha(k, np.array(t)) * np.array(dt)))
    return tot

