"""Per-sector diagonalization of transfer matrices and Bethe-state matching."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .algebra import tau
from .bethe import BetheRootSet
from .hilbert import WeightSector, get_sector, sector_from_levels
from .model import ModelSpec, transfer_matrix, vacuum_ratios

log = logging.getLogger(__name__)

TOL_DEGENERATE = 1e-9
TOL_PAIRING = 1e-8
TOL_MATCH = 1e-8


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Right and left eigenvectors of a sector block, embedded in full space.

    `samples` holds Rayleigh quotients of t(w) at each sample point; the
    pairing is the bilinear product left . right (no conjugation).
    """

    sector: tuple[int, ...]
    twist: tuple[complex, ...]
    points: tuple[complex, ...]
    samples: tuple[complex, ...]
    right: np.ndarray
    left: np.ndarray
    pairing: complex
    eig_residual: float

    @property
    def levels(self) -> tuple[int, ...]:
        occ = self.sector
        return tuple(sum(occ[k:]) for k in range(1, len(occ)))

    def sample(self, w: complex) -> complex:
        return self.samples[self.points.index(w)]


@dataclass(frozen=True, eq=False)
class MatchedState:
    """Bethe roots bound to an eigenpair by tau agreement.

    A descendant carries the roots of a lower-sector ancestor: its extra
    roots sit at infinity and contribute no factors.
    """

    roots: BetheRootSet
    pair: EigenPair
    match_residual: float
    heldout_residual: float = 0.0

    @property
    def left(self) -> np.ndarray:
        return self.pair.left

    @property
    def right(self) -> np.ndarray:
        return self.pair.right

    @property
    def sector(self) -> tuple[int, ...]:
        return self.pair.levels

    @property
    def is_descendant(self) -> bool:
        return self.roots.sector != self.pair.levels

    def label(self) -> str:
        tag = "desc" if self.is_descendant else "bethe"
        return f"{tag}:{self.sector}:{self.roots.label()}"

    def rescaled(self, left_factor: complex = 1.0, right_factor: complex = 1.0) -> "MatchedState":
        p = self.pair
        q = EigenPair(p.sector, p.twist, p.points, p.samples, p.right * right_factor,
                      p.left * left_factor, p.pairing * left_factor * right_factor,
                      p.eig_residual)
        return MatchedState(self.roots, q, self.match_residual, self.heldout_residual)


def sector_of(card_or_occ, spec: ModelSpec) -> WeightSector:
    """Accept level cardinalities (length N-1) or occupations (length N)."""
    x = tuple(card_or_occ)
    occ = x if len(x) == spec.N else sector_from_levels(x, spec.M)
    return get_sector(spec.N, spec.M, occ)


def diagonalize_sector(sector, spec: ModelSpec, sample_points, twist=None,
                       tol_degenerate: float = TOL_DEGENERATE) -> list[EigenPair]:
    """Nondegenerate eigenpairs of the sector block of t(w_1).

    Left vectors come from the transposed block and are paired to right
    vectors by eigenvalue proximity. Degenerate clusters are skipped.
    """
    sec = sector_of(sector, spec)
    twist = spec.twist if twist is None else tuple(complex(k) for k in twist)
    pts = tuple(complex(w) for w in sample_points)
    blocks = [transfer_matrix(w, spec, twist).block(sec) for w in pts]
    A = blocks[0]
    ev_r, VR = sla.eig(A)
    ev_l, VL = sla.eig(A.T)
    cost = np.abs(ev_r[:, None] - ev_l[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.argsort(rows)
    cols = cols[order]
    D = spec.N ** spec.M
    out, n_deg = [], 0
    for q in range(ev_r.size):
        lam = ev_r[q]
        sep = np.delete(np.abs(ev_r - lam), q)
        scale = max(1.0, abs(lam))
        if sep.size and sep.min() < tol_degenerate * scale:
            n_deg += 1
            continue
        r, lft = VR[:, q], VL[:, cols[q]]
        pairing = complex(lft @ r)
        if abs(pairing) < TOL_PAIRING * np.linalg.norm(lft) * np.linalg.norm(r):
            n_deg += 1
            continue
        samples, worst = [], 0.0
        for B in blocks:
            ts = complex(lft @ B @ r) / pairing
            res_r = np.linalg.norm(B @ r - ts * r) / (np.linalg.norm(r) * max(1.0, abs(ts)))
            res_l = np.linalg.norm(lft @ B - ts * lft) / (np.linalg.norm(lft) * max(1.0, abs(ts)))
            worst = max(worst, res_r, res_l)
            samples.append(ts)
        R = np.zeros(D, dtype=complex)
        L = np.zeros(D, dtype=complex)
        R[sec.basis_indices] = r
        L[sec.basis_indices] = lft
        out.append(EigenPair(sec.occupations, twist, pts, tuple(samples), R, L, pairing, worst))
    if n_deg:
        log.warning("sector %s: %d eigenpairs in degenerate clusters skipped",
                    sec.occupations, n_deg)
    return sorted(out, key=lambda p: (round(p.samples[0].real, 9), round(p.samples[0].imag, 9)))


def tau_of(roots: BetheRootSet, w: complex, spec: ModelSpec) -> complex:
    return tau(w, roots.levels, vacuum_ratios(spec), spec.c, roots.twist)


def _deviation(roots: BetheRootSet, pair: EigenPair, idx, spec: ModelSpec) -> float:
    """max over samples of |tau(w) - sample| / (1 + |tau(w)|)."""
    worst = 0.0
    for s in idx:
        t = tau_of(roots, pair.points[s], spec)
        worst = max(worst, abs(t - pair.samples[s]) / (1 + abs(t)))
    return worst


def match_states(roots_list, pairs, spec: ModelSpec, n_match: int = 3,
                 tol_match: float = TOL_MATCH) -> tuple[list[MatchedState], list, list]:
    """Greedy one-to-one matching on the first n_match sample points.

    Remaining sample points are held out and their deviation is recorded.
    Returns (matched, unmatched roots, unmatched pairs).
    """
    roots_list, pairs = list(roots_list), list(pairs)
    if not roots_list or not pairs:
        return [], roots_list, pairs
    for p in pairs:
        if p.twist != pairs[0].twist:
            raise ValueError("eigenpairs from different twists")
    idx = range(min(n_match, len(pairs[0].points)))
    held = range(len(idx), len(pairs[0].points))
    cost = np.array([[_deviation(r, p, idx, spec) for p in pairs] for r in roots_list])
    matched, used_r, used_p = [], set(), set()
    for flat in np.argsort(cost, axis=None, kind="stable"):
        a, b = np.unravel_index(flat, cost.shape)
        if a in used_r or b in used_p or cost[a, b] >= tol_match:
            continue
        used_r.add(a)
        used_p.add(b)
        hr = _deviation(roots_list[a], pairs[b], held, spec) if len(held) else 0.0
        matched.append(MatchedState(roots_list[a], pairs[b], float(cost[a, b]), hr))
    matched.sort(key=lambda s: [k for k in range(len(pairs)) if pairs[k] is s.pair][0])
    un_r = [r for k, r in enumerate(roots_list) if k not in used_r]
    un_p = [p for k, p in enumerate(pairs) if k not in used_p]
    return matched, un_r, un_p


def biorthogonality_residual(pairs) -> float:
    """max |left_k . right_l| / (|left_k| |right_l|) over k != l."""
    worst = 0.0
    for k, p in enumerate(pairs):
        for q, s in enumerate(pairs):
            if k != q:
                v = abs(p.left @ s.right) / (np.linalg.norm(p.left) * np.linalg.norm(s.right))
                worst = max(worst, float(v))
    return worst
