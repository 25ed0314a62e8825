"""Cached supply of verified on-shell states for a chain.

A StateBank solves Bethe roots per (sector, twist), diagonalizes the matching
transfer-matrix block and keeps only eigenpairs bound to a root set. Optional
descendant matching binds leftover eigenpairs to root sets of lower sectors.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable

from .bethe import BetheRootSet, solve_sector
from .model import ModelSpec, sample_points
from .spectral import EigenPair, MatchedState, diagonalize_sector, match_states

RootSource = Callable[[tuple, ModelSpec, tuple, int, int], list]


def _default_source(card, spec, twist, seed, n_starts):
    return solve_sector(card, spec, twist, seed=seed, n_starts=n_starts)


@dataclass
class SectorInventory:
    roots: list[BetheRootSet]
    pairs: list[EigenPair]
    matched: list[MatchedState]
    unmatched_roots: list[BetheRootSet]
    unmatched_pairs: list[EigenPair]


@dataclass
class StateBank:
    spec: ModelSpec
    seed: int = 0
    n_starts_factor: int = 50
    n_match: int = 3
    n_heldout: int = 3
    points_seed: int = 11
    root_source: RootSource = _default_source
    _roots: dict = field(default_factory=dict, repr=False)
    _inv: dict = field(default_factory=dict, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def __post_init__(self):
        self.points = tuple(sample_points(self.spec, self.n_match + self.n_heldout,
                                          self.points_seed))

    def _twist(self, twist):
        return self.spec.twist if twist is None else tuple(complex(k) for k in twist)

    def roots(self, card, twist=None) -> list[BetheRootSet]:
        card, twist = tuple(card), self._twist(twist)
        key = (card, twist)
        with self._lock:
            if key not in self._roots:
                n = self.n_starts_factor * sum(card)
                self._roots[key] = list(self.root_source(card, self.spec, twist, self.seed, n))
            return self._roots[key]

    def inventory(self, card, twist=None, descendants: bool = False) -> SectorInventory:
        card, twist = tuple(card), self._twist(twist)
        key = (card, twist, descendants)
        with self._lock:
            if key in self._inv:
                return self._inv[key]
            roots = self.roots(card, twist)
            pairs = diagonalize_sector(card, self.spec, self.points, twist)
            matched, ur, up = match_states(roots, pairs, self.spec, self.n_match)
            if descendants and up:
                anc = [r for c in ancestor_sectors(card) for r in self.roots(c, twist)]
                extra, _, up = match_states(anc, up, self.spec, self.n_match)
                matched = matched + extra
            inv = SectorInventory(roots, pairs, matched, ur, up)
            self._inv[key] = inv
            return inv

    def states(self, card, twist=None, descendants: bool = False) -> list[MatchedState]:
        return self.inventory(card, twist, descendants).matched


def ancestor_sectors(card) -> list[tuple[int, ...]]:
    """Admissible level cardinalities below card componentwise, excluding card."""
    ranges = [range(a + 1) for a in card]
    out = []
    for c in itertools.product(*ranges):
        if c != tuple(card) and all(c[k] >= c[k + 1] for k in range(len(c) - 1)):
            out.append(c)
    return out
