import numpy as np
import pytest
import scipy.linalg as sla

from composite_ff import formfactor as ff
from composite_ff.algebra import f
from composite_ff.bethe import BetheRootSet, solve_sector
from composite_ff.model import ModelSpec, sample_points, transfer_matrix
from composite_ff.spectral import (biorthogonality_residual, diagonalize_sector, match_states,
                                   sector_of, tau_of)


def test_vacuum_sector(spec34):
    pts = sample_points(spec34, 3, 11)
    pairs = diagonalize_sector((0, 0), spec34, pts)
    assert len(pairs) == 1
    for w, s in zip(pts, pairs[0].samples):
        r1 = np.prod([f(w, x) for x in spec34.xi])
        assert s == pytest.approx(r1 + 2, rel=1e-13)
    tw = diagonalize_sector((0, 0), spec34, pts, twist=(2, 1, 1))[0]
    r1 = np.prod([f(pts[0], x) for x in spec34.xi])
    assert tw.samples[0] == pytest.approx(2 * r1 + 2, rel=1e-13)
    m, ur, up = match_states(solve_sector((0, 0), spec34), pairs, spec34)
    assert len(m) == 1 and not ur and not up and m[0].match_residual < 1e-12


def test_rayleigh_samples_match_rediagonalization(spec34):
    pts = sample_points(spec34, 3, 11)
    sec = sector_of((2, 1), spec34)
    pairs = diagonalize_sector((2, 1), spec34, pts)
    for k, w in enumerate(pts[1:], start=1):
        ev = sla.eigvals(transfer_matrix(w, spec34).block(sec))
        for p in pairs:
            assert np.min(np.abs(ev - p.samples[k])) < 1e-10 * max(1, abs(p.samples[k]))


def test_eigenpair_invariants(spec34):
    pts = sample_points(spec34, 3, 11)
    pairs = diagonalize_sector((1, 1), spec34, pts)
    assert pairs
    for p in pairs:
        assert p.eig_residual < 1e-10
        assert abs(p.pairing) > 1e-8 * np.linalg.norm(p.left) * np.linalg.norm(p.right)
    assert biorthogonality_residual(pairs) < 1e-9


def test_every_root_set_matches_small_chain():
    spec = ModelSpec.random(3, 3, seed=5)
    pts = sample_points(spec, 6, 11)
    roots = solve_sector((1, 0), spec, seed=0, n_starts=100)
    pairs = diagonalize_sector((1, 0), spec, pts)
    matched, ur, _ = match_states(roots, pairs, spec)
    assert roots and not ur and len(matched) == len(roots)
    assert len({id(m.pair) for m in matched}) == len(matched)
    for m in matched:
        assert m.match_residual < 1e-8 and m.heldout_residual < 1e-8


def test_perturbed_roots_fail_to_match(spec34):
    pts = sample_points(spec34, 3, 11)
    rs = solve_sector((1, 0), spec34, seed=1)[0]
    bad = BetheRootSet(tuple(tuple(z + 1e-3 for z in t) for t in rs.levels), rs.twist)
    pairs = diagonalize_sector((1, 0), spec34, pts)
    matched, ur, _ = match_states([bad], pairs, spec34)
    assert not matched and ur == [bad]


def test_matched_states_of_default_run(lab34, states34):
    assert len(states34) >= 5
    for card in lab34.sectors():
        inv = lab34.bank.inventory(card)
        assert not inv.unmatched_roots
    for st in states34:
        for w in st.pair.points:
            t = tau_of(st.roots, w, lab34.spec)
            assert abs(t - st.pair.sample(w)) < 1e-8 * (1 + abs(t))
        assert all(r.passed for r in ff.verify_singular(st, lab34.spec))
        assert all(r.passed for r in ff.verify_weights(st, lab34.spec))


def test_sector_11_is_spanned_by_descendants(lab34):
    # occupations (3, 0, 1): no finite roots, every eigenpair binds to a lower sector
    inv = lab34.bank.inventory((1, 1), descendants=True)
    assert inv.roots == []
    assert len(inv.matched) == len(inv.pairs) == sector_of((1, 1), lab34.spec).dim
    assert {s.roots.sector for s in inv.matched} <= {(0, 0), (1, 0)}
    assert all(s.is_descendant and s.label().startswith("desc:") for s in inv.matched)
