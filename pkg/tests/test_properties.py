"""Property-based checks of the algebraic invariants."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from composite_ff.algebra import (VacuumRatios, bethe_jacobian, bethe_residual, f, g, prod_f,
                                  tau)
from composite_ff.cli.cache import cache_key
from composite_ff.cli.config import format_complex, parse_complex
from composite_ff.hilbert import embed_elementary, enumerate_sectors
from composite_ff.model import ModelSpec, check_rtt

coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, coord, coord)
coupling = st.builds(complex, st.floats(0.2, 2), st.floats(-1, 1))


def _apart(zs, eps=1e-2):
    return all(abs(a - b) > eps for k, a in enumerate(zs) for b in zs[k + 1:])


@given(cplx, cplx, coupling)
def test_f_is_one_plus_g(u, v, c):
    assume(abs(u - v) > 1e-3)
    assert abs(f(u, v, c) - (1 + g(u, v, c))) <= 1e-12 * max(1, abs(f(u, v, c)))


@given(st.lists(cplx, max_size=3), st.lists(cplx, max_size=3), st.lists(cplx, max_size=3))
def test_prod_f_factorizes_over_unions(u1, u2, vs):
    assume(all(abs(a - b) > 1e-2 for a in u1 + u2 for b in vs))
    lhs = prod_f(u1 + u2, vs)
    rhs = prod_f(u1, vs) * prod_f(u2, vs)
    assert abs(lhs - rhs) <= 1e-9 * max(1, abs(lhs))


@given(st.lists(cplx, min_size=1, max_size=3), st.lists(cplx, max_size=2), st.randoms())
def test_tau_symmetric_in_each_level(us, vs, rnd):
    xi = [0.1, 0.6 + 0.2j, 0.3 - 0.1j]
    w = 8.0 + 3j
    pts = us + vs + xi + [w]
    assume(_apart(pts, 5e-2))
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    a = tau(w, [us, vs], rat)
    us2, vs2 = list(us), list(vs)
    rnd.shuffle(us2)
    rnd.shuffle(vs2)
    b = tau(w, [us2, vs2], rat)
    assert abs(a - b) <= 1e-12 * max(1, abs(a))


@settings(max_examples=40, deadline=None)
@given(st.lists(cplx, min_size=1, max_size=2), st.lists(cplx, max_size=2),
       st.builds(complex, st.floats(0.5, 1.5), st.floats(-0.3, 0.3)))
def test_jacobian_matches_finite_differences(us, vs, k2):
    xi = [0.1, 0.6 + 0.2j, 0.3 - 0.1j]
    assume(len(vs) <= len(us))
    assume(_apart(us + vs + xi, 0.2))
    assume(all(abs(a - b - s) > 0.2 for a in us + vs for b in us + vs + xi for s in (1, -1)))
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    twist = (1.0, k2, 1.0)
    x0 = np.array(us + vs, dtype=complex)
    card = (len(us), len(vs))

    def F(x):
        return bethe_residual([x[:card[0]], x[card[0]:]], rat, twist)

    J = bethe_jacobian([us, vs], rat, twist)
    h = 1e-6
    Jfd = np.zeros_like(J)
    for q in range(x0.size):
        e = np.zeros_like(x0)
        e[q] = h
        d = F(x0 + e) - F(x0 - e)
        d.imag = (d.imag + np.pi) % (2 * np.pi) - np.pi
        Jfd[:, q] = d / (2 * h)
    assert np.abs(J - Jfd).max() <= 1e-6 * max(1.0, np.abs(J).max())


@given(st.lists(cplx, min_size=1, max_size=3), st.lists(cplx, max_size=2))
def test_unit_twist_is_untwisted(us, vs):
    xi = [0.1, 0.6 + 0.2j]
    assume(_apart(us + vs + xi, 1e-2))
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    a = bethe_residual([us, vs], rat)
    b = bethe_residual([us, vs], rat, (1, 1, 1))
    assert np.array_equal(a, b)


idx3 = st.integers(1, 3)


@given(idx3, idx3, idx3, idx3, st.integers(1, 3), st.integers(1, 3))
def test_elementary_algebra(i, j, k, l, n, p):
    N, M = 3, 3
    A = embed_elementary(i, j, n, N, M).matrix
    B = embed_elementary(k, l, p, N, M).matrix
    if n == p:
        ref = (j == k) * embed_elementary(i, l, n, N, M).matrix
        assert np.array_equal(A @ B, ref)
    else:
        assert np.array_equal(A @ B, B @ A)


@given(st.integers(2, 4), st.integers(1, 5))
def test_sector_dimensions_sum(N, M):
    assume(N ** M <= 3 ** 8)
    secs = enumerate_sectors(N, M)
    assert sum(s.dim for s in secs) == N ** M
    assert len(secs) == math.comb(M + N - 1, N - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10 ** 6), cplx, cplx)
def test_rtt_holds_for_random_chains(M, seed, u, v):
    spec = ModelSpec.random(3, M, seed=seed, m=max(1, M // 2))
    assume(abs(u - v) > 0.1 and all(abs(z - x) > 0.5 for z in (u, v) for x in spec.xi))
    assert check_rtt(u, v, spec) < 1e-12


@given(cplx)
def test_complex_literal_round_trip(z):
    assert parse_complex(format_complex(z)) == z


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.floats(-1e-9, 1e-9).filter(lambda d: d != 0))
def test_cache_key_sensitive_to_any_xi_change(site, delta):
    spec = ModelSpec.random(3, 4, seed=7)
    xi = list(spec.xi)
    xi[site] += delta
    assume(xi[site] != spec.xi[site])
    other = ModelSpec(3, 4, spec.c, tuple(xi), spec.m)
    key = cache_key(spec, (1, 0), spec.twist, 1, 50)
    assert key != cache_key(other, (1, 0), spec.twist, 1, 50)
