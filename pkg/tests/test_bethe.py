import numpy as np
import pytest

from composite_ff.bethe import (TOL_DEDUPE, TOL_ROOT, BetheRootSet, jacobian_condition,
                                kappa_derivatives, kappa_derivatives_fd,
                                log_ell_kappa_derivative, refine, residual_of, solve_sector)
from composite_ff.model import ModelSpec, composite_ratios


@pytest.fixture(scope="module")
def spec2():
    return ModelSpec(3, 2, 1.0, (0.0, 0.3), 1)


def test_vacuum_sector_is_empty_solution(spec34):
    sols = solve_sector((0, 0), spec34)
    assert len(sols) == 1
    assert sols[0].levels == ((), ()) and sols[0].residual == 0


def test_single_site_has_no_finite_root():
    spec = ModelSpec.random(3, 1, seed=2, m=1)
    assert solve_sector((1, 0), spec, seed=0, n_starts=60) == []


def test_two_site_root_matches_closed_form(spec2):
    # (u+1)(u+0.7) = u(u-0.3) is linear: u = -0.35
    sols = solve_sector((1, 0), spec2, seed=0)
    assert len(sols) == 1
    assert abs(sols[0].u[0] - (-0.35)) < 1e-12
    assert sols[0].residual < 1e-12


def test_twisted_two_site_roots_match_quadratic(spec2):
    kap = 1.5 + 0.2j
    # r1(u) = kappa_2/kappa_1: (1 - k) u^2 + (1.7 + 0.3 k) u + 0.7 = 0
    exact = np.roots([1 - kap, 1.7 + 0.3 * kap, 0.7])
    sols = solve_sector((1, 0), spec2, twist=(1, kap, 1), seed=0)
    found = sorted((s.u[0] for s in sols), key=lambda z: (z.real, z.imag))
    exact = sorted(exact, key=lambda z: (z.real, z.imag))
    assert len(found) == 2
    assert np.abs(np.array(found) - np.array(exact)).max() < 1e-12


def test_gl2_reduction_agrees_with_gl3_empty_second_level(spec2):
    spec_gl2 = ModelSpec(2, 2, 1.0, (0.0, 0.3), 1)
    a = solve_sector((1,), spec_gl2, seed=0)
    b = solve_sector((1, 0), spec2, seed=0)
    assert len(a) == len(b) == 1
    assert abs(a[0].u[0] - b[0].u[0]) < 1e-13


def test_solutions_are_admissible_and_distinct(spec34):
    sols = solve_sector((2, 1), spec34, seed=1, n_starts=150)
    assert sols
    for s in sols:
        assert s.admissible and s.residual < TOL_ROOT
        assert residual_of(s, spec34) < TOL_ROOT
        assert jacobian_condition(s, spec34) < 1e12
    for k, a in enumerate(sols):
        for b in sols[k + 1:]:
            assert np.abs(a.flat() - b.flat()).max() > TOL_DEDUPE


def test_solver_deterministic_across_workers(spec34):
    a = solve_sector((2, 0), spec34, seed=3, n_starts=60)
    b = solve_sector((2, 0), spec34, seed=3, n_starts=60, workers=4)
    assert [s.levels for s in a] == [s.levels for s in b]


def test_canonical_order_is_permutation_invariant():
    a = BetheRootSet(((1 + 2j, -1 + 0j, 0.5j), (3 + 0j,)), (1, 1, 1))
    b = BetheRootSet(((0.5j, 1 + 2j, -1 + 0j), (3 + 0j,)), (1, 1, 1))
    assert a.levels == b.levels and a.label() == b.label()


def test_sector_precondition(spec34):
    with pytest.raises(ValueError):
        solve_sector((1, 2), spec34)
    with pytest.raises(ValueError):
        solve_sector((5, 0), spec34)
    with pytest.raises(ValueError):
        solve_sector((1,), spec34)


@pytest.fixture(scope="module")
def roots21(spec34):
    return solve_sector((2, 1), spec34, seed=1, n_starts=150)[0]


def test_kappa_derivatives_implicit_vs_fd(spec34, roots21):
    for i in (1, 2, 3):
        d = kappa_derivatives(roots21, spec34, i)
        dfd, steps = kappa_derivatives_fd(roots21, spec34, i)
        scale = np.abs(d.flat()).max()
        assert np.abs(d.flat() - dfd.flat()).max() <= 1e-5 * scale
        assert steps <= 5


def test_global_twist_direction_is_flat(spec34, roots21):
    tot = sum(kappa_derivatives(roots21, spec34, i).flat() for i in (1, 2, 3))
    assert np.abs(tot).max() < 1e-12


def test_b_zero_sector_derivatives(spec34):
    rs = solve_sector((1, 0), spec34, seed=1)[0]
    for i in (1, 2, 3):
        d = kappa_derivatives(rs, spec34, i)
        assert d.levels[1] == ()
    assert np.abs(kappa_derivatives(rs, spec34, 3).flat()).max() == 0


def test_log_ell_derivative_trivial_cases(spec34, roots21):
    vac = solve_sector((0, 0), spec34)[0]
    assert log_ell_kappa_derivative(vac, kappa_derivatives(vac, spec34, 1), spec34) == 0
    empty = spec34.with_split(0)
    d = kappa_derivatives(roots21, empty, 2)
    assert log_ell_kappa_derivative(roots21, d, empty, ratios=composite_ratios(empty)) == 0


def test_log_ell_derivative_vs_fd_of_log_ell(spec34):
    rs = solve_sector((1, 0), spec34, seed=1)[0]
    cr = composite_ratios(spec34)
    h = 1e-6
    for i in (1, 2, 3):
        d = kappa_derivatives(rs, spec34, i)
        val = log_ell_kappa_derivative(rs, d, spec34, i)
        logs = []
        for sgn in (1, -1):
            k = [1 + 0j] * 3
            k[i - 1] += sgn * h
            r, _ = refine(rs, spec34, k)
            logs.append(np.log(cr.alpha_product(r.levels)))
        fd = (logs[0] - logs[1]) / (2 * h)
        assert abs(val - fd) <= 1e-5 * max(abs(val), 1e-8)


def test_twisted_continuation_is_fast(spec34, roots21):
    for i in (1, 2, 3):
        k = [1 + 0j] * 3
        k[i - 1] += 1e-6
        r, it = refine(roots21, spec34, k)
        assert r.residual < TOL_ROOT and it <= 5
