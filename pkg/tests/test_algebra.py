import numpy as np
import pytest

from composite_ff.algebra import (PoleError, VacuumRatios, bethe_jacobian, bethe_residual,
                                  bethe_twist_derivative, f, g, prod_f, tau, tol_pole)


def test_g_examples():
    assert g(2, 1, 1) == 1
    for u, c in ((0.3 + 0.1j, 1.0), (-2.0, 0.5), (1j, 2 - 1j)):
        assert g(u, u + c, c) == pytest.approx(-1, abs=1e-15)
    assert g(1 + 1j, 1j, 2) == 2


def test_f_examples():
    assert f(2, 1, 1) == 2
    assert f(3, 1, 1) * f(1, 3, 1) == pytest.approx(1 - g(3, 1, 1) ** 2)
    assert f(3, 1, 1) * f(1, 3, 1) == pytest.approx(0.75)
    assert f(1, 0, 1) == 2


def test_pole_errors():
    with pytest.raises(PoleError):
        g(1.0, 1.0 + 1e-12)
    with pytest.raises(PoleError):
        f(0.5j, 0.5j)
    with pytest.raises(PoleError):
        prod_f([1.0], [2.0, 1.0])
    with pytest.raises(ValueError):
        g(1.0, 0.0, 0.0)
    assert tol_pole(5.0) == pytest.approx(5e-10)


def test_prod_f_examples():
    assert prod_f([], [1, 2]) == 1
    assert prod_f([1, 2], []) == 1
    assert prod_f([3], [1, 2], 1) == pytest.approx(3)
    assert prod_f([5], [2], 1) == pytest.approx(4 / 3)


def test_tau_vacuum_is_sum_of_vacuum_eigenvalues():
    xi = [0.1 + 0.2j, 0.7, 0.4 + 0.05j]
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    w = 4.0 - 2j
    r1 = np.prod([f(w, x) for x in xi])
    assert tau(w, [(), ()], rat) == pytest.approx(r1 + 2, rel=1e-15)
    assert tau(w, [(), ()], rat, twist=(2, 1, 1)) == pytest.approx(2 * r1 + 2, rel=1e-15)


def test_bethe_single_root_jacobian_is_dlog_r1():
    xi = [0.0, 0.3]
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    u = 0.2 + 0.4j
    J = bethe_jacobian([(u,), ()], rat)
    dlog = sum(1 / (u - x + 1) - 1 / (u - x) for x in xi)
    assert J.shape == (1, 1)
    assert J[0, 0] == pytest.approx(dlog, rel=1e-14)


def _fd_jacobian(levels, rat, twist, h=1e-6):
    flat = [z for t in levels for z in t]
    card = [len(t) for t in levels]

    def F(x):
        lv, p = [], 0
        for a in card:
            lv.append(tuple(x[p:p + a]))
            p += a
        return bethe_residual(lv, rat, twist)

    x0 = np.array(flat, dtype=complex)
    J = np.zeros((x0.size, x0.size), dtype=complex)
    for q in range(x0.size):
        e = np.zeros_like(x0)
        e[q] = h
        J[:, q] = (F(x0 + e) - F(x0 - e)) / (2 * h)
    return J


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(3)
    xi = rng.uniform(0, 1, 4) + 0.3j * rng.uniform(0, 1, 4)
    rat = VacuumRatios.fundamental(xi, 1.0, 3)
    for _ in range(5):
        levels = [tuple(rng.normal(size=2) + 1j * rng.normal(size=2)),
                  tuple(rng.normal(size=1) + 1j * rng.normal(size=1))]
        twist = (1.0, 1.1 + 0.05j, 0.9)
        J = bethe_jacobian(levels, rat, twist)
        Jfd = _fd_jacobian(levels, rat, twist)
        assert np.abs(J - Jfd).max() <= 1e-6 * np.abs(J).max()


def test_residual_untwisted_equals_unit_twist():
    rat = VacuumRatios.fundamental([0.1, 0.5j, 0.8], 1.0, 3)
    lv = [(0.3 + 0.2j, -0.4 + 1j), (0.1 - 0.3j,)]
    assert np.array_equal(bethe_residual(lv, rat), bethe_residual(lv, rat, (1, 1, 1)))


def test_residual_imaginary_part_reduced():
    rat = VacuumRatios.fundamental([0.1, 0.5j, 0.8], 1.0, 3)
    lv = [(0.3 + 0.2j, -0.4 + 1j), (0.1 - 0.3j,)]
    F = bethe_residual(lv, rat, (1.3, 0.2 - 2j, -1.0))
    assert np.all(F.imag <= np.pi) and np.all(F.imag > -np.pi)


def test_twist_derivative_matches_differences():
    rat = VacuumRatios.fundamental([0.1, 0.5j, 0.8], 1.0, 3)
    lv = [(0.3 + 0.2j, -0.4 + 1j), (0.1 - 0.3j,)]
    h = 1e-6
    for i in (1, 2, 3):
        kp, km = np.ones(3, dtype=complex), np.ones(3, dtype=complex)
        kp[i - 1] += h
        km[i - 1] -= h
        fd = (bethe_residual(lv, rat, kp) - bethe_residual(lv, rat, km)) / (2 * h)
        assert np.abs(bethe_twist_derivative(lv, 3, i) - fd).max() < 1e-8


def test_global_twist_rescale_leaves_residual_invariant():
    lv = [(0.3 + 0.2j, -0.4 + 1j), (0.1 - 0.3j,)]
    dsum = sum(bethe_twist_derivative(lv, 3, i) for i in (1, 2, 3))
    assert np.abs(dsum).max() < 1e-14
