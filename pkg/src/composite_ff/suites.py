"""Verification suites: each returns a list of VerificationRecord in a fixed order."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import formfactor as ff
from .model import ModelSpec, check_rtt, factorization_residual
from .spectral import biorthogonality_residual, tau_of
from .states import StateBank


@dataclass
class Settings:
    """Numerical settings shared by all suites (config keys without I/O)."""

    seed: int = 7
    solver_seed: int = 1
    points_seed: int = 11
    z_seed: int = 23
    n_starts_factor: int = 50
    sectors: tuple = ((1, 0), (1, 1), (2, 0), (2, 1))
    rtt_sites: tuple = (1, 2, 3, 4)
    rtt_pairs: int = 10
    lemma_sector: tuple = (1, 1)
    lemma_betas: int = 5
    beta_radius: float = 0.3
    local_pairs: tuple = ((1, 2),)
    local_diagonal: tuple = (1, 2, 3)
    glN_ranks: tuple = (2, 4)
    glN_M: int = 3
    glN_m: int = 1
    tol: dict = field(default_factory=dict)
    workers: int = 1

    def t(self, name: str, default: float) -> float:
        return self.tol.get(name, default)


class Lab:
    """Chain plus state supply shared by the suites of one run."""

    def __init__(self, spec: ModelSpec, settings: Settings, root_source=None):
        self.spec = spec
        self.s = settings
        kw = {} if root_source is None else {"root_source": root_source}
        self.root_source = root_source
        self.bank = StateBank(spec, seed=settings.solver_seed,
                              n_starts_factor=settings.n_starts_factor,
                              points_seed=settings.points_seed, **kw)
        self.zs = ff.z_samples(spec, 5, settings.z_seed)

    def sectors(self):
        vac = (0,) * (self.spec.N - 1)
        return [vac] + [tuple(x) for x in self.s.sectors if tuple(x) != vac]

    def bethe_states(self):
        """Non-descendant matched states of all configured sectors, vacuum first."""
        return [st for c in self.sectors() for st in self.bank.states(c)]

    def fan_out(self, fn: Callable, tasks: list) -> list:
        """Apply fn to tasks, possibly in threads; results keep task order."""
        if self.s.workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(self.s.workers) as ex:
                res = list(ex.map(fn, tasks))
        else:
            res = [fn(t) for t in tasks]
        out = []
        for r in res:
            out.extend(r if isinstance(r, list) else [r])
        return out


def _residual_record(suite, name, spec, res, tol, **kw):
    return ff.VerificationRecord(suite, name, spec.N, spec.M, spec.m, lhs=complex(res), rhs=0j,
                                 abs_res=float(res), rel_res=float(res), tol=tol,
                                 passed=bool(res < tol), **kw)


def suite_rtt(lab: Lab) -> list:
    spec, s = lab.spec, lab.s
    tol = s.t("rtt", 1e-12)
    rng = np.random.default_rng(s.seed)
    out = []
    for M in s.rtt_sites:
        sp = ModelSpec.random(spec.N, M, s.seed, spec.c, m=max(1, M // 2)) \
            if M != spec.M else spec
        for k in range(s.rtt_pairs):
            u, v = rng.uniform(-2, 3, 2) + 1j * rng.uniform(-2, 2, 2)
            for rg in ("full", "left", "right"):
                out.append(_residual_record("rtt", f"RTT relation ({rg})", sp,
                                            check_rtt(u, v, sp, rg), tol, z_or_site=k))
    sp = spec
    for m in range(1, sp.M):
        spm = sp.with_split(m)
        worst = max(factorization_residual(complex(*rng.uniform(-2, 3, 2)), spm)
                    for _ in range(s.rtt_pairs))
        out.append(_residual_record("rtt", "monodromy factorization", spm, worst, tol,
                                    z_or_site=m))
    return out


def suite_bethe(lab: Lab) -> list:
    """Root/eigenpair binding, held-out tau agreement, singular and weight properties."""
    spec, s = lab.spec, lab.s
    tol_match = s.t("match", 1e-8)
    out = []
    for card in lab.sectors():
        inv = lab.bank.inventory(card)
        for st in inv.matched:
            pts = st.pair.points[lab.bank.n_match:]
            for w in pts:
                t = tau_of(st.roots, w, spec)
                rec = ff.make_record("bethe", "tau agreement at held-out point", spec, t,
                                     st.pair.sample(w), tol_match, sector_bra=card,
                                     sector_ket=card, z_or_site=w, bra=st.label(),
                                     ket=st.label())
                rec.rel_res = abs(t - st.pair.sample(w)) / (1 + abs(t))
                rec.passed = bool(rec.rel_res < tol_match)
                out.append(rec)
            out += ff.verify_singular(st, spec, s.t("singular", 1e-9))
            out += ff.verify_weights(st, spec, s.t("exact", 1e-12))
        for r in inv.unmatched_roots:
            out.append(ff.VerificationRecord("bethe", "solver root set without eigenpair",
                                             spec.N, spec.M, spec.m, sector_bra=card,
                                             sector_ket=card, bra=r.label(), passed=False,
                                             rel_res=np.inf, abs_res=np.inf, tol=tol_match))
        if len(inv.matched) > 1:
            res = biorthogonality_residual([st.pair for st in inv.matched])
            out.append(_residual_record("bethe", "biorthogonality", spec, res, 1e-9,
                                        sector_bra=card, sector_ket=card))
    return out


def _pairs(states, N):
    out = []
    for C in states:
        for B in states:
            if C is B:
                continue
            for i in range(1, N + 1):
                for j in range(1, N + 1):
                    if ff.compatible(C, B, i, j):
                        out.append((C, B, i, j))
    return out


def suite_thm41(lab: Lab) -> list:
    spec, s = lab.spec, lab.s
    states = lab.bethe_states()

    def task(t):
        C, B, i, j = t
        return [ff.verify_thm41(C, B, i, j, spec, lab.zs, s.t("thm41", 1e-8)),
                ff.verify_z_independence(C, B, i, j, spec, lab.zs, s.t("zspread", 1e-8))]

    return lab.fan_out(task, _pairs(states, spec.N))


def suite_thm42(lab: Lab) -> list:
    spec, s = lab.spec, lab.s

    def task(st):
        recs, lhs_sum, rhs_sum = [], 0j, 0j
        for i in range(1, spec.N + 1):
            r = ff.verify_thm42(st, i, spec, s.t("thm42", 1e-6))
            recs.append(r)
            lhs_sum += r.lhs
            rhs_sum += r.rhs
            e = r.extra
            if "fd_deriv" in e:
                fd = ff.make_record("thm42", "twist derivative implicit vs finite difference",
                                    spec, e["deriv"], e["fd_deriv"], s.t("fd", 1e-5),
                                    i=i, j=i, sector_bra=st.sector, sector_ket=st.sector,
                                    bra=st.label(), ket=st.label(),
                                    extra={"root_diff": e["fd_diff"], "steps": e["fd_steps"]})
                recs.append(fd)
        for name, val in (("sum rule (matrix elements)", lhs_sum), ("sum rule (formula)", rhs_sum)):
            recs.append(ff.make_record("thm42", name, spec, val, spec.m, s.t("sum", 1e-8),
                                       sector_bra=st.sector, sector_ket=st.sector,
                                       bra=st.label(), ket=st.label()))
        return recs

    return lab.fan_out(task, lab.bethe_states())


def random_betas(n: int, radius: float, N: int, seed: int) -> list[np.ndarray]:
    """Uniform in the complex radius-ball of C^N (uniform in volume)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        r = radius * rng.uniform() ** (1 / (2 * N))
        out.append(v / np.linalg.norm(v) * r)
    return out


def suite_lemma51(lab: Lab) -> list:
    spec, s = lab.spec, lab.s
    card = tuple(s.lemma_sector)
    N = spec.N
    kets = lab.bank.states(card, descendants=True)
    tol, tol_exact = s.t("lemma", 1e-8), s.t("exact", 1e-12)
    out = []
    for k, beta in enumerate(random_betas(s.lemma_betas, s.beta_radius, N, s.seed + 101)):
        bras = lab.bank.states(card, twist=np.exp(beta))
        for C in bras:
            for B in kets:
                out.append(ff.verify_lemma51(spec, beta, C, B, tol, note=f"beta #{k}"))
    rng = np.random.default_rng(s.seed + 202)
    b = s.beta_radius * rng.uniform() * np.exp(2j * np.pi * rng.uniform()) / np.sqrt(N)
    for name, beta in (("beta = 0", np.zeros(N, dtype=complex)),
                       ("uniform beta", np.full(N, b, dtype=complex))):
        bras = lab.bank.states(card, twist=np.exp(beta), descendants=True)
        for C in bras:
            for B in kets:
                r = ff.verify_lemma51(spec, beta, C, B, tol_exact, note=name)
                out.append(r)
    return out


def suite_local(lab: Lab) -> list:
    spec, s = lab.spec, lab.s
    states = lab.bethe_states()
    tasks = []
    for (i, j) in s.local_pairs:
        for C, B, ii, jj in _pairs(states, spec.N):
            if (ii, jj) == (i, j):
                tasks.append(("off", C, B, i, j))
    for st in states:
        for i in s.local_diagonal:
            tasks.append(("diag", st, st, i, i))

    def task(t):
        kind, C, B, i, j = t
        tol = s.t("local_offdiag", 1e-8) if kind == "off" else s.t("local_diag", 1e-6)
        recs = [ff.verify_local_ff(C, B, i, j, n, spec, tol) for n in range(1, spec.M + 1)]
        if kind == "off":
            recs.append(ff.verify_telescoping(C, B, i, j, spec, s.t("exact", 1e-12)))
        return recs

    return lab.fan_out(task, tasks)


def suite_commutators(lab: Lab) -> list:
    return ff.verify_commutators(lab.spec, lab.s.t("commutator", 1e-13))


def suite_morphism(lab: Lab) -> list:
    """Antimorphism relation with the per-state gauge fixed on a spanning forest.

    Links used to fix the gauge are labelled and hold by construction; every
    other (pair, operator) combination is an independent test.
    """
    spec, s = lab.spec, lab.s
    states = lab.bethe_states()
    gamma, used = ff.morphism_gauge(states, spec, lab.zs)
    out = []
    for C, B, i, j in _pairs(states, spec.N):
        r = ff.verify_morphism(C, B, i, j, spec, gamma, lab.zs, s.t("morphism", 1e-8))
        raw = ff.verify_morphism(C, B, i, j, spec, None, lab.zs, s.t("morphism", 1e-8))
        r.extra["raw_rel_res"] = raw.rel_res
        if (C.label(), B.label(), i, j) in used:
            r.identity = "antimorphism gauge link"
        out.append(r)
    return out


def suite_glN(lab: Lab) -> list:
    s = lab.s
    out = []
    for N in s.glN_ranks:
        sp = ModelSpec.random(N, s.glN_M, s.seed, lab.spec.c, m=s.glN_m)
        sub = Lab(sp, Settings(**{**s.__dict__, "sectors": _dominant_sectors(N, s.glN_M)}),
                  lab.root_source)
        states = sub.bethe_states()
        tol = s.t("glN", 1e-6)
        for C, B, i, j in _pairs(states, N):
            out.append(ff.verify_glN(C, B, i, j, sp, tol))
        for st in states:
            for i in range(1, N + 1):
                out.append(ff.verify_glN(st, st, i, i, sp, tol))
    return out


def _dominant_sectors(N: int, M: int):
    """Level tuples whose occupations are non-increasing (highest weights)."""
    out = []
    for c in itertools.product(range(M + 1), repeat=N - 1):
        a = (M,) + c + (0,)
        occ = [a[k] - a[k + 1] for k in range(N)]
        if sum(c) and min(occ) >= 0 and all(occ[k] >= occ[k + 1] for k in range(N - 1)):
            out.append(c)
    return tuple(out)


SUITE_FUNCS = {
    "rtt": suite_rtt, "bethe": suite_bethe, "thm41": suite_thm41, "thm42": suite_thm42,
    "lemma51": suite_lemma51, "local": suite_local, "commutators": suite_commutators,
    "morphism": suite_morphism, "glN": suite_glN,
}
