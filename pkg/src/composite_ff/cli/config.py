"""Flat key = value run configuration.

Complex numbers are written as "a+bi" (or "a+bj"); lists are comma
separated; sector lists separate tuples with ";", e.g. "1,0; 2,1".
"""
from __future__ import annotations

import dataclasses
import itertools
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..hilbert import DENSE_LIMIT

SUITES = ("rtt", "bethe", "thm41", "thm42", "lemma51", "local", "commutators",
          "morphism", "glN")


class ConfigError(ValueError):
    pass


def parse_complex(s: str) -> complex:
    t = s.strip().replace(" ", "").replace("i", "j")
    if not t:
        raise ConfigError("empty complex literal")
    try:
        return complex(t)
    except ValueError as exc:
        raise ConfigError(f"bad complex literal {s!r}") from exc


def format_complex(z: complex) -> str:
    z = complex(z)
    im = repr(z.imag)
    return f"{z.real!r}{'' if im.startswith('-') else '+'}{im}i"


def _ints(s: str) -> tuple[int, ...]:
    s = s.strip()
    return tuple(int(x) for x in s.split(",") if x.strip()) if s else ()


def _sectors(s: str) -> tuple[tuple[int, ...], ...]:
    return tuple(_ints(p) for p in s.split(";") if p.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {s!r}")


def default_cache_dir() -> str:
    env = os.environ.get("COMPOSITE_FF_CACHE")
    if env:
        return env
    return str(Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "composite_ff")


@dataclass
class RunConfig:
    N: int = 3
    M: int = 4
    c: complex = 1.0
    m: int = 2
    xi_mode: str = "random"
    xi: tuple[complex, ...] = ()
    seed: int = 7
    solver_seed: int = 1
    points_seed: int = 11
    z_seed: int = 23
    n_starts_factor: int = 50
    sectors: tuple[tuple[int, ...], ...] = ()
    suites: tuple[str, ...] = SUITES
    rtt_sites: tuple[int, ...] = (1, 2, 3, 4)
    rtt_pairs: int = 10
    lemma_sector: tuple[int, ...] = ()
    lemma_betas: int = 5
    beta_radius: float = 0.3
    local_pairs: tuple[tuple[int, ...], ...] = ((1, 2),)
    local_diagonal: tuple[int, ...] = (1, 2, 3)
    glN_ranks: tuple[int, ...] = (2, 4)
    glN_M: int = 3
    glN_m: int = 1
    tol_root: float = 1e-11
    tol_match: float = 1e-8
    tol_rtt: float = 1e-12
    tol_thm41: float = 1e-8
    tol_zspread: float = 1e-8
    tol_thm42: float = 1e-6
    tol_fd: float = 1e-5
    tol_sum: float = 1e-8
    tol_lemma: float = 1e-8
    tol_exact: float = 1e-12
    tol_local_offdiag: float = 1e-8
    tol_local_diag: float = 1e-6
    tol_commutator: float = 1e-13
    tol_singular: float = 1e-9
    tol_morphism: float = 1e-8
    tol_glN: float = 1e-6
    dense_limit: int = DENSE_LIMIT
    out_dir: str = "results"
    cache_dir: str = field(default_factory=default_cache_dir)
    use_cache: bool = True
    workers: int = 1

    def __post_init__(self):
        if not self.sectors:
            self.sectors = default_sectors(self.N, self.M)
        if not self.lemma_sector:
            self.lemma_sector = (1,) * (self.N - 1)

    def set(self, key: str, value: str) -> None:
        """Assign a config key from its text form."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        cur = getattr(self, key)
        try:
            if key in ("sectors", "local_pairs"):
                val = _sectors(value)
            elif key == "xi":
                val = tuple(parse_complex(x) for x in value.split(",") if x.strip())
            elif key == "suites":
                val = tuple(x.strip() for x in value.split(",") if x.strip())
            elif key == "c":
                val = parse_complex(value)
            elif isinstance(cur, bool):
                val = _bool(value)
            elif isinstance(cur, int):
                val = int(value)
            elif isinstance(cur, float):
                val = float(value)
            elif isinstance(cur, tuple):
                val = _ints(value)
            else:
                val = value.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
        setattr(self, key, val)

    def validate(self) -> "RunConfig":
        if self.N < 2 or self.M < 1:
            raise ConfigError("need N >= 2 and M >= 1")
        if self.N ** self.M > self.dense_limit:
            raise ConfigError(f"N^M = {self.N ** self.M} exceeds the dense limit {self.dense_limit}")
        if not 1 <= self.m < self.M:
            raise ConfigError(f"split site m={self.m} must satisfy 1 <= m < M={self.M}")
        if self.c == 0:
            raise ConfigError("coupling c must be nonzero")
        if self.xi_mode not in ("random", "explicit"):
            raise ConfigError("xi_mode must be 'random' or 'explicit'")
        if self.xi_mode == "explicit" and len(self.xi) != self.M:
            raise ConfigError(f"explicit xi needs {self.M} values, got {len(self.xi)}")
        for s in self.suites:
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
        for sec in tuple(self.sectors) + (self.lemma_sector,):
            _check_sector(sec, self.N, self.M)
        for ij in self.local_pairs:
            if len(ij) != 2 or not all(1 <= x <= self.N for x in ij) or ij[0] == ij[1]:
                raise ConfigError(f"local pair {ij} must be two distinct colors in 1..{self.N}")
        if any(not 1 <= i <= self.N for i in self.local_diagonal):
            raise ConfigError("local_diagonal colors out of range")
        if any(M < 1 or self.N ** M > self.dense_limit for M in self.rtt_sites):
            raise ConfigError("rtt_sites out of range")
        for r in self.glN_ranks:
            if r < 2 or r ** self.glN_M > self.dense_limit:
                raise ConfigError(f"glN rank {r} with M={self.glN_M} not allowed")
        if not 1 <= self.glN_m < self.glN_M:
            raise ConfigError("glN_m must satisfy 1 <= glN_m < glN_M")
        if self.workers < 1 or self.n_starts_factor < 1 or self.lemma_betas < 0:
            raise ConfigError("workers and n_starts_factor must be >= 1, lemma_betas >= 0")
        if not 0 < self.beta_radius:
            raise ConfigError("beta_radius must be positive")
        for f in dataclasses.fields(self):
            if f.name.startswith("tol_") and not getattr(self, f.name) > 0:
                raise ConfigError(f"{f.name} must be positive")
        return self

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("sectors", "local_pairs"):
                s = "; ".join(",".join(str(x) for x in t) for t in v)
            elif f.name == "xi":
                s = ", ".join(format_complex(z) for z in v)
            elif f.name == "c":
                s = format_complex(v)
            elif isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, tuple):
                s = ",".join(str(x) for x in v)
            else:
                s = str(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"


def _check_sector(sec, N: int, M: int) -> None:
    if len(sec) != N - 1:
        raise ConfigError(f"sector {sec} needs {N - 1} entries")
    chain = (M,) + tuple(sec) + (0,)
    if any(chain[k] < chain[k + 1] for k in range(len(chain) - 1)):
        raise ConfigError(f"sector {sec} violates M >= a_1 >= ... >= 0")


def default_sectors(N: int, M: int) -> tuple[tuple[int, ...], ...]:
    """Non-vacuum level tuples with a_1 <= M/2 and a_{k+1} <= ceil(a_k/2).

    For GL(3), M = 4 this gives (1,0), (1,1), (2,0), (2,1).
    """
    out = []
    for c in itertools.product(range(M // 2 + 1), repeat=N - 1):
        if sum(c) and all(c[k + 1] <= (c[k] + 1) // 2 for k in range(len(c) - 1)):
            out.append(c)
    return tuple(sorted(out))


def load_config(path: str | None, overrides=()) -> RunConfig:
    """Read a config file (optional) then apply KEY=VALUE overrides."""
    pairs = []
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            pairs.append((k.strip(), v.strip()))
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} must be KEY=VALUE")
        k, v = ov.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    cfg = RunConfig()
    explicit = {k for k, _ in pairs}
    for k, v in pairs:
        cfg.set(k, v)
    if "m" not in explicit:
        cfg.m = max(1, cfg.M // 2)
    if "sectors" not in explicit:
        cfg.sectors = default_sectors(cfg.N, cfg.M)
    if "lemma_sector" not in explicit:
        cfg.lemma_sector = (1,) * (cfg.N - 1)
    if "local_diagonal" not in explicit:
        cfg.local_diagonal = tuple(range(1, cfg.N + 1))
    return cfg.validate()
