"""On-disk cache of Bethe root sets, one JSON file per key."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..bethe import TOL_ROOT, BetheRootSet, refine, solve_sector
from ..model import ModelSpec

SCHEMA_VERSION = 1
log = logging.getLogger(__name__)


def _c(z: complex) -> list[float]:
    return [complex(z).real, complex(z).imag]


def cache_key(spec: ModelSpec, sector, twist, seed: int, n_starts: int) -> str:
    """sha256 over the exact shortest round-trip decimals of every input.

    Seed and start count are included so a cache hit returns exactly what
    a fresh solve with the same settings would.
    """
    parts = [f"schema={SCHEMA_VERSION}", f"N={spec.N}", f"M={spec.M}",
             f"c={spec.c.real!r},{spec.c.imag!r}",
             "xi=" + ";".join(f"{z.real!r},{z.imag!r}" for z in spec.xi),
             "sector=" + ",".join(str(int(a)) for a in sector),
             "twist=" + ";".join(f"{complex(k).real!r},{complex(k).imag!r}" for k in twist),
             f"seed={seed}", f"n_starts={n_starts}"]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()


@dataclass
class RootCacheEntry:
    key: str
    sector: tuple[int, ...]
    twist: tuple[complex, ...]
    roots: list[BetheRootSet]
    seed: int
    n_starts: int
    schema: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return {
            "schema": self.schema, "key": self.key, "sector": list(self.sector),
            "twist": [_c(k) for k in self.twist], "seed": self.seed, "n_starts": self.n_starts,
            "roots": [{"levels": [[_c(z) for z in t] for t in r.levels],
                       "residual": r.residual} for r in self.roots],
        }

    @classmethod
    def from_json(cls, d: dict) -> "RootCacheEntry":
        twist = tuple(complex(*k) for k in d["twist"])
        roots = [BetheRootSet(tuple(tuple(complex(*z) for z in t) for t in r["levels"]),
                              twist, float(r["residual"]), True) for r in d["roots"]]
        return cls(d["key"], tuple(d["sector"]), twist, roots, int(d["seed"]),
                   int(d["n_starts"]), int(d["schema"]))


class RootCache:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.hits = 0
        self.misses = 0

    def path(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def store(self, entry: RootCacheEntry) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        tmp = self.path(entry.key).with_suffix(".tmp")
        tmp.write_text(json.dumps(entry.to_json(), indent=1))
        tmp.replace(self.path(entry.key))

    def load(self, key: str) -> RootCacheEntry | None:
        p = self.path(key)
        if not p.exists():
            return None
        try:
            d = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", p.name, exc)
            return None
        if d.get("schema") != SCHEMA_VERSION:
            log.warning("cache entry %s has schema %s, expected %s; ignored",
                        p.name, d.get("schema"), SCHEMA_VERSION)
            return None
        try:
            return RootCacheEntry.from_json(d)
        except (KeyError, TypeError, ValueError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", p.name, exc)
            return None

    def entries(self) -> list[RootCacheEntry]:
        out = []
        for p in sorted(self.dir.glob("*.json")) if self.dir.exists() else []:
            e = self.load(p.stem)
            if e is not None:
                out.append(e)
        return out

    def clean(self) -> int:
        n = 0
        if self.dir.exists():
            for p in self.dir.glob("*.json"):
                p.unlink()
                n += 1
        return n

    def source(self, tol_root: float = TOL_ROOT):
        """Root provider for StateBank: cache lookup, else solve and store."""

        def provide(card, spec, twist, seed, n_starts):
            key = cache_key(spec, card, twist, seed, n_starts)
            entry = self.load(key)
            if entry is not None and _revalidate(entry, spec, tol_root):
                self.hits += 1
                return entry.roots
            self.misses += 1
            roots = solve_sector(card, spec, twist, seed=seed, n_starts=n_starts,
                                 tol_root=tol_root)
            self.store(RootCacheEntry(key, tuple(card), tuple(twist), roots, seed, n_starts))
            return roots

        return provide


def _revalidate(entry: RootCacheEntry, spec: ModelSpec, tol_root: float) -> bool:
    """One Newton step from each cached root set must stay below tol_root."""
    for r in entry.roots:
        if not r.flat().size:
            continue
        try:
            rs, _ = refine(r, spec, max_iter=1, tol_root=tol_root)
        except Exception:  # noqa: BLE001 - any failure means recompute
            return False
        if not rs.residual < tol_root:
            log.warning("cache entry %s failed re-validation; recomputing", entry.key[:12])
            return False
    return True
