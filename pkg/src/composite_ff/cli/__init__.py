"""Command line interface: run verification suites, inspect sectors, roots and the cache.

Exit codes: 0 all checks pass, 1 some identity failed, 2 configuration
error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from ..bethe import solve_sector
from ..hilbert import enumerate_sectors
from ..model import ModelSpec
from ..suites import SUITE_FUNCS, Lab, Settings
from .cache import RootCache
from .config import ConfigError, RunConfig, load_config, parse_complex
from .report import record_line, summary_table

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("composite_ff")


def build_spec(cfg: RunConfig) -> ModelSpec:
    try:
        if cfg.xi_mode == "explicit":
            return ModelSpec(cfg.N, cfg.M, cfg.c, tuple(cfg.xi), cfg.m)
        return ModelSpec.random(cfg.N, cfg.M, cfg.seed, cfg.c, m=cfg.m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def settings_from(cfg: RunConfig) -> Settings:
    tol = {name[4:]: getattr(cfg, name) for name in vars(cfg) if name.startswith("tol_")}
    return Settings(seed=cfg.seed, solver_seed=cfg.solver_seed, points_seed=cfg.points_seed,
                    z_seed=cfg.z_seed, n_starts_factor=cfg.n_starts_factor,
                    sectors=tuple(cfg.sectors), rtt_sites=tuple(cfg.rtt_sites),
                    rtt_pairs=cfg.rtt_pairs, lemma_sector=tuple(cfg.lemma_sector),
                    lemma_betas=cfg.lemma_betas, beta_radius=cfg.beta_radius,
                    local_pairs=tuple(cfg.local_pairs), local_diagonal=tuple(cfg.local_diagonal),
                    glN_ranks=tuple(cfg.glN_ranks), glN_M=cfg.glN_M, glN_m=cfg.glN_m,
                    tol=tol, workers=cfg.workers)


def execute(cfg: RunConfig, cache: RootCache | None = None):
    """Run the configured suites; returns (records, timings)."""
    spec = build_spec(cfg)
    if cache is None and cfg.use_cache:
        cache = RootCache(cfg.cache_dir)
    lab = Lab(spec, settings_from(cfg), cache.source(cfg.tol_root) if cache else None)
    records, timings = [], {}
    for name in cfg.suites:
        t0 = time.perf_counter()
        recs = SUITE_FUNCS[name](lab)
        timings[name] = time.perf_counter() - t0
        records.extend(recs)
    return records, timings


def write_outputs(records, timings, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w") as fh:
        for r in records:
            fh.write(record_line(r) + "\n")
    (out / "summary.txt").write_text(summary_table(records) + "\n")
    with open(out / "timings.json", "w") as fh:
        json.dump({"suites": timings,
                   "records": [{"suite": r.suite, "identity": r.identity, "runtime": r.runtime}
                               for r in records]}, fh, indent=1)


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.out:
        cfg.out_dir = args.out
    records, timings = execute(cfg)
    write_outputs(records, timings, cfg.out_dir)
    print(summary_table(records))
    print(f"records written to {Path(cfg.out_dir) / 'records.jsonl'}")
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


def cmd_list_sectors(args) -> int:
    cfg = load_config(args.config, args.set)
    for s in enumerate_sectors(cfg.N, cfg.M, cfg.dense_limit):
        print(f"occupations={s.occupations} levels={s.levels} dim={s.dim}")
    return EXIT_OK


def cmd_solve_roots(args) -> int:
    cfg = load_config(args.config, args.set)
    spec = build_spec(cfg)
    sector = tuple(int(x) for x in args.sector.split(","))
    if len(sector) != cfg.N - 1:
        raise ConfigError(f"sector needs {cfg.N - 1} entries")
    twist = tuple(parse_complex(x) for x in args.twist.split(",")) if args.twist else spec.twist
    if len(twist) != cfg.N:
        raise ConfigError(f"twist needs {cfg.N} entries")
    n = args.n_starts or cfg.n_starts_factor * sum(sector)
    if cfg.use_cache:
        roots = RootCache(cfg.cache_dir).source(cfg.tol_root)(sector, spec, twist,
                                                                cfg.solver_seed, n)
    else:
        roots = solve_sector(sector, spec, twist, seed=cfg.solver_seed, n_starts=n,
                             tol_root=cfg.tol_root)
    print(f"{len(roots)} admissible root sets in sector {sector} ({n} starts)")
    for r in roots:
        print(f"  residual={r.residual:.2e}  {r.label()}")
    return EXIT_OK


def cmd_show_cache(args) -> int:
    cfg = load_config(args.config, args.set)
    entries = RootCache(cfg.cache_dir).entries()
    print(f"cache {cfg.cache_dir}: {len(entries)} entries")
    for e in entries:
        print(f"  {e.key[:16]}  sector={e.sector} roots={len(e.roots)} "
              f"seed={e.seed} n_starts={e.n_starts}")
    return EXIT_OK


def cmd_clean_cache(args) -> int:
    cfg = load_config(args.config, args.set)
    n = RootCache(cfg.cache_dir).clean()
    print(f"removed {n} cache entries from {cfg.cache_dir}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="composite-ff",
                                description="Exact-diagonalization checks of form-factor "
                                            "identities for composite GL(N) spin chains.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        return sp

    r = common(sub.add_parser("run", help="run verification suites"))
    r.add_argument("--out", help="output directory (overrides out_dir)")
    r.set_defaults(func=cmd_run)
    common(sub.add_parser("list-sectors", help="list weight sectors")).set_defaults(
        func=cmd_list_sectors)
    s = common(sub.add_parser("solve-roots", help="solve Bethe roots in one sector"))
    s.add_argument("--sector", required=True, help="level cardinalities, e.g. 2,1")
    s.add_argument("--twist", help="comma separated twist, e.g. 1,1.1+0.1i,1")
    s.add_argument("--n-starts", type=int, default=0)
    s.set_defaults(func=cmd_solve_roots)
    common(sub.add_parser("show-cache", help="list cached root sets")).set_defaults(
        func=cmd_show_cache)
    common(sub.add_parser("clean-cache", help="delete cached root sets")).set_defaults(
        func=cmd_clean_cache)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
