import json

import pytest

from composite_ff import bethe
from composite_ff.cli import EXIT_CONFIG, EXIT_OK, execute, main
from composite_ff.cli.cache import SCHEMA_VERSION, RootCache, RootCacheEntry, cache_key
from composite_ff.cli.config import (ConfigError, RunConfig, default_sectors, format_complex,
                                     load_config, parse_complex)
from composite_ff.cli.report import record_line
from composite_ff.model import ModelSpec


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("COMPOSITE_FF_CACHE", str(d))
    return d


def test_complex_literals():
    assert parse_complex("1.5-2i") == 1.5 - 2j
    assert parse_complex(" 3 ") == 3
    assert parse_complex("-0.25+1e-3j") == -0.25 + 1e-3j
    with pytest.raises(ConfigError):
        parse_complex("abc")
    z = 0.1 + 0.2j
    assert parse_complex(format_complex(z)) == z


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# chain\nN = 3\nM = 3\nm = 1\nc = 1+0i\nsuites = rtt, bethe\n"
                 "sectors = 1,0; 1,1\n")
    cfg = load_config(str(p), ["seed=3", "tol_thm41=1e-9"])
    assert (cfg.N, cfg.M, cfg.m, cfg.seed) == (3, 3, 1, 3)
    assert cfg.sectors == ((1, 0), (1, 1)) and cfg.suites == ("rtt", "bethe")
    assert cfg.tol_thm41 == 1e-9
    again = tmp_path / "again.cfg"
    again.write_text(cfg.to_text())
    assert load_config(str(again)).to_text() == cfg.to_text()


@pytest.mark.parametrize("override", [
    ["M=9"], ["m=0"], ["m=4"], ["suites=rtt,nope"], ["sectors=1,2"], ["bogus=1"],
    ["xi_mode=explicit", "xi=0,0.5"], ["c=0"], ["tol_rtt=-1"], ["local_pairs=1,1"],
])
def test_invalid_configs_rejected(override):
    with pytest.raises(ConfigError):
        load_config(None, override)


def test_default_sectors():
    assert default_sectors(3, 4) == ((1, 0), (1, 1), (2, 0), (2, 1))
    assert default_sectors(2, 4) == ((1,), (2,))


def test_dense_limit_exit_code(cache_dir, capsys):
    assert main(["run", "--set", "M=9"]) == EXIT_CONFIG
    assert "dense limit" in capsys.readouterr().err


def test_cache_round_trip(tmp_path):
    spec = ModelSpec.random(3, 4, seed=7)
    roots = bethe.solve_sector((2, 1), spec, seed=1, n_starts=60)
    key = cache_key(spec, (2, 1), spec.twist, 1, 60)
    cache = RootCache(tmp_path)
    cache.store(RootCacheEntry(key, (2, 1), spec.twist, roots, 1, 60))
    back = cache.load(key)
    assert [r.levels for r in back.roots] == [r.levels for r in roots]
    assert [r.residual for r in back.roots] == [r.residual for r in roots]
    assert back.schema == SCHEMA_VERSION


def test_cache_hit_skips_solver(tmp_path):
    spec = ModelSpec.random(3, 4, seed=7)
    src = RootCache(tmp_path).source()
    first = src((2, 0), spec, spec.twist, 1, 40)
    calls = bethe.STATS["solve_calls"]
    second = src((2, 0), spec, spec.twist, 1, 40)
    assert bethe.STATS["solve_calls"] == calls
    assert [r.levels for r in first] == [r.levels for r in second]
    fresh = RootCache(tmp_path)
    fresh.source()((2, 0), spec, spec.twist, 1, 40)
    assert (fresh.hits, fresh.misses) == (1, 0)


def test_cache_key_contract():
    spec = ModelSpec.random(3, 4, seed=7)
    xi = list(spec.xi)
    xi[0] += 1e-12
    moved = ModelSpec(3, 4, spec.c, tuple(xi), spec.m)
    k = cache_key(spec, (1, 0), spec.twist, 1, 50)
    assert k == cache_key(ModelSpec.random(3, 4, seed=7), (1, 0), spec.twist, 1, 50)
    assert k != cache_key(moved, (1, 0), spec.twist, 1, 50)
    assert k != cache_key(spec, (1, 0), (1, 1.1, 1), 1, 50)
    assert k != cache_key(spec, (1, 0), spec.twist, 2, 50)


def test_corrupt_and_stale_entries_recomputed(tmp_path, caplog):
    spec = ModelSpec.random(3, 4, seed=7)
    key = cache_key(spec, (1, 0), spec.twist, 1, 50)
    cache = RootCache(tmp_path)
    tmp_path.mkdir(exist_ok=True)
    cache.path(key).write_text("{not json")
    assert cache.load(key) is None
    cache.path(key).write_text(json.dumps({"schema": SCHEMA_VERSION + 1}))
    assert cache.load(key) is None
    roots = cache.source()((1, 0), spec, spec.twist, 1, 50)
    assert roots and cache.misses == 1 and cache.load(key) is not None
    assert "schema" in caplog.text and "corrupt" in caplog.text


def test_bad_cached_roots_fail_revalidation(tmp_path):
    spec = ModelSpec.random(3, 4, seed=7)
    key = cache_key(spec, (1, 0), spec.twist, 1, 50)
    bad = bethe.BetheRootSet(((0.123 + 0.4j,), ()), spec.twist, 0.0)
    cache = RootCache(tmp_path)
    cache.store(RootCacheEntry(key, (1, 0), spec.twist, [bad], 1, 50))
    roots = cache.source()((1, 0), spec, spec.twist, 1, 50)
    assert cache.misses == 1 and all(r.residual < 1e-11 for r in roots)


def test_run_writes_reports_and_is_deterministic(tmp_path, cache_dir, capsys):
    args = ["run", "--set", "M=3", "--set", "m=1", "--set", "suites=rtt,bethe,thm41,commutators",
            "--set", "rtt_sites=1,2", "--set", "rtt_pairs=2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b"), "--set", "use_cache=false"]) == EXIT_OK
    a = (tmp_path / "a" / "records.jsonl").read_text()
    b = (tmp_path / "b" / "records.jsonl").read_text()
    assert a == b and a
    rec = json.loads(a.splitlines()[0])
    for key in ("suite", "identity", "N", "M", "m", "sector_bra", "sector_ket", "i", "j",
                "z_or_site", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_res", "rel_res",
                "pass"):
        assert key in rec
    assert "runtime" not in rec
    summary = (tmp_path / "a" / "summary.txt").read_text()
    assert "total:" in summary and "passed" in summary
    assert json.loads((tmp_path / "a" / "timings.json").read_text())["suites"]


def test_summary_recomputable_from_records(tmp_path, cache_dir):
    cfg = load_config(None, ["M=3", "m=1", "suites=bethe,thm41", "use_cache=false"])
    records, _ = execute(cfg)
    lines = [json.loads(record_line(r)) for r in records]
    assert sum(x["pass"] for x in lines) == sum(r.passed for r in records)
    worst = max(x["rel_res"] for x in lines if x["identity"] == "partial zero mode form factor"
                and not x["structural_zero"])
    assert worst == max(r.rel_res for r in records
                        if r.identity == "partial zero mode form factor" and not r.structural_zero)


def test_float_serialization_round_trips(tmp_path, cache_dir):
    cfg = load_config(None, ["M=2", "m=1", "suites=thm41", "use_cache=false"])
    records, _ = execute(cfg)
    for r in records:
        d = json.loads(record_line(r))
        assert complex(d["lhs_re"], d["lhs_im"]) == r.lhs
        assert d["rel_res"] == r.rel_res


def test_other_verbs(tmp_path, cache_dir, capsys):
    assert main(["list-sectors", "--set", "M=2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("occupations=") == 6
    assert main(["solve-roots", "--sector", "1,0", "--set", "M=2"]) == EXIT_OK
    assert "admissible root sets" in capsys.readouterr().out
    assert main(["solve-roots", "--sector", "1", "--set", "M=2"]) == EXIT_CONFIG
    assert main(["show-cache"]) == EXIT_OK
    assert "1 entries" in capsys.readouterr().out
    assert main(["clean-cache"]) == EXIT_OK
    assert "removed 1" in capsys.readouterr().out
    assert not list(cache_dir.glob("*.json"))


def test_run_config_defaults():
    cfg = RunConfig()
    assert (cfg.N, cfg.M, cfg.m, cfg.seed) == (3, 4, 2, 7)
    assert cfg.validate() is cfg


def test_rank_dependent_defaults_follow_N():
    cfg = load_config(None, ["N=2", "M=5"])
    assert (cfg.m, cfg.sectors, cfg.lemma_sector, cfg.local_diagonal) == (
        2, ((1,), (2,)), (1,), (1, 2))
    assert load_config(None, ["N=4", "M=3"]).local_diagonal == (1, 2, 3, 4)
    assert main(["list-sectors", "--set", "N=2", "--set", "M=5"]) == EXIT_OK
