"""CSV schemas, config canonicalization, cache behavior, CLI contracts."""

import json
import subprocess
import sys

import numpy as np
import pytest

from floquet_ness.cache import SolutionCache
from floquet_ness.config import config_hash, load_config, spec_id, trunc_id
from floquet_ness.errors import ConfigError
from floquet_ness.io import read_csv, read_rate_csv, write_rate_csv
from floquet_ness.model import Truncation, paper_system
from floquet_ness.rates import RateEngine

FAST_CFG = """
[truncation]
nu_cut = 3
e_cut = 20
quad_points = 16

[run]
beta_list = 0.5, 2.0
lambda_list = 0.0, 0.5
"""


def run_cli(args, cwd=None):
    return subprocess.run([sys.executable, "-m", "floquet_ness.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture()
def fast_cfg(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(FAST_CFG)
    return path


class TestRateCsv:
    def test_round_trip_bit_identical(self, spec, tmp_path):
        trunc = Truncation(nu_cut=2, e_cut=20.0, quad_points=16)
        table = RateEngine(spec, trunc).table(1.7)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_rate_csv(p1, [table], comments=["x"])
        loaded = read_rate_csv(p1, spec)[0]
        write_rate_csv(p2, [loaded], comments=["x"])
        assert p1.read_bytes() == p2.read_bytes()
        assert loaded.per_nu == table.per_nu
        assert loaded.beta == table.beta

    def test_header_comments_survive(self, spec, tmp_path):
        trunc = Truncation(nu_cut=2, e_cut=20.0, quad_points=16)
        table = RateEngine(spec, trunc).table(1.7)
        path = tmp_path / "a.csv"
        write_rate_csv(path, [table], comments=["alpha", "beta: 7"])
        comments, columns, rows = read_csv(path)
        assert comments[:2] == ["alpha", "beta: 7"]
        assert columns[0] == "beta"
        assert len(rows) == 3 * 3 * 5


class TestConfig:
    def test_defaults_load(self):
        cfg = load_config(None)
        assert cfg.spec.levels == (-0.5, 0.0, 0.4)
        assert cfg.trunc.nu_cut == 8

    def test_hash_stable_under_reordering(self, tmp_path):
        a = tmp_path / "a.ini"
        b = tmp_path / "b.ini"
        a.write_text("[system]\nomega = 1.35\nlambda = 0.5\n")
        b.write_text("[system]\nlambda = 0.5\nomega = 1.35\n")
        assert config_hash(load_config(a)) == config_hash(load_config(b))

    def test_hash_sees_value_changes(self, tmp_path):
        a = tmp_path / "a.ini"
        a.write_text("[system]\nomega = 1.35\n")
        b = tmp_path / "b.ini"
        b.write_text("[system]\nomega = 1.36\n")
        assert config_hash(load_config(a)) != config_hash(load_config(b))

    def test_bad_values_rejected(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[run]\nbeta_list = 0.0, 1.0\n")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")

    def test_geometric_beta_spec(self, tmp_path):
        p = tmp_path / "g.ini"
        p.write_text("[run]\nbeta_start = 0.1\nbeta_ratio = 0.5\nbeta_count = 3\n")
        assert load_config(p).beta_list == (0.1, 0.05, 0.025)


class TestCache:
    def test_memory_round_trip(self):
        cache = SolutionCache(None)
        key = cache.record_key("s", "t", 0.9, 1)
        psi = np.array([1 + 2j, 3 - 1j])
        t_row = np.array([0.5j, -0.25])
        cache.put(key, psi, t_row)
        got = cache.get(key)
        assert np.array_equal(got[0], psi) and np.array_equal(got[1], t_row)

    def test_disk_round_trip(self, tmp_path):
        c1 = SolutionCache(tmp_path / "cache")
        key = c1.record_key("s", "t", 0.9, 1)
        psi = np.array([1 + 2j, 3 - 1j])
        t_row = np.array([0.5j, -0.25])
        c1.put(key, psi, t_row)
        c2 = SolutionCache(tmp_path / "cache")
        got = c2.get(key)
        assert np.array_equal(got[0], psi) and np.array_equal(got[1], t_row)

    def test_version_mismatch_is_miss(self, tmp_path):
        c1 = SolutionCache(tmp_path / "cache")
        key = c1.record_key("s", "t", 0.9, 1)
        c1.put(key, np.array([1j]), np.array([2j]))
        path = c1._path(key)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        assert SolutionCache(tmp_path / "cache").get(key) is None

    def test_engine_results_identical_with_cache(self, spec, tmp_path):
        trunc = Truncation(nu_cut=2, e_cut=20.0, quad_points=16)
        plain = RateEngine(spec, trunc).table(1.3)
        cache = SolutionCache(tmp_path / "cache")
        cold = RateEngine(spec, trunc, cache=cache).table(1.3)
        assert cache.misses > 0
        warm_cache = SolutionCache(tmp_path / "cache")
        warm = RateEngine(spec, trunc, cache=warm_cache).table(1.3)
        assert warm_cache.misses == 0 and warm_cache.hits > 0
        assert cold.per_nu == plain.per_nu == warm.per_nu

    def test_key_distinguishes_inputs(self, spec):
        k1 = SolutionCache.record_key(spec_id(spec), trunc_id(Truncation()), 0.9, 1)
        k2 = SolutionCache.record_key(spec_id(spec), trunc_id(Truncation()), 0.9, 2)
        k3 = SolutionCache.record_key(
            spec_id(spec), trunc_id(Truncation(nu_cut=7)), 0.9, 1)
        assert len({k1, k2, k3}) == 3


class TestCli:
    def test_deterministic_outputs(self, fast_cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            r = run_cli(["ness", "--config", str(fast_cfg), "--out", str(out)])
            assert r.returncode == 0, r.stderr
        assert (a / "ness.csv").read_bytes() == (b / "ness.csv").read_bytes()

    def test_cold_and_warm_cache_match(self, fast_cfg, tmp_path):
        cache = tmp_path / "cache"
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            r = run_cli(["rates", "--config", str(fast_cfg), "--out", str(out),
                         "--cache", str(cache)])
            assert r.returncode == 0, r.stderr
        assert (a / "rates.csv").read_bytes() == (b / "rates.csv").read_bytes()

    def test_worker_count_does_not_change_bytes(self, fast_cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out, workers in ((a, "1"), (b, "4")):
            r = run_cli(["bound", "--config", str(fast_cfg), "--out", str(out),
                         "--workers", workers])
            assert r.returncode == 0, r.stderr
        assert (a / "bound.csv").read_bytes() == (b / "bound.csv").read_bytes()

    def test_config_hash_stamped(self, fast_cfg, tmp_path):
        out = tmp_path / "o"
        run_cli(["ness", "--config", str(fast_cfg), "--out", str(out)])
        comments, _, _ = read_csv(out / "ness.csv")
        assert any(c.startswith("config-hash: ") for c in comments)
        assert config_hash(load_config(fast_cfg)) in " ".join(comments)

    def test_converge_sweep_schema(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(FAST_CFG + "\n[sweep]\ne_cut_list = 4, 8\nnu_cut_list = 1, 2\n")
        out = tmp_path / "o"
        r = run_cli(["check", "--config", str(cfg), "--out", str(out),
                     "--converge"])
        assert r.returncode == 0, r.stderr
        comments, columns, rows = read_csv(out / "convergence.csv")
        assert columns == ["beta", "e_cut", "nu_cut", "j", "residual"]
        assert len(rows) == 2 * 2 * 2 * 3

    def test_bad_config_exits_2_with_record(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[truncation]\nquad_points = 2\n")
        r = run_cli(["rates", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert r.returncode == 2
        record = json.loads(r.stderr.strip().splitlines()[-1])
        assert record["error"] == "ConfigError"

    def test_threshold_collision_exits_3(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(FAST_CFG + "\n[solve]\np = 1.0\nj_in = 1\n")
        r = run_cli(["dump-solve", "--config", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert r.returncode == 3
        record = json.loads(r.stderr.strip().splitlines()[-1])
        assert record["error"] == "ThresholdCollisionError"

    def test_unstable_lowt_probe_exits_4(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(FAST_CFG + "\n[lowt]\np_min = 1.6\n")
        r = run_cli(["lowt", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert r.returncode == 4
        record = json.loads(r.stderr.strip().splitlines()[-1])
        assert record["error"] == "ConvergenceError"

    def test_ratesym_emits_rate_schema(self, fast_cfg, tmp_path):
        out = tmp_path / "o"
        r = run_cli(["ratesym", "--config", str(fast_cfg), "--out", str(out)])
        assert r.returncode == 0, r.stderr
        spec = paper_system()
        tables = read_rate_csv(out / "ratesym.csv", spec)
        assert len(tables) == 9  # geometric beta sequence
        assert all(t.beta > 0 for t in tables)

    def test_lowt_outputs(self, fast_cfg, tmp_path):
        out = tmp_path / "o"
        r = run_cli(["lowt", "--config", str(fast_cfg), "--out", str(out)])
        assert r.returncode == 0, r.stderr
        _, _, rows = read_csv(out / "lowt_ness.csv")
        assert len(rows) == 3
        assert all(cells[0] == "inf" for cells in rows)

    def test_dump_solve_files(self, fast_cfg, tmp_path):
        out = tmp_path / "o"
        r = run_cli(["dump-solve", "--config", str(fast_cfg),
                     "--out", str(out)])
        assert r.returncode == 0, r.stderr
        _, cols, rows = read_csv(out / "solve_matrix.csv")
        assert cols == ["row", "col", "re", "im"]
        n = 3 * (2 * 3 + 1)
        assert len(rows) == n * n
        _, cols, rows = read_csv(out / "solve_state.csv")
        assert len(rows) == n
