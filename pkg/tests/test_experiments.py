import os

import numpy as np
import pytest

from floodcover.cli import main
from floodcover.coverage import SimConfig
from floodcover.experiments import (
    BatchSpec,
    load_config_file,
    run_batch,
    run_dir_name,
    summarize_runs,
)

FAST = dict(t_end=2.0, quadrature_res=64)


def fast_config(**kw):
    merged = dict(FAST)
    merged.update(kw)
    return SimConfig(**merged)


def fast_spec(tmp_path, **kw):
    merged = dict(fleet_sizes=(4,), trials=1, scenario="blob", out_dir=str(tmp_path / "out"))
    merged.update(kw)
    return BatchSpec(**merged)


class TestRunBatch:
    def test_counting_contract(self, tmp_path):
        spec = fast_spec(tmp_path)
        rows = run_batch(spec, base_config=fast_config())
        assert len(rows) == 2  # one per (mode, fleet size)
        out = tmp_path / "out"
        run_dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
        assert run_dirs == ["axis_n4_trial00", "gmdf_n4_trial00"]
        for d in run_dirs:
            files = {p.name for p in (out / d).iterdir()}
            assert {"metrics.csv", "run.jsonl", "density_t0.pgm", "density_t1.pgm", "density_t2.pgm"} <= files
        assert (out / "summary.csv").exists()

    def test_rerun_byte_identical(self, tmp_path):
        spec = fast_spec(tmp_path)
        run_batch(spec, base_config=fast_config())
        summary1 = (tmp_path / "out" / "summary.csv").read_bytes()
        jsonl1 = (tmp_path / "out" / "gmdf_n4_trial00" / "run.jsonl").read_bytes()
        run_batch(spec, base_config=fast_config())
        assert (tmp_path / "out" / "summary.csv").read_bytes() == summary1
        assert (tmp_path / "out" / "gmdf_n4_trial00" / "run.jsonl").read_bytes() == jsonl1

    def test_seed_isolation(self, tmp_path):
        # trial 1 artifacts do not depend on whether trial 0 ran
        spec2 = fast_spec(tmp_path, trials=2, modes=("gmdf",), out_dir=str(tmp_path / "two"))
        run_batch(spec2, base_config=fast_config())
        two = (tmp_path / "two" / run_dir_name("gmdf", 4, 1) / "run.jsonl").read_bytes()

        solo_dir = tmp_path / "solo"
        from floodcover.experiments import run_single

        cfg = fast_config(n=4, scenario="blob", mode="gmdf", seed=spec2.base_seed + 1)
        run_single(cfg, solo_dir / run_dir_name("gmdf", 4, 1))
        solo = (solo_dir / run_dir_name("gmdf", 4, 1) / "run.jsonl").read_bytes()
        assert solo == two

    def test_unwritable_out_dir_aborts(self, tmp_path):
        target = tmp_path / "file"
        target.write_text("occupied")
        spec = fast_spec(tmp_path, out_dir=str(target))
        with pytest.raises((ValueError, OSError)):
            run_batch(spec, base_config=fast_config())

    def test_parallel_matches_serial(self, tmp_path):
        spec_s = fast_spec(tmp_path, trials=2, out_dir=str(tmp_path / "serial"))
        spec_p = fast_spec(tmp_path, trials=2, out_dir=str(tmp_path / "par"), jobs=2)
        rows_s = run_batch(spec_s, base_config=fast_config())
        rows_p = run_batch(spec_p, base_config=fast_config())
        assert rows_s == rows_p
        assert (tmp_path / "serial" / "summary.csv").read_bytes() == (
            tmp_path / "par" / "summary.csv"
        ).read_bytes()


class TestSummarize:
    def test_recompute_matches_batch(self, tmp_path):
        spec = fast_spec(tmp_path, trials=2)
        rows = run_batch(spec, base_config=fast_config())
        out = tmp_path / "out"
        dirs = sorted(str(p) for p in out.iterdir() if p.is_dir())
        rows2 = summarize_runs(dirs)
        assert {(r.mode, r.n) for r in rows} == {(r.mode, r.n) for r in rows2}
        by_key = {(r.mode, r.n): r for r in rows}
        for r in rows2:
            ref = by_key[(r.mode, r.n)]
            assert r.mean_cov == pytest.approx(ref.mean_cov, abs=1e-12)
            assert r.trials == ref.trials

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            summarize_runs([str(tmp_path / "nope")])


class TestConfigFile:
    def test_empty_defaults(self, tmp_path):
        cfg, spec = load_config_file(None)
        assert cfg == SimConfig()
        assert spec == BatchSpec()
        assert cfg.scenario == "blob" and cfg.n == 16

    def test_parse_sections(self, tmp_path):
        path = tmp_path / "cfg.ini"
        path.write_text(
            """
[simulation]
n = 9
scenario = band
mode = axis
k = 0.8
t_end = 12.5

[sensing]
tau = 0.05
sensor_w = 16

[density]
phi0 = 0.002

[batch]
fleet_sizes = 4, 8
trials = 3
out_dir = results
"""
        )
        cfg, spec = load_config_file(path)
        assert cfg.n == 9 and cfg.scenario == "band" and cfg.mode == "axis"
        assert cfg.k == 0.8 and cfg.t_end == 12.5
        assert cfg.tau == 0.05 and cfg.sensor_w == 16
        assert cfg.phi0 == 0.002
        assert spec.fleet_sizes == (4, 8) and spec.trials == 3
        assert spec.out_dir == "results"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[simulation]\nwarp_drive = 9\n")
        with pytest.raises(ValueError):
            load_config_file(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            load_config_file(tmp_path / "ghost.ini")


class TestCli:
    def test_run_writes_artifacts(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("[simulation]\nt_end = 1.0\nquadrature_res = 64\n")
        code = main(
            [
                "run",
                "--config",
                str(cfg),
                "--scenario",
                "blob",
                "--n",
                "4",
                "--mode",
                "gmdf",
                "--seed",
                "7",
                "--out",
                "r1",
            ]
        )
        assert code == 0
        assert (tmp_path / "r1" / "metrics.csv").exists()
        assert (tmp_path / "r1" / "run.jsonl").exists()

    def test_batch_counts(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("[simulation]\nt_end = 1.0\nquadrature_res = 64\n")
        code = main(
            [
                "batch",
                "--config",
                str(cfg),
                "--scenario",
                "blob",
                "--fleet-sizes",
                "4",
                "--trials",
                "1",
                "--out",
                "b1",
            ]
        )
        assert code == 0
        dirs = [p for p in (tmp_path / "b1").iterdir() if p.is_dir()]
        assert len(dirs) == 2  # both modes x 1 fleet x 1 trial

    def test_render_emits_masks(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("[simulation]\nt_end = 1.0\nquadrature_res = 64\nn = 3\n")
        assert main(["run", "--config", str(cfg), "--out", "r2"]) == 0
        assert main(["render", "r2", "--times", "0,1"]) == 0
        for t in (0, 1):
            assert (tmp_path / "r2" / f"density_t{t}.pgm").exists()
            for a in range(3):
                assert (tmp_path / "r2" / f"mask_t{t}_a{a}.pgm").exists()

    def test_summarize_missing_dir_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["summarize", "deleted_dir"]) == 2

    def test_unknown_scenario_exit_2(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["run", "--scenario", "lava", "--out", "x"]) == 2

    def test_unknown_flag_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--warp", "9"])
        assert exc.value.code == 2

    def test_env_var_out_root(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("FLOODCOVER_OUT", str(tmp_path / "envout"))
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("[simulation]\nt_end = 1.0\nquadrature_res = 64\nn = 4\n")
        assert main(["run", "--config", str(cfg)]) == 0
        assert (tmp_path / "envout" / "run.jsonl").exists()
