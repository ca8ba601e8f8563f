"""CLI tests: config validation, dump format, exit codes, determinism."""

import numpy as np
import pytest

from vpsm.cli import (DUMP_MAGIC, RunConfig, load_config, main, read_dump,
                      write_dump, write_effective_config)
from vpsm.driftkin import BenchmarkSpec
from vpsm.errors import ConfigError


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


BENCH_SMALL = """
[benchmark]
m = 2
n = 1
t_end = 40.0
"""


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config("rotation2d")
        assert cfg.experiment == "rotation2d"
        assert cfg.n_r == 64 and cfg.n_theta == 128
        assert cfg.scheme == "psm" and cfg.form == "fv"
        assert cfg.bench is None

    def test_driftkinetic_grid_defaults(self):
        cfg = load_config("driftkinetic")
        assert (cfg.n_r, cfg.n_theta, cfg.n_z, cfg.n_v) == (32, 128, 16, 16)
        assert isinstance(cfg.bench, BenchmarkSpec)
        assert cfg.form == "split"

    def test_file_values_override_defaults(self, tmp_path):
        path = write_cfg(tmp_path, """
[run]
stride = 7
dt = 2.5
[grid]
n_cells = 42
[scheme]
scheme = sls
k = 9.0
""")
        cfg = load_config("step1d", path)
        assert cfg.stride == 7 and cfg.dt == 2.5
        assert cfg.n_cells == 42
        assert cfg.scheme == "sls" and cfg.k == 9.0

    def test_flags_override_file(self, tmp_path):
        path = write_cfg(tmp_path, "[scheme]\nscheme = psm\nk = 2.0\n")
        cfg = load_config("step1d", path,
                          overrides={"scheme": "upwind", "k": 3.0,
                                     "out": "elsewhere"})
        assert cfg.scheme == "upwind" and cfg.k == 3.0
        assert cfg.out == "elsewhere"

    def test_none_overrides_are_ignored(self, tmp_path):
        path = write_cfg(tmp_path, "[scheme]\nscheme = sls\n")
        cfg = load_config("step1d", path, overrides={"scheme": None})
        assert cfg.scheme == "sls"

    def test_dump_times_parsed(self, tmp_path):
        path = write_cfg(tmp_path,
                         "[run]\ndump_times = 10.0, 20, 35.5\n" + BENCH_SMALL)
        cfg = load_config("driftkinetic", path)
        assert cfg.dump_times == (10.0, 20.0, 35.5)

    @pytest.mark.parametrize("body,fragment", [
        ("[run]\nwalltime = 10\n", "walltime"),
        ("[grid]\nn_cells = 10\n", "n_cells"),          # not a 2D grid key
        ("[scheme]\nlimiter = on\n", "limiter"),
        ("[fields]\nsolver = fast\n", "fields"),
    ])
    def test_unknown_keys_rejected(self, tmp_path, body, fragment):
        path = write_cfg(tmp_path, body)
        with pytest.raises(ConfigError, match=fragment):
            load_config("rotation2d", path)

    def test_benchmark_section_only_for_driftkinetic(self, tmp_path):
        path = write_cfg(tmp_path, "[benchmark]\nm = 2\n")
        with pytest.raises(ConfigError, match="benchmark"):
            load_config("step1d", path)

    def test_unknown_benchmark_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[benchmark]\nmagnetic_shear = 0.8\n")
        with pytest.raises(ConfigError, match="magnetic_shear"):
            load_config("driftkinetic", path)

    def test_top_level_keys_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[DEFAULT]\nstride = 2\n[run]\nseed = 1\n")
        with pytest.raises(ConfigError):
            load_config("step1d", path)

    def test_bad_value_identifies_key(self, tmp_path):
        path = write_cfg(tmp_path, "[run]\nstride = soon\n")
        with pytest.raises(ConfigError, match="stride"):
            load_config("step1d", path)

    def test_experiment_mismatch_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[run]\nexperiment = rotation2d\n")
        with pytest.raises(ConfigError, match="rotation2d"):
            load_config("step1d", path)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("step1d", "/nonexistent/path.cfg")

    def test_syntax_error_reports_position(self, tmp_path):
        path = write_cfg(tmp_path, "stride = 2\n")   # key before any section
        with pytest.raises(ConfigError):
            load_config("step1d", path)


class TestRunConfigValidation:
    @pytest.mark.parametrize("kw", [
        dict(stride=0), dict(threads=0), dict(dt=0.0), dict(dt=-1.0),
        dict(scheme="upwind", experiment="rotation2d"),
        dict(form="spectral"), dict(k=0.0), dict(n_cells=2),
        dict(r_min=2.0, r_max=1.0), dict(dump_times=(0.0,)),
        dict(experiment="driftkinetic"),            # missing benchmark
        dict(bench=BenchmarkSpec()),                # benchmark on 2D run
    ])
    def test_rejects(self, kw):
        args = dict(experiment="rotation2d", out="o")
        args.update(kw)
        with pytest.raises(ConfigError):
            RunConfig(**args)

    def test_scheme_all_only_for_step1d(self):
        RunConfig(experiment="step1d", out="o", scheme="all")
        with pytest.raises(ConfigError):
            RunConfig(experiment="rotation2d", out="o", scheme="all")


class TestEffectiveConfigRoundTrip:
    def test_reload_reproduces_config(self, tmp_path):
        cfg = load_config("driftkinetic", None,
                          overrides={"out": str(tmp_path / "o"),
                                     "scheme": "sls", "k": 4.0})
        path = tmp_path / "effective.cfg"
        write_effective_config(cfg, path)
        again = load_config("driftkinetic", str(path))
        assert again == cfg

    def test_reload_reproduces_float_exactly(self, tmp_path):
        bench = BenchmarkSpec(kappa_ti=0.1 + 0.2)    # not representable tidily
        cfg = RunConfig(experiment="driftkinetic", out="o", bench=bench,
                        dt=1.0 / 3.0)
        path = tmp_path / "effective.cfg"
        write_effective_config(cfg, path)
        again = load_config("driftkinetic", str(path))
        assert again.bench.kappa_ti == bench.kappa_ti
        assert again.dt == cfg.dt


class TestDumpFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((3, 4, 2, 5))
        path = tmp_path / "field.bin"
        write_dump(path, data, {"time": 1.5, "scheme": "psm"})
        back = read_dump(path)
        assert back.shape == (3, 4, 2, 5)
        assert np.array_equal(back, data)
        sidecar = (tmp_path / "field.txt").read_text()
        assert "time = 1.5" in sidecar and "scheme = psm" in sidecar

    def test_header_layout(self, tmp_path):
        data = np.arange(24, dtype=float).reshape(2, 3, 4, 1)
        path = tmp_path / "field.bin"
        write_dump(path, data, {"time": 0.0})
        raw = path.read_bytes()
        assert raw[:4] == DUMP_MAGIC == b"VPSM"
        header = np.frombuffer(raw, dtype="<u4", count=5, offset=4)
        assert header[0] == 1
        assert tuple(header[1:]) == (2, 3, 4, 1)
        assert len(raw) == 4 + 5 * 4 + 24 * 8
        payload = np.frombuffer(raw, dtype="<f8", offset=24)
        assert np.array_equal(payload, data.ravel())   # row-major order

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "field.bin"
        path.write_bytes(b"JUNK" + b"\x00" * 40)
        with pytest.raises(ValueError, match="magic"):
            read_dump(path)

    def test_bad_version_rejected(self, tmp_path):
        data = np.zeros((2, 2, 1, 1))
        path = tmp_path / "field.bin"
        write_dump(path, data, {})
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="version"):
            read_dump(path)

    def test_requires_four_axes(self, tmp_path):
        with pytest.raises(ValueError, match="4 axes"):
            write_dump(tmp_path / "x.bin", np.zeros((3, 3)), {})


class TestExitCodes:
    def test_success(self, tmp_path):
        cfg = write_cfg(tmp_path, "[grid]\nn_cells = 20\n")
        code = main(["step1d", "--config", cfg, "--scheme", "upwind",
                     "--out", str(tmp_path / "o")])
        assert code == 0

    def test_config_error_is_2(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[run]\nbogus = 1\n")
        code = main(["step1d", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "bogus" in capsys.readouterr().err

    def test_numerical_failure_is_3(self, tmp_path, capsys):
        # a forced step far above the rotation CFL trips the flux guard
        cfg = write_cfg(tmp_path, """
[run]
dt = 10.0
[grid]
n_r = 8
n_theta = 16
""")
        code = main(["rotation2d", "--config", cfg,
                     "--out", str(tmp_path / "o")])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err


class TestStep1dRun:
    def test_outputs_and_scheme_ordering(self, tmp_path):
        cfg = write_cfg(tmp_path, "[grid]\nn_cells = 20\n[run]\nstride = 50\n")
        out = tmp_path / "o"
        assert main(["step1d", "--config", cfg, "--out", str(out)]) == 0
        summary = (out / "summary.txt").read_text().splitlines()
        stats = {}
        for line in summary:
            name, rest = line.split(":", 1)
            parts = rest.split()
            stats[name] = {parts[i]: float(parts[i + 2])
                           for i in range(0, len(parts), 3)}
        # upwind obeys the maximum principle; the plain spline scheme
        # overshoots; the limited one overshoots strictly less
        assert stats["upwind"]["max_overshoot"] <= 1e-12
        assert stats["psm"]["max_overshoot"] > 0.005
        assert stats["sls"]["max_overshoot"] < stats["psm"]["max_overshoot"]
        for name in ("psm", "sls", "upwind"):
            assert stats[name]["mass_drift"] <= 1e-12
        initial = read_dump(out / "step1d_psm_initial.bin")
        final = read_dump(out / "step1d_psm_final.bin")
        assert initial.shape == (20, 1, 1, 1) == final.shape

    def test_single_scheme_flag(self, tmp_path):
        out = tmp_path / "o"
        code = main(["step1d", "--scheme", "bsl", "--out", str(out)])
        assert code == 0
        assert (out / "step1d_bsl_diag.csv").exists()
        assert not (out / "step1d_psm_diag.csv").exists()


class TestRotation2dRun:
    def test_blob_returns(self, tmp_path):
        cfg = write_cfg(tmp_path, "[grid]\nn_r = 16\nn_theta = 32\n")
        out = tmp_path / "o"
        assert main(["rotation2d", "--config", cfg, "--out", str(out)]) == 0
        summary = (out / "summary.txt").read_text()
        values = {kv.split("=")[0].strip(): float(kv.split("=")[1])
                  for kv in summary.strip().split("  ")}
        assert values["l2_error"] <= 0.05
        assert values["mass_drift"] <= 1e-12
        final = read_dump(out / "rotation2d_final.bin")
        assert final.shape == (16, 32, 1, 1)


class TestDriftkineticRun:
    def small_cfg(self, tmp_path, eps, extra_run=""):
        return write_cfg(tmp_path, f"""
[run]
stride = 1
{extra_run}
[grid]
n_r = 8
n_theta = 16
n_z = 8
n_v = 8
[benchmark]
m = 2
n = 1
eps = {eps}
t_end = 400.0
""")

    def test_unperturbed_records_never_move(self, tmp_path):
        cfg = self.small_cfg(tmp_path, eps=0.0)
        out = tmp_path / "o"
        assert main(["driftkinetic", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "driftkinetic_diag.csv").read_text().splitlines()
        header = rows[0].split(",")
        first = dict(zip(header, map(float, rows[1].split(","))))
        for row in rows[2:]:
            rec = dict(zip(header, map(float, row.split(","))))
            for key in ("mass", "l2", "f_min", "f_max", "slice_min",
                        "slice_max", "mode_amp"):
                ref = abs(first[key])
                assert abs(rec[key] - first[key]) <= 1e-12 * max(ref, 1.0)

    def test_dump_times_land_exactly(self, tmp_path):
        cfg = self.small_cfg(tmp_path, eps=0.0001,
                             extra_run="dump_times = 150.0\ndt = 120.0")
        out = tmp_path / "o"
        assert main(["driftkinetic", "--config", cfg, "--out", str(out)]) == 0
        sidecar = (out / "slice_001.txt").read_text()
        assert "time = 150.0" in sidecar
        last = (out / "slice_002.txt").read_text()
        assert "time = 400.0" in last
        assert read_dump(out / "slice_001.bin").shape == (8, 16, 1, 1)


class TestDeterminism:
    def test_identical_reruns_are_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[run]
threads = 1
[grid]
n_r = 8
n_theta = 16
n_z = 8
n_v = 8
[benchmark]
m = 2
n = 1
t_end = 300.0
""")
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["driftkinetic", "--config", cfg,
                         "--out", str(out)]) == 0
            outs.append(out)
        diag_a = (outs[0] / "driftkinetic_diag.csv").read_bytes()
        diag_b = (outs[1] / "driftkinetic_diag.csv").read_bytes()
        assert diag_a == diag_b
        dump_a = (outs[0] / "slice_001.bin").read_bytes()
        dump_b = (outs[1] / "slice_001.bin").read_bytes()
        assert dump_a == dump_b

    def test_rerun_from_effective_config(self, tmp_path):
        cfg = write_cfg(tmp_path, "[grid]\nn_cells = 20\n")
        out1 = tmp_path / "o1"
        assert main(["step1d", "--config", cfg, "--out", str(out1)]) == 0
        out2 = tmp_path / "o2"
        assert main(["step1d", "--config", str(out1 / "effective.cfg"),
                     "--out", str(out2)]) == 0
        for name in ("step1d_psm_diag.csv", "step1d_sls_diag.csv",
                     "step1d_upwind_diag.csv", "summary.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
