import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from mlaf.checkpoint import load_checkpoint, save_checkpoint
from mlaf.cli import main as cli_main
from mlaf.config import RunConfig, config_from_dict, load_config
from mlaf.errors import CheckpointError, ConfigurationError
from mlaf.model import ModelKind, ModelParams
from mlaf.runner import (
    RunAborted,
    csv_header,
    load_series_csv,
    run_simulate,
    run_sweep,
)
from mlaf.spectral import fft_workers, make_grid

from conftest import TWO_PI, random_solenoidal


def _write_config(path, **over):
    base = {
        "grid": {"n": "16", "L": str(TWO_PI)},
        "model": {"kind": "ml-alpha", "nu": "0.05", "alpha": "0.25"},
        "forcing": {"enabled": "true", "shell_m": "2", "amplitude": "0.4", "seed": "3"},
        "initial": {"kind": "taylor-green", "amplitude": "1.0", "seed": "1"},
        "time": {"t_end": "1.0", "dt": "0.02", "output_every": "5", "spinup": "0"},
        "diagnostics": {"n_max": "6", "ladder_c_prefactor": "5.0"},
        "paths": {"outdir": "out"},
    }
    for section, kv in over.items():
        base.setdefault(section, {}).update(kv)
    lines = []
    for section, kv in base.items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in kv.items()]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


class TestConfig:
    def test_load_and_echo(self, tmp_path):
        p = _write_config(tmp_path / "run.ini")
        cfg = load_config(p)
        assert cfg.n == 16 and cfg.kind is ModelKind.ML_ALPHA
        echo = cfg.echo()
        assert echo["model.nu"] == 0.05
        assert echo["grid.L"] == pytest.approx(TWO_PI)

    def test_negative_nu_names_field(self, tmp_path):
        p = _write_config(tmp_path / "bad.ini", model={"nu": "-0.1"})
        with pytest.raises(ConfigurationError, match="model.nu"):
            load_config(p)

    def test_unknown_key_rejected(self, tmp_path):
        p = _write_config(tmp_path / "bad.ini", model={"viscosity": "0.1"})
        with pytest.raises(ConfigurationError, match="model.viscosity"):
            load_config(p)

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[solver]\nx = 1\n")
        with pytest.raises(ConfigurationError, match="solver"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.ini")

    def test_bad_kind(self):
        with pytest.raises(ConfigurationError, match="model.kind"):
            config_from_dict({"model": {"kind": "bardina"}})

    def test_shell_must_fit(self):
        with pytest.raises(ConfigurationError, match="forcing.shell_m"):
            config_from_dict({"grid": {"n": "16"}, "forcing": {"shell_m": "5"}})

    def test_cli_exit_code_2_names_field(self, tmp_path, capsys):
        p = _write_config(tmp_path / "bad.ini", model={"nu": "-1"})
        code = cli_main(["simulate", "--config", str(p)])
        assert code == 2
        assert "model.nu" in capsys.readouterr().err


class TestCheckpoint:
    def test_roundtrip_bit_identical(self, tmp_path, grid16):
        u = random_solenoidal(grid16, 1)
        params = ModelParams(nu=0.1, alpha=0.3, kind=ModelKind.LERAY_ALPHA)
        path = tmp_path / "x.ckpt"
        save_checkpoint(path, u, params, t=1.25, seed=42)
        ck = load_checkpoint(path)
        assert ck.n == 16 and ck.kind is ModelKind.LERAY_ALPHA
        assert ck.t == 1.25 and ck.seed == 42
        assert ck.nu == 0.1 and ck.alpha == 0.3
        assert np.array_equal(ck.coeffs, u.coeffs)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.ckpt"
        p.write_bytes(b"XXXX" + bytes(60))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(p)

    def test_version_mismatch(self, tmp_path, grid16):
        u = random_solenoidal(grid16, 2)
        p = tmp_path / "v.ckpt"
        save_checkpoint(p, u, ModelParams(nu=0.1), 0.0, 0)
        blob = bytearray(p.read_bytes())
        blob[4] = 99
        p.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(p)

    def test_truncated_payload(self, tmp_path, grid16):
        u = random_solenoidal(grid16, 3)
        p = tmp_path / "t.ckpt"
        save_checkpoint(p, u, ModelParams(nu=0.1), 0.0, 0)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(CheckpointError, match="size"):
            load_checkpoint(p)


class TestRunSimulate:
    def test_decay_run_outputs(self, tmp_path):
        cfg = load_config(
            _write_config(
                tmp_path / "c.ini",
                forcing={"enabled": "false"},
                time={"t_end": "1.0", "dt": "0.02", "output_every": "5"},
                paths={"outdir": str(tmp_path / "run")},
            )
        )
        result = run_simulate(cfg)
        lines = result.csv_path.read_text().splitlines()
        assert lines[0] == ",".join(csv_header(6))
        h0 = [float(line.split(",")[1]) for line in lines[1:]]
        assert all(a > b for a, b in zip(h0, h0[1:]))  # monotone decay
        assert result.report_path.exists() and result.checkpoint_path.exists()
        rep = json.loads(result.report_path.read_text())
        assert rep["config"]["model.nu"] == 0.05
        assert "spectrum" in rep and rep["identities"]["energy_residual_max_rel"] < 1e-12

    def test_csv_floats_roundtrip_losslessly(self, tmp_path):
        cfg = load_config(
            _write_config(
                tmp_path / "c.ini",
                time={"t_end": "0.2", "dt": "0.02", "output_every": "5"},
                paths={"outdir": str(tmp_path / "run")},
            )
        )
        result = run_simulate(cfg)
        lines = result.csv_path.read_text().splitlines()[1:]
        for line in lines:
            for tok in line.split(","):
                v = float(tok)
                assert f"{v:.16e}" == tok  # 17 significant digits, exact

    def test_nan_abort_keeps_last_good(self, tmp_path, monkeypatch):
        cfg = load_config(
            _write_config(
                tmp_path / "c.ini",
                time={"t_end": "1.0", "dt": "0.02", "output_every": "2"},
                paths={"outdir": str(tmp_path / "run")},
            )
        )
        import mlaf.runner as runner_mod

        real_record = runner_mod.record
        calls = {"k": 0}

        def poisoned(state, f, params, n_max):
            rec = real_record(state, f, params, n_max)
            calls["k"] += 1
            if calls["k"] >= 4:
                object.__setattr__(rec, "H", rec.H * np.nan)
            return rec

        monkeypatch.setattr(runner_mod, "record", poisoned)
        with pytest.raises(RunAborted, match="last good checkpoint"):
            run_simulate(cfg)
        ck = load_checkpoint(tmp_path / "run" / "last_good.ckpt")
        assert np.all(np.isfinite(ck.coeffs))

    def test_resume_reproduces_rows_bit_identically(self, tmp_path):
        outA = tmp_path / "full"
        outB = tmp_path / "part"
        common = dict(
            forcing={"enabled": "true", "shell_m": "2", "amplitude": "0.4", "seed": "3"},
            time={"t_end": "2.0", "dt": "0.02", "output_every": "10"},
        )
        cfg_full = load_config(
            _write_config(tmp_path / "a.ini", paths={"outdir": str(outA)}, **common)
        )
        run_simulate(cfg_full)
        part = dict(common)
        part["time"] = dict(common["time"], t_end="1.0")
        cfg_part = load_config(
            _write_config(tmp_path / "b.ini", paths={"outdir": str(outB)}, **part)
        )
        run_simulate(cfg_part)
        outC = tmp_path / "resumed"
        cfg_res = replace(cfg_full, outdir=outC)
        run_simulate(cfg_res, resume_from=outB / "final.ckpt")

        rows_full = outA.joinpath("diagnostics.csv").read_text().splitlines()
        rows_res = outC.joinpath("diagnostics.csv").read_text().splitlines()
        # resumed rows (t >= 1.0) must equal the full run's rows textually
        tail_full = rows_full[-len(rows_res) + 1 :]
        assert rows_res[1:] == tail_full

    def test_final_checkpoint_resume_matches_state(self, tmp_path):
        cfg = load_config(
            _write_config(
                tmp_path / "c.ini",
                time={"t_end": "0.4", "dt": "0.02", "output_every": "5"},
                paths={"outdir": str(tmp_path / "run")},
            )
        )
        result = run_simulate(cfg)
        ck = load_checkpoint(result.checkpoint_path)
        assert ck.t == pytest.approx(0.4, abs=1e-12)


class TestReportRerender:
    def test_rerender_flags_fd(self, tmp_path):
        cfg = load_config(
            _write_config(
                tmp_path / "c.ini",
                time={"t_end": "1.0", "dt": "0.02", "output_every": "5"},
                paths={"outdir": str(tmp_path / "run")},
            )
        )
        result = run_simulate(cfg)
        series = load_series_csv(result.csv_path, cfg)
        assert series.ddt_source == "finite_difference"
        code = cli_main(
            [
                "report",
                "--config",
                str(tmp_path / "c.ini"),
                "--csv",
                str(result.csv_path),
                "--out",
                str(tmp_path / "re.json"),
            ]
        )
        assert code == 0
        rep = json.loads((tmp_path / "re.json").read_text())
        assert rep["run"]["ddt_source"] == "finite_difference"
        assert all(l["ddt_source"] == "finite_difference" for l in rep["ladder"])

    def test_header_mismatch_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,energy\n0,1\n1,2\n")
        cfg = RunConfig(outdir=tmp_path).validate()
        with pytest.raises(ConfigurationError, match="header"):
            load_series_csv(bad, cfg)


class TestSweep:
    def _base_cfg(self, tmp_path, **over):
        return load_config(
            _write_config(
                tmp_path / "s.ini",
                time={"t_end": "0.4", "dt": "0.02", "output_every": "5"},
                paths={"outdir": str(tmp_path / "sweep")},
                **over,
            )
        )

    def test_alpha_sweep_quadratic_convergence(self, tmp_path):
        cfg = self._base_cfg(tmp_path, forcing={"enabled": "false"})
        summary = run_sweep(cfg, "alpha", [0.2, 0.1, 0.05])
        lines = summary.read_text().splitlines()
        cols = lines[0].split(",")
        i = cols.index("diff_rel_vs_alpha0")
        diffs = [float(line.split(",")[i]) for line in lines[1:]]
        assert 3.2 <= diffs[0] / diffs[1] <= 4.8
        assert 3.2 <= diffs[1] / diffs[2] <= 4.8

    def test_amplitude_sweep_columns(self, tmp_path):
        cfg = self._base_cfg(tmp_path)
        summary = run_sweep(cfg, "amplitude", [0.2, 0.4, 0.8])
        lines = summary.read_text().splitlines()
        cols = lines[0].split(",")
        for needed in ("value", "Re", "Gr", "eps", "c_gr_vs_re", "c_agmon", "c_hat_N1"):
            assert needed in cols
        i = cols.index("c_gr_vs_re")
        assert all(np.isfinite(float(line.split(",")[i])) for line in lines[1:])

    def test_too_few_values_rejected(self, tmp_path):
        cfg = self._base_cfg(tmp_path)
        with pytest.raises(ConfigurationError, match="at least 3"):
            run_sweep(cfg, "alpha", [0.1, 0.2])

    def test_duplicate_values_rejected(self, tmp_path):
        cfg = self._base_cfg(tmp_path)
        with pytest.raises(ConfigurationError, match="duplicate"):
            run_sweep(cfg, "alpha", [0.1, 0.1, 0.2])

    def test_bad_axis_rejected(self, tmp_path):
        cfg = self._base_cfg(tmp_path)
        with pytest.raises(ConfigurationError, match="axis"):
            run_sweep(cfg, "viscosity", [0.1, 0.2, 0.3])


class TestWorkerCap:
    def test_fft_workers_env(self, monkeypatch):
        monkeypatch.delenv("MLAF_THREADS", raising=False)
        assert fft_workers() == 1
        monkeypatch.setenv("MLAF_THREADS", "2")
        assert fft_workers() == 2
        monkeypatch.setenv("MLAF_THREADS", "999")
        assert fft_workers() <= (np.minimum(999, 64))  # capped at cpu count
