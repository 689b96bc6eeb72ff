"""Command-line surface: exit codes, artifacts, overrides, determinism."""

import json
import re

import numpy as np
import pytest

from flyscan import ImageGrid
from flyscan import io
from flyscan.cli import main
from flyscan.datasets import synthetic_shapes

SUMMARY = re.compile(r"^\d+\.\d{2}% (-?\d+\.\d{4}|inf) (-?\d+\.\d{4})$")

FAST = [
    "--iterations", "2",
    "--n-anchors", "30",
    "--initial-anchors", "8",
    "--steps", "5",
    "--seed", "4",
]


@pytest.fixture(scope="module")
def image_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "shapes.pgm"
    io.write_pgm(path, synthetic_shapes(48))
    return str(path)


class TestRun:
    def test_run_populates_directory_and_prints_summary(
        self, image_path, tmp_path, capsys
    ):
        out = tmp_path / "r1"
        assert main(["run", image_path, "--out", str(out), *FAST]) == 0
        line = capsys.readouterr().out.strip()
        assert SUMMARY.match(line)
        for name in ("config.json", "metrics.csv", "readouts.csv",
                     "recon_k00.pgm", "path_k00.csv", "anchors.csv"):
            assert (out / name).exists()

    def test_missing_image_exits_1_with_path(self, tmp_path, capsys):
        code = main(["run", "no_such_image.pgm", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "no_such_image.pgm" in capsys.readouterr().err

    def test_unknown_config_key_exits_2_named(self, image_path, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"warp_speed": 9}))
        code = main(
            ["run", image_path, "--out", str(tmp_path / "y"), "--config", str(cfg)]
        )
        assert code == 2
        assert "warp_speed" in capsys.readouterr().err

    def test_bad_value_type_exits_2_named(self, image_path, tmp_path, capsys):
        cfg = tmp_path / "bad2.json"
        cfg.write_text(json.dumps({"n_anchors": "lots"}))
        code = main(
            ["run", image_path, "--out", str(tmp_path / "z"), "--config", str(cfg)]
        )
        assert code == 2
        assert "n_anchors" in capsys.readouterr().err

    def test_flag_overrides_reflected_in_config_json(self, image_path, tmp_path):
        out = tmp_path / "ov"
        main(["run", image_path, "--out", str(out), *FAST, "--alpha", "5", "--ell", "2"])
        flat = json.loads((out / "config.json").read_text())
        assert flat["alpha"] == 5.0
        assert flat["ell"] == 2.0
        assert flat["seed"] == 4

    def test_flags_override_config_file(self, image_path, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"alpha": 3.0, "ell": 7.0}))
        out = tmp_path / "prec"
        main(["run", image_path, "--out", str(out), *FAST,
              "--config", str(cfg), "--alpha", "6"])
        flat = json.loads((out / "config.json").read_text())
        assert flat["alpha"] == 6.0   # flag beats file
        assert flat["ell"] == 7.0     # file beats default

    def test_refuses_overwrite_without_force(self, image_path, tmp_path, capsys):
        out = tmp_path / "clobber"
        assert main(["run", image_path, "--out", str(out), *FAST]) == 0
        capsys.readouterr()
        assert main(["run", image_path, "--out", str(out), *FAST]) == 1
        assert "metrics.csv" in capsys.readouterr().err
        assert main(["run", image_path, "--out", str(out), *FAST, "--force"]) == 0

    def test_same_seed_byte_identical_artifacts(self, image_path, tmp_path):
        a = tmp_path / "runa"
        b = tmp_path / "runb"
        main(["run", image_path, "--out", str(a), *FAST])
        main(["run", image_path, "--out", str(b), *FAST])
        assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
        recons = sorted(p.name for p in a.glob("recon_*.pgm"))
        assert recons
        for name in recons:
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestExitCodesAndFlags:
    def test_numerical_failure_exits_3(self, image_path, tmp_path, capsys, monkeypatch):
        from flyscan.errors import NumericalError
        import flyscan.cli as cli_mod

        def boom(*args, **kwargs):
            raise NumericalError("loss went non-finite")

        monkeypatch.setattr(cli_mod.pipeline, "run_full", boom)
        code = main(["run", image_path, "--out", str(tmp_path / "nf"), *FAST])
        assert code == 3
        assert "non-finite" in capsys.readouterr().err

    def test_verbose_emits_optimizer_traces(self, image_path, tmp_path):
        out = tmp_path / "tr"
        assert main(["run", image_path, "--out", str(out), *FAST, "-v"]) == 0
        traces = sorted(out.glob("trace_k*.csv"))
        assert traces
        lines = traces[0].read_text().splitlines()
        assert lines[0] == "step,loss"
        assert len(lines) > 2

    def test_budget_cap_zero_disables_cap(self, image_path, tmp_path):
        out = tmp_path / "nocap"
        assert main(
            ["run", image_path, "--out", str(out), *FAST, "--budget-cap", "0"]
        ) == 0
        flat = json.loads((out / "config.json").read_text())
        assert flat["budget_cap"] is None

    def test_console_script_help(self):
        import subprocess
        import sys

        proc = subprocess.run(
            [sys.executable, "-m", "flyscan.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "run" in proc.stdout and "baseline" in proc.stdout


class TestOtherCommands:
    def test_baseline(self, image_path, tmp_path, capsys):
        out = tmp_path / "base"
        code = main(
            ["baseline", image_path, "--out", str(out), *FAST, "--fraction", "0.1"]
        )
        assert code == 0
        assert SUMMARY.match(capsys.readouterr().out.strip())
        assert (out / "metrics.csv").exists()

    def test_baseline_fraction_validation(self, image_path, tmp_path, capsys):
        code = main(
            ["baseline", image_path, "--out", str(tmp_path / "bf"), "--fraction", "1.5"]
        )
        assert code == 2
        assert "fraction" in capsys.readouterr().err

    def test_sweep_writes_rows(self, image_path, tmp_path, capsys):
        out = tmp_path / "sw"
        code = main(
            ["sweep", image_path, "--out", str(out), *FAST,
             "--param", "alpha", "--values", "2,10"]
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "param,value,sampling_frac,psnr_db,ssim"
        assert len(lines) == 3
        assert "alpha sweep" in capsys.readouterr().out

    def test_sweep_bad_values_exit_2(self, image_path, tmp_path, capsys):
        code = main(
            ["sweep", image_path, "--out", str(tmp_path / "s2"),
             "--param", "ell", "--values", "1,zap"]
        )
        assert code == 2
        assert "--values" in capsys.readouterr().err

    def test_raster_reports_count(self, image_path, tmp_path, capsys):
        out = tmp_path / "ras"
        assert main(["raster", image_path, "--out", str(out)]) == 0
        msg = capsys.readouterr().out
        assert re.search(r"raster readouts: \d+", msg)
        assert (out / "raster_reference.pgm").exists()
        assert (out / "raster_readouts.csv").exists()

    def test_metrics_identical_images(self, image_path, capsys):
        assert main(["metrics", image_path, image_path]) == 0
        assert capsys.readouterr().out.strip() == "inf 1.0000"

    def test_metrics_four_decimals(self, tmp_path, capsys):
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        io.write_pgm(a, ImageGrid(np.zeros((8, 8))))
        io.write_pgm(b, ImageGrid(np.full((8, 8), 0.5)))
        assert main(["metrics", str(a), str(b)]) == 0
        out = capsys.readouterr().out.strip()
        assert re.match(r"^-?\d+\.\d{4} -?\d+\.\d{4}$", out)
