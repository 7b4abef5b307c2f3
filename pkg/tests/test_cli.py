"""End-to-end tests of the command-line interface.

Every test drives ``main`` with an argv list and a temporary output
directory, then inspects the emitted CSV/JSON files. Exit codes follow
the 0/2/3 convention (success, usage error, data error).
"""

import json
import math

import numpy as np
import pytest

from schwinger_dqpt.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    UsageError,
    main,
    parse_config,
)

SQRT2 = math.sqrt(2.0)


def read_series(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    return header, np.array(rows)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

class TestConfig:
    def test_toml_round_trip(self):
        cfg = RunConfig(m=2.0, J=0.5, steps=7, mode="trotter-noisy", seed=3)
        assert parse_config(cfg.to_toml()) == cfg

    def test_to_toml_is_canonical(self):
        text = RunConfig().to_toml()
        keys = [ln.split(" = ")[0] for ln in text.strip().splitlines()]
        assert keys == sorted(keys)
        assert "readout_flip" not in keys  # None fields are omitted
        assert 'mode = "analytic"' in text
        assert "dt = 0.1" in text

    def test_unknown_key_rejected(self):
        with pytest.raises(UsageError, match="unknown config keys"):
            parse_config("stepz = 3\n")

    def test_type_mismatch_rejected(self):
        with pytest.raises(UsageError, match="must be an integer"):
            parse_config("steps = 3.5\n")
        with pytest.raises(UsageError, match="must be a number"):
            parse_config('m = "heavy"\n')
        with pytest.raises(UsageError, match="must be a string"):
            parse_config("mode = 4\n")

    def test_flags_override_config(self, tmp_path):
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text("steps = 3\nmode = \"analytic\"\n")
        out = tmp_path / "out"
        rc = main(["evolve", "--config", str(cfg_path), "--steps", "1",
                   "--out", str(out)])
        assert rc == EXIT_OK
        _, rows = read_series(out / "series.csv")
        assert rows.shape[0] == 2  # flag wins over the file


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

class TestSpectrum:
    def test_headline_numbers(self, tmp_path, capsys):
        rc = main(["spectrum", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "spectrum.json").read_text())
        assert report["eigenvalues"] == pytest.approx([-SQRT2, -1.0, 1.0, SQRT2])
        assert round(report["a_g"], 3) == 0.653
        assert round(report["b_g"], 3) == -0.271
        assert report["parity"] == ["even", "odd", "odd", "even"]
        # stdout carries the same report
        assert json.loads(capsys.readouterr().out) == report

    def test_mass_scaling(self, tmp_path):
        rc = main(["spectrum", "--m", "2", "--J", "1", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "spectrum.json").read_text())
        assert report["eigenvalues"][0] == pytest.approx(-math.sqrt(5.0))


class TestEvolve:
    def test_analytic_series(self, tmp_path):
        rc = main(["evolve", "--mode", "analytic", "--steps", "8",
                   "--dt", "0.1", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        header, rows = read_series(tmp_path / "series.csv")
        assert header == ["t", "echo", "overlap_e", "overlap_ebar",
                          "overlap_gbar", "phase", "rate"]
        assert rows.shape == (9, 7)
        for t, echo in zip(rows[:, 0], rows[:, 1]):
            assert echo == pytest.approx(math.cos(SQRT2 * t) ** 2, abs=1e-9)
        assert rows[0, 1] == pytest.approx(1.0)
        assert not (tmp_path / "trajectory.json").exists()

    def test_trotter_noiseless_close_to_analytic(self, tmp_path):
        rc = main(["evolve", "--mode", "trotter-noiseless", "--steps", "10",
                   "--dt", "0.1", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        _, rows = read_series(tmp_path / "series.csv")
        for t, echo in zip(rows[:, 0], rows[:, 1]):
            assert abs(echo - math.cos(SQRT2 * t) ** 2) < 5e-3

    def test_trotter_noisy_writes_trajectory(self, tmp_path):
        rc = main(["evolve", "--mode", "trotter-noisy", "--steps", "2",
                   "--dt", "0.1", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        _, rows = read_series(tmp_path / "series.csv")
        assert np.all(rows[:, 5] == 0.0)  # no phase for density evolution
        traj = json.loads((tmp_path / "trajectory.json").read_text())
        assert len(traj) == 3
        assert len(traj[0]["rho"]) == 256

    def test_sampled_mode_is_seed_deterministic(self, tmp_path):
        argv = ["evolve", "--mode", "trotter-sampled", "--steps", "1",
                "--dt", "0.1", "--realizations", "5", "--seed", "11"]
        out_a, out_b, out_c = (tmp_path / d for d in ("a", "b", "c"))
        assert main(argv + ["--out", str(out_a)]) == EXIT_OK
        assert main(argv + ["--out", str(out_b)]) == EXIT_OK
        assert (out_a / "series.csv").read_bytes() == (out_b / "series.csv").read_bytes()
        argv[-1] = "12"
        assert main(argv + ["--out", str(out_c)]) == EXIT_OK
        assert (out_a / "series.csv").read_bytes() != (out_c / "series.csv").read_bytes()

    def test_svg_plot_emitted(self, tmp_path):
        rc = main(["evolve", "--mode", "analytic", "--steps", "3",
                   "--out", str(tmp_path), "--svg"])
        assert rc == EXIT_OK
        svg = (tmp_path / "series.svg").read_text()
        assert svg.lstrip().startswith("<svg")

    def test_bad_mode_from_config_is_usage_error(self, tmp_path):
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text('mode = "adiabatic"\n')
        rc = main(["evolve", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == EXIT_USAGE

    def test_zero_coupling_is_usage_error(self, tmp_path):
        # the model itself rejects J = 0, the CLI maps that to exit 2
        rc = main(["evolve", "--J", "0", "--steps", "1", "--out", str(tmp_path)])
        assert rc == EXIT_USAGE

    def test_bad_dt_is_usage_error(self, tmp_path):
        rc = main(["evolve", "--dt", "-0.1", "--steps", "1", "--out", str(tmp_path)])
        assert rc == EXIT_USAGE


class TestExport:
    def test_files_and_moment_report(self, tmp_path):
        rc = main(["export", "--steps", "3", "--dt", "0.1",
                   "--out", str(tmp_path), "--moment-report"])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "export.json").read_text())
        assert report["round_trip_checked"] is True
        assert report["moments_per_step"] == 20
        assert report["moments_total"] == 60
        prep = (tmp_path / "ground_prep.qasm").read_text()
        assert prep.startswith("OPENQASM 2.0;")
        assert (tmp_path / "trotter_3steps.qasm").exists()

    def test_prep_only_when_no_steps(self, tmp_path):
        rc = main(["export", "--steps", "0", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "export.json").read_text())
        assert len(report["files"]) == 1


class TestWinding:
    def test_default_window_finds_single_vortex(self, tmp_path):
        rc = main(["winding", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "winding.json").read_text())
        assert len(report["vortices"]) == 1
        v = report["vortices"][0]
        assert v["nu"] == 1
        assert v["J"] == pytest.approx(0.995)
        assert v["t"] == pytest.approx(1.115)
        assert report["total_winding"] == 1
        assert report["undefined_cells"] == []

    def test_early_window_is_vortex_free(self, tmp_path):
        rc = main(["winding", "--t-min", "0.0", "--t-max", "0.5",
                   "--nt", "11", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "winding.json").read_text())
        assert report["vortices"] == []

    def test_bad_window_is_usage_error(self, tmp_path):
        rc = main(["winding", "--j-min", "0", "--out", str(tmp_path)])
        assert rc == EXIT_USAGE


class TestTomo:
    def test_noiseless_reconstruction(self, tmp_path):
        rc = main(["tomo", "--mode", "noiseless", "--shots", "512",
                   "--seed", "5", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "tomo.json").read_text())
        assert report["readout_flip"] == 0.0
        assert report["trace_distance_to_true"] < 0.2
        assert report["fidelity_with_ground"] > 0.8
        counts = json.loads((tmp_path / "counts.json").read_text())
        assert len(counts) == 81
        assert all(c["shots"] == 512 for c in counts)
        recon = json.loads((tmp_path / "reconstructed.json").read_text())
        assert len(recon) == 1 and len(recon[0]["rho"]) == 256

    def test_noisy_mode_uses_model_readout(self, tmp_path):
        rc = main(["tomo", "--mode", "noisy", "--shots", "512",
                   "--p1", "0.02", "--p2", "0.03", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads((tmp_path / "tomo.json").read_text())
        assert report["readout_flip"] == pytest.approx(0.02)

    def test_seed_determinism(self, tmp_path):
        argv = ["tomo", "--mode", "noiseless", "--shots", "256", "--seed", "9"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(out_a)]) == EXIT_OK
        assert main(argv + ["--out", str(out_b)]) == EXIT_OK
        assert (out_a / "counts.json").read_bytes() == (out_b / "counts.json").read_bytes()

    def test_bad_shots_is_usage_error(self, tmp_path):
        rc = main(["tomo", "--shots", "0", "--out", str(tmp_path)])
        assert rc == EXIT_USAGE


class TestFit:
    def test_end_to_end_recovery(self, tmp_path):
        target_dir = tmp_path / "target"
        rc = main(["evolve", "--mode", "trotter-noisy", "--steps", "2",
                   "--dt", "0.1", "--p1", "0.01", "--p2", "0.016",
                   "--out", str(target_dir)])
        assert rc == EXIT_OK
        fit_dir = tmp_path / "fit"
        rc = main(["fit", "--target", str(target_dir / "trajectory.json"),
                   "--steps", "2", "--dt", "0.1", "--k", "3",
                   "--grid-start", "0.009", "0.015",
                   "--grid-step", "0.001", "0.001",
                   "--grid-count", "3", "3",
                   "--out", str(fit_dir)])
        assert rc == EXIT_OK
        result = json.loads((fit_dir / "fit.json").read_text())
        assert result["params"]["p_1"] == pytest.approx(0.01)
        assert result["params"]["p_2"] == pytest.approx(0.016)
        assert result["min"] < 1e-10
        surface = (fit_dir / "surface.csv").read_text().splitlines()
        assert surface[0] == "axis1,axis2,value"
        assert len(surface) == 1 + 9

    def test_missing_target_flag_is_usage_error(self, tmp_path):
        rc = main(["fit", "--out", str(tmp_path)])
        assert rc == EXIT_USAGE

    def test_absent_target_file_is_data_error(self, tmp_path):
        rc = main(["fit", "--target", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path)])
        assert rc == EXIT_DATA

    def test_corrupt_target_file_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        rc = main(["fit", "--target", str(bad), "--out", str(tmp_path)])
        assert rc == EXIT_DATA


class TestExitCodes:
    def test_unknown_config_key_is_usage_error(self, tmp_path):
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text("stepz = 3\n")
        rc = main(["spectrum", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == EXIT_USAGE

    def test_invalid_toml_is_data_error(self, tmp_path):
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text("= broken =\n")
        rc = main(["spectrum", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == EXIT_DATA

    def test_missing_config_file_is_data_error(self, tmp_path):
        rc = main(["spectrum", "--config", str(tmp_path / "none.toml"),
                   "--out", str(tmp_path)])
        assert rc == EXIT_DATA

    def test_nested_out_dir_created(self, tmp_path):
        out = tmp_path / "a" / "b"
        rc = main(["spectrum", "--out", str(out)])
        assert rc == EXIT_OK
        assert (out / "spectrum.json").exists()
