import csv
import json
from pathlib import Path

import numpy as np
import pytest

from trace_sim.cli import main


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


MATCHED_D500 = """\
seed: 1
ensemble: {d: 500.0, delta_plus: 40.0}
grid: {nz: 201, nt: 8192, span: 25.6}
pulse: {kind: rising_exponential, amplitude: 1.0, rate: 0.3125, cutoff: 25.6}
control: {kind: constant, amplitude: 1.0}
protocol: {mode: storage, model: adiabatic}
"""


class TestSimulate:
    def test_matched_storage_summary(self, tmp_path):
        cfgf = write(tmp_path / "run.yaml", MATCHED_D500)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfgf), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert 0.0 <= summary["efficiency"] <= 1.0
        assert summary["leakage"] < 1e-3
        rows = list(csv.DictReader(open(out / "envelopes.csv")))
        assert {"leg", "t", "e_out_plus_re"} <= set(rows[0])

    def test_zero_control_transparent(self, tmp_path):
        cfgf = write(tmp_path / "run.yaml", MATCHED_D500.replace(
            "amplitude: 1.0}\nprotocol", "amplitude: 0.0}\nprotocol"))
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfgf), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["efficiency"] == pytest.approx(0.0, abs=1e-9)
        assert summary["energy_transmitted"] == pytest.approx(1.0, rel=1e-6)

    def test_unknown_key_is_line_numbered_error(self, tmp_path, capsys):
        cfgf = write(tmp_path / "bad.yaml",
                     "ensemble:\n  d: 5.0\n  typo_key: 1\n")
        assert main(["simulate", "--config", str(cfgf), "--out",
                     str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert "line 3" in err and "typo_key" in err

    def test_invalid_physics_rejected(self, tmp_path):
        cfgf = write(tmp_path / "bad.yaml", MATCHED_D500.replace(
            "d: 500.0", "d: -4.0"))
        assert main(["simulate", "--config", str(cfgf), "--out",
                     str(tmp_path / "o")]) == 2


class TestSweep:
    def test_fig1b_consistency(self, tmp_path):
        cfgf = write(tmp_path / "s.yaml",
                     "sweep: {kind: fig1b, min: 1.0, max: 1000.0, n: 64}\n")
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfgf), "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out / "fig1b.csv")))
        for r in rows:
            d = float(r["abscissa"])
            assert float(r["trace"]) == pytest.approx((d / (d + 2)) ** 2,
                                                      rel=1e-12)
            if d >= 10.0:
                assert (float(r["cavity"]) >= float(r["trace"])
                        >= float(r["freespace"]))

    def test_empty_range_exit_2(self, tmp_path):
        cfgf = write(tmp_path / "s.yaml",
                     "sweep: {kind: fig1b, min: 10.0, max: 10.0, n: 5}\n")
        assert main(["sweep", "--config", str(cfgf), "--out",
                     str(tmp_path / "o")]) == 2

    def test_decay_sweep_round_trip(self, tmp_path):
        cfgf = write(tmp_path / "d.yaml", """\
ensemble: {d: 200.0, delta_plus: 40.0, gamma_s: 0.002}
sweep:
  kind: decay
  holds: [0.0, 40.0, 80.0, 120.0, 160.0, 200.0, 240.0, 280.0, 320.0,
          360.0, 400.0, 440.0, 480.0, 520.0, 560.0, 600.0, 640.0]
  tau_g: 300.0
  omega: 1.0
  nz: 101
  nt: 2048
""")
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfgf), "--out", str(out),
                     "--jobs", "2"]) == 0
        fit_out = tmp_path / "fit"
        assert main(["fit", "--data", str(out / "decay.csv"),
                     "--model", "decay", "--out", str(fit_out)]) == 0
        rep = json.loads((fit_out / "fit.json").read_text())
        assert rep["tau_e"] == pytest.approx(1.0 / (2 * 0.002), rel=0.05)
        assert rep["tau_g"] == pytest.approx(300.0, rel=0.05)

    def test_mismatch_sweep_schema(self, tmp_path):
        cfgf = write(tmp_path / "m.yaml", """\
ensemble: {d: 100.0, delta_plus: 40.0}
sweep:
  kind: mismatch
  delta_k_values: [-0.75, 0.0, 0.75]
  nz: 81
  nt: 1024
""")
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfgf), "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out / "mismatch.csv")))
        assert [float(r["delta_k"]) for r in rows] == [-0.75, 0.0, 0.75]
        mid = rows[1]
        assert abs(float(mid["transmitted_offset"])) < 0.01


class TestFringePipeline:
    def test_fringe_sim_fit_round_trip(self, tmp_path):
        cfgf = write(tmp_path / "f.yaml", """\
seed: 42
ensemble: {d: 100.0, delta_plus: 40.0}
train: {delta_k: 0.8, n_pulses: 17, runs: 2, noise_sigma: 0.01,
        omega: 1.0, nz: 81, nt: 1024}
""")
        out = tmp_path / "out"
        assert main(["fringe-sim", "--config", str(cfgf), "--out",
                     str(out)]) == 0
        fit_out = tmp_path / "fit"
        assert main(["fit", "--data", str(out / "fringes.csv"),
                     "--model", "fringe", "--out", str(fit_out)]) == 0
        rep = json.loads((fit_out / "fit.json").read_text())
        for run in rep["runs"].values():
            assert abs(run["recalled_offset"]) < abs(run["transmitted_offset"])

    def test_malformed_csv_exit_2(self, tmp_path):
        bad = write(tmp_path / "bad.csv", "a,b\n1,2\n")
        assert main(["fit", "--data", str(bad), "--model", "decay",
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"),
                     "--model", "decay", "--out", str(tmp_path / "o")]) == 2


class TestDeterminism:
    def test_identical_seed_byte_identical(self, tmp_path):
        cfgf = write(tmp_path / "f.yaml", """\
seed: 7
ensemble: {d: 100.0, delta_plus: 40.0}
train: {delta_k: 0.4, n_pulses: 17, runs: 2, noise_sigma: 0.02,
        omega: 1.0, nz: 81, nt: 1024}
""")
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["fringe-sim", "--config", str(cfgf), "--out",
                         str(out)]) == 0
            outs.append((out / "fringes.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_simulate_byte_identical(self, tmp_path):
        cfgf = write(tmp_path / "run.yaml", MATCHED_D500)
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["simulate", "--config", str(cfgf), "--out",
                         str(out)]) == 0
            blobs.append((out / "envelopes.csv").read_bytes()
                         + (out / "summary.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestPhaseOffsetCommand:
    def test_report_contents(self, tmp_path):
        cfgf = write(tmp_path / "p.yaml", """\
ensemble: {rb87_d1: true, d: 500.0, detuning_hz: 230.0e6}
geometry: {lambda_probe: 795.0e-9, theta: 6.0e-3}
""")
        out = tmp_path / "out"
        assert main(["phase-offset", "--config", str(cfgf), "--out",
                     str(out)]) == 0
        rep = json.loads((out / "phase_offset.json").read_text())
        assert rep["offset_rad"] == pytest.approx(0.14, abs=0.03)
        assert rep["detuning_correction"]["corrected_offset_rad"] < 1e-3
        assert rep["spinwave_wavelength_m"] == pytest.approx(132e-6, abs=2e-6)


class TestShapeControlCommand:
    def test_gaussian_profile(self, tmp_path):
        cfgf = write(tmp_path / "s.yaml", """\
ensemble: {d: 500.0, delta_plus: 40.0}
grid: {nz: 201, nt: 4096, span: 8.0}
pulse: {kind: gaussian, amplitude: 1.0, center: 4.0, width: 1.0}
""")
        out = tmp_path / "out"
        assert main(["shape-control", "--config", str(cfgf), "--out",
                     str(out)]) == 0
        rep = json.loads((out / "shaping.json").read_text())
        assert rep["residual_output_fraction"] < 1e-2
        rows = list(csv.DictReader(open(out / "control.csv")))
        assert len(rows) == 4096
