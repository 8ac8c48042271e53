"""Acceptance suite: one test per criterion, each printing a PASS line with
the measured values after its assertions hold.  Run with ``pytest -s
tests/test_acceptance.py`` to see the per-criterion lines."""

import json
import time

import numpy as np
import pytest

import trace_sim as ts
import trace_sim.three_level as tl
from trace_sim import dispersion as dsp
from trace_sim import stats, sweeps
from trace_sim.cli import main
from trace_sim.efficiency import (
    cavity_efficiency,
    figure1b_dataset,
    freespace_raman_efficiency,
    trace_efficiency,
)
from conftest import matched_setup, retrieval_setup


def report(n, text):
    print(f"\nPASS criterion {n}: {text}")


def test_criterion_1_closed_form_curves():
    t0 = time.time()
    assert trace_efficiency(500.0) == (500.0 / 502.0) ** 2
    assert cavity_efficiency(100.0) == pytest.approx(0.98, abs=1e-12)
    assert freespace_raman_efficiency(100.0) == pytest.approx(0.942, abs=1e-12)
    curves = {c.scheme: c for c in figure1b_dataset()}
    mask = curves["trace"].abscissa >= 10.0
    assert np.all(curves["cavity"].efficiency[mask]
                  >= curves["trace"].efficiency[mask])
    assert np.all(curves["trace"].efficiency[mask]
                  >= curves["freespace-raman"].efficiency[mask])
    elapsed = time.time() - t0
    assert elapsed < 1.0
    report(1, f"closed-form curves and ordering ({elapsed:.2f} s < 1 s)")


def test_criterion_2_full_model_efficiency_limit():
    t0 = time.time()
    lines = []
    for d in (10.0, 50.0, 200.0):
        cfg = ts.EnsembleConfig(d=d, delta_plus=40.0)
        dur = tl.retrieval_duration(cfg, 1.0)   # slow gate: rate << Gamma
        grid = ts.Grid.over(0.0, dur, 2500, nz=161)
        gate = ts.ControlProfile.constant(grid, 1.0)
        res = tl.simulate_retrieval_full(cfg, grid, "uniform", gate,
                                         model="uniform")
        assert res.efficiency == pytest.approx(d / (d + 2.0), abs=0.02)
        loc = tl.simulate_retrieval_full(cfg, grid, "matched", gate,
                                         model="local")
        lines.append(f"d={d:.0f}: uniform {res.efficiency:.4f} "
                     f"(limit {d / (d + 2):.4f}), local {loc.efficiency:.4f}")
    run = ts.storage_retrieval_full(ts.EnsembleConfig(d=50.0, delta_plus=40.0),
                                    1.0, nz=121, model="uniform", n_t=2500)
    assert run.efficiency_total == pytest.approx((50.0 / 52.0) ** 2, abs=0.02)
    elapsed = time.time() - t0
    assert elapsed < 120.0
    report(2, "retrieval matches d/(d+2) within 2% and storage+retrieval "
              f"matches (50/52)^2={run.efficiency_total:.4f} "
              f"[{'; '.join(lines)}] ({elapsed:.1f} s < 120 s)")


def test_criterion_3_impedance_matching(matched_storage_d500):
    t0 = time.time()
    _, _, _, _, res = matched_storage_d500
    leak_exp = res.diagnostics["leakage_fraction"]
    assert leak_exp < 1e-3
    cfg = ts.EnsembleConfig(d=500.0, delta_plus=40.0)
    grid = ts.Grid.over(0.0, 8.0, 8192, nz=201)
    gauss = ts.PulseShape.gaussian(1.0, center=4.0, width=1.0)
    shaped = ts.shape_control(cfg, grid, gauss)
    assert shaped.residual_output_fraction < 1e-2
    elapsed = time.time() - t0
    assert elapsed < 30.0
    report(3, f"exponential leakage {leak_exp:.2e} < 1e-3, shaped gaussian "
              f"leakage {shaped.residual_output_fraction:.2e} < 1e-2 "
              f"({elapsed:.1f} s < 30 s)")


def test_criterion_4_uniform_driving(matched_storage_d500):
    t0 = time.time()
    cfg, grid, shape, ctrl, res = matched_storage_d500
    matched = ts.uniformity_metric(res.spinwave_final)
    assert matched < 1e-6
    cfg2, grid2, shape2, ctrl2 = matched_setup(d=500.0, nz=101, nt=2048)
    res2 = ts.simulate_storage(cfg2, grid2, shape2, ctrl2,
                               ts.MismatchSpec(delta_k=2.0 * np.pi))
    mismatched = ts.uniformity_metric(res2.spinwave_final)
    assert mismatched >= 0.5
    elapsed = time.time() - t0
    assert elapsed < 30.0
    report(4, f"uniformity {matched:.1e} < 1e-6 matched, {mismatched:.2f} "
              f">= 0.5 at delta_k=2pi ({elapsed:.1f} s < 30 s)")


def test_criterion_5_energy_conservation(matched_storage_d500):
    cfg, _, _, _, sto = matched_storage_d500
    rgrid, rctrl = retrieval_setup(cfg, nz=201, nt=8192, efolds=9.0)
    ret = ts.simulate_retrieval(cfg, rgrid, sto.spinwave_final, rctrl)
    residual = ret.diagnostics["residual_fraction"] * ret.energy_in
    balance = abs(sto.energy_transmitted + ret.energy_recalled + residual
                  - sto.energy_in) / sto.energy_in
    assert balance < 1e-4
    cfg3 = ts.EnsembleConfig(d=50.0, delta_plus=40.0)
    dur = tl.retrieval_duration(cfg3, 1.0)
    grid3 = ts.Grid.over(0.0, dur, 2500, nz=161)
    res3 = tl.simulate_retrieval_full(cfg3, grid3, "matched",
                                      ts.ControlProfile.constant(grid3, 1.0),
                                      model="local")
    ledger = res3.diagnostics["ledger_error"]
    assert ledger < 1e-3
    report(5, f"adiabatic balance {balance:.2e} < 1e-4, three-level ledger "
              f"{ledger:.2e} < 1e-3")


def test_criterion_6_phase_offset():
    t0 = time.time()
    cfg = dsp.rb87_d1_ensemble(500.0, 230e6)
    offset = dsp.dispersion_phase_offset(cfg)
    assert offset == pytest.approx(0.14, abs=0.03)
    _, _, corrected = dsp.detuning_correction(cfg)
    assert corrected < 1e-3
    elapsed = time.time() - t0
    assert elapsed < 1.0
    report(6, f"dispersion offset {offset:.4f} rad (0.14 +/- 0.03), "
              f"corrected to {corrected:.1e} rad ({elapsed:.2f} s < 1 s)")


def test_criterion_7_geometry():
    t0 = time.time()
    lam_angle = dsp.spinwave_wavelength(
        dsp.GeometryConfig(lambda_probe=795e-9, theta=6e-3))
    assert lam_angle == pytest.approx(132e-6, abs=2e-6)
    lam_co = dsp.spinwave_wavelength(
        dsp.GeometryConfig(theta=0.0, hyperfine_splitting=6.83e9))
    assert lam_co == pytest.approx(4.4e-2, abs=1e-3)
    elapsed = time.time() - t0
    assert elapsed < 1.0
    report(7, f"spinwave wavelengths {lam_angle * 1e6:.1f} um and "
              f"{lam_co * 100:.2f} cm ({elapsed:.2f} s < 1 s)")


def test_criterion_8_statistics_round_trips():
    t0 = time.time()
    # decay fit round-trip at the reference parameters, 17 points, 2% noise
    rng = np.random.default_rng(3)
    tpts = np.linspace(0.0, 400e-6, 17)
    y = stats.decay_model(tpts, 0.72, 250e-6, 180e-6)
    curve = stats.DecayCurve(tpts, np.clip(
        y * (1 + 0.02 * rng.standard_normal(17)), 1e-9, 1.0))
    fit = stats.fit_decay(curve, sigma=0.02 * y)
    assert fit.eta0 == pytest.approx(0.72, rel=0.05)
    assert fit.tau_e == pytest.approx(250e-6, rel=0.05)
    assert fit.tau_g == pytest.approx(180e-6, rel=0.05)

    # efficiency estimator round-trip anchored to the 72% reference
    model = stats.InterferenceModel(a=0.36, b=0.36, noise_sigma=0.05)
    x = stats.simulate_interference_ensemble(model, 2000, seed=11)
    est = stats.estimate_efficiency(x, seed=5)
    assert est.ci_low <= 0.72 <= est.ci_high

    # fringe ordering on a mismatched synthetic run
    cfg = ts.EnsembleConfig(d=100.0, delta_plus=40.0)
    ds = sweeps.fringe_train(cfg, delta_k=0.8, n_pulses=17, noise_sigma=0.02,
                             seed=7, nz=101, nt=2048)[0]
    ff = stats.fit_fringe(ds)
    t_off = abs(stats._wrap_pi(ff.phase["backward_transmitted"]
                               - ff.phase["forward_transmitted"]))
    r_off = abs(stats._wrap_pi(ff.phase["backward_recalled"]
                               - ff.phase["forward_recalled"]))
    assert r_off < t_off
    elapsed = time.time() - t0
    assert elapsed < 120.0
    report(8, f"decay fit ({fit.eta0:.3f}, {fit.tau_e * 1e6:.0f} us, "
              f"{fit.tau_g * 1e6:.0f} us), a+b={est.efficiency:.3f} "
              f"CI [{est.ci_low:.3f}, {est.ci_high:.3f}] covers 0.72, "
              f"fringe offsets recalled {r_off:.2f} < transmitted {t_off:.2f} "
              f"({elapsed:.1f} s < 120 s)")


def test_criterion_9_determinism(tmp_path):
    cfgf = tmp_path / "train.yaml"
    cfgf.write_text("""\
seed: 7
ensemble: {d: 100.0, delta_plus: 40.0}
train: {delta_k: 0.4, n_pulses: 17, runs: 2, noise_sigma: 0.02,
        omega: 1.0, nz: 81, nt: 1024}
""", encoding="utf-8")
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["fringe-sim", "--config", str(cfgf), "--out",
                     str(out)]) == 0
        blobs.append((out / "fringes.csv").read_bytes())
    assert blobs[0] == blobs[1]

    simf = tmp_path / "sim.yaml"
    simf.write_text("""\
seed: 3
ensemble: {d: 100.0, delta_plus: 40.0}
grid: {nz: 101, nt: 2048, span: 128.0}
pulse: {kind: rising_exponential, rate: 0.0625, cutoff: 128.0}
control: {kind: constant, amplitude: 1.0}
protocol: {mode: storage, model: adiabatic}
""", encoding="utf-8")
    sums = []
    for tag in ("c", "d"):
        out = tmp_path / tag
        assert main(["simulate", "--config", str(simf), "--out",
                     str(out)]) == 0
        sums.append((out / "envelopes.csv").read_bytes()
                    + (out / "summary.json").read_bytes())
    assert sums[0] == sums[1]
    report(9, "identical (config, seed) reruns are byte-identical")
