import numpy as np
import pytest

import trace_sim as ts
from conftest import matched_setup, retrieval_setup


class TestStorage:
    def test_no_control_is_transparent(self):
        cfg, grid, shape, _ = matched_setup(d=100.0, nz=101, nt=2048)
        off = ts.ControlProfile.from_samples(grid, np.zeros(grid.nt))
        res = ts.simulate_storage(cfg, grid, shape, off)
        assert res.energy_transmitted == pytest.approx(res.energy_in, rel=1e-9)
        assert np.all(res.spinwave_final == 0)

    def test_matched_exponential_absorbs(self, matched_storage_d500):
        _, _, _, _, res = matched_storage_d500
        assert res.diagnostics["leakage_fraction"] < 1e-3

    def test_matched_leakage_grid_converged(self):
        # halving the resolution must not move the leakage materially
        leaks = []
        for nz, nt in ((101, 2048), (201, 4096)):
            cfg, grid, shape, ctrl = matched_setup(d=500.0, nz=nz, nt=nt)
            res = ts.simulate_storage(cfg, grid, shape, ctrl)
            leaks.append(res.diagnostics["leakage_fraction"])
        assert all(l < 1e-3 for l in leaks)

    def test_destructive_phase_stores_nothing(self):
        cfg, grid, shape, ctrl = matched_setup(d=500.0, nz=101, nt=2048)
        res = ts.simulate_storage(cfg, grid, shape, ctrl,
                                  ts.MismatchSpec(global_phase=np.pi))
        assert res.diagnostics["stored_fraction"] < 1e-6
        assert res.energy_transmitted == pytest.approx(res.energy_in, rel=1e-6)

    def test_energy_conservation(self, matched_storage_d500):
        _, _, _, _, res = matched_storage_d500
        assert res.diagnostics["energy_balance_error"] < 1e-4

    def test_resolution_doubling_converged(self):
        stored = []
        for nz, nt in ((101, 4096), (201, 8192)):
            cfg, grid, shape, ctrl = matched_setup(d=100.0, nz=nz, nt=nt)
            res = ts.simulate_storage(cfg, grid, shape, ctrl)
            stored.append(res.diagnostics["stored_fraction"])
        assert abs(stored[1] - stored[0]) < 1e-4


class TestUniformity:
    def test_constant_spinwave_is_uniform(self):
        assert ts.uniformity_metric(np.full(51, 0.3 + 0.1j)) == 0.0

    def test_matched_storage_is_uniform(self, matched_storage_d500):
        _, _, _, _, res = matched_storage_d500
        assert ts.uniformity_metric(res.spinwave_final) < 1e-6

    def test_mismatch_breaks_uniformity(self):
        cfg, grid, shape, ctrl = matched_setup(d=500.0, nz=101, nt=2048)
        res = ts.simulate_storage(cfg, grid, shape, ctrl,
                                  ts.MismatchSpec(delta_k=2.0 * np.pi))
        assert ts.uniformity_metric(res.spinwave_final) >= 0.5

    def test_zero_spinwave_rejected(self):
        with pytest.raises(ValueError):
            ts.uniformity_metric(np.zeros(11, complex))


class TestRetrieval:
    def test_complete_retrieval_is_lossless(self):
        cfg = ts.EnsembleConfig(d=100.0, delta_plus=40.0)
        grid, ctrl = retrieval_setup(cfg, nz=151, nt=8192, efolds=9.0)
        res = ts.simulate_retrieval(cfg, grid, np.ones(151, complex), ctrl)
        assert res.efficiency == pytest.approx(1.0, abs=1e-4)

    def test_no_control_no_recall(self):
        cfg = ts.EnsembleConfig(d=100.0, delta_plus=40.0, gamma_s=0.01)
        grid = ts.Grid.over(0.0, 10.0, 512, nz=51)
        off = ts.ControlProfile.from_samples(grid, np.zeros(512))
        s0 = np.ones(51, complex)
        res = ts.simulate_retrieval(cfg, grid, s0, off)
        assert res.energy_recalled == 0.0
        # spinwave only decays through gamma_s
        expected = np.exp(-2.0 * 0.01 * grid.span)
        assert res.diagnostics["residual_fraction"] == pytest.approx(expected,
                                                                     rel=1e-3)

    def test_recall_mirrors_stored_exponential(self, matched_storage_d500):
        cfg, sgrid, shape, ctrl, sto = matched_storage_d500
        grid, rctrl = retrieval_setup(cfg, nz=201, nt=8192)
        ret = ts.simulate_retrieval(cfg, grid, sto.spinwave_final, rctrl)
        mirror = np.abs(shape.sample(sgrid))[::-1]
        mirror = np.interp(grid.t - grid.t0, sgrid.t - sgrid.t0, mirror)
        env = np.abs(ret.e_out_plus)
        xcorr = abs(np.vdot(mirror, env)) / (np.linalg.norm(mirror)
                                             * np.linalg.norm(env))
        assert xcorr > 0.999

    def test_storage_plus_recall_balances(self, matched_storage_d500):
        cfg, _, _, _, sto = matched_storage_d500
        grid, rctrl = retrieval_setup(cfg, nz=201, nt=8192, efolds=9.0)
        ret = ts.simulate_retrieval(cfg, grid, sto.spinwave_final, rctrl)
        total = (sto.energy_transmitted + ret.energy_recalled
                 + ret.diagnostics["residual_fraction"] * ret.energy_in)
        assert total == pytest.approx(sto.energy_in, rel=1e-4)


class TestInterference:
    def test_global_phase_fringe_visibility(self):
        cfg, grid, shape, ctrl = matched_setup(d=100.0, nz=101, nt=2048)
        thetas = np.linspace(0.0, 2.0 * np.pi, 9, endpoint=False)
        stored = []
        for th in thetas:
            res = ts.simulate_storage(cfg, grid, shape, ctrl,
                                      ts.MismatchSpec(global_phase=th))
            stored.append(res.diagnostics["stored_fraction"])
        stored = np.asarray(stored)
        design = np.column_stack([np.ones_like(thetas), np.cos(thetas)])
        (a, b), *_ = np.linalg.lstsq(design, stored, rcond=None)
        assert b / a > 0.999
        resid = stored - design @ [a, b]
        assert np.max(np.abs(resid)) < 1e-6 * a


class TestProtocol:
    def test_hold_decay_combines_channels(self):
        s = np.ones(5, complex)
        out = ts.hold_decay(s, hold=2.0, gamma_s=0.1, tau_g=4.0)
        expected = np.exp(-0.2) * np.exp(-0.5 * (2.0 / 4.0) ** 2)
        assert np.allclose(out, expected)

    def test_run_storage_retrieval_efficiency(self):
        cfg, grid, shape, ctrl = matched_setup(d=200.0, nz=101, nt=2048)
        rgrid, rctrl = retrieval_setup(cfg, nz=101, nt=2048)
        run = ts.run_storage_retrieval(cfg, grid, shape, ctrl, rgrid, rctrl)
        assert 0.99 < run.efficiency <= 1.0 + 1e-6
