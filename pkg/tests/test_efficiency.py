import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import trace_sim as ts
import trace_sim.three_level as tl
from trace_sim.efficiency import (
    EfficiencyCurve,
    cavity_efficiency,
    figure1b_dataset,
    freespace_raman_efficiency,
    trace_efficiency,
)


class TestClosedForms:
    def test_cavity_values(self):
        assert cavity_efficiency(100.0) == pytest.approx(0.98)
        assert cavity_efficiency(2.0) == 0.0
        assert cavity_efficiency(1e12) == pytest.approx(1.0, abs=1e-11)
        with pytest.raises(ValueError):
            cavity_efficiency(0.0)

    def test_trace_values(self):
        assert trace_efficiency(0.0) == 0.0
        assert trace_efficiency(500.0) == (500.0 / 502.0) ** 2
        assert trace_efficiency(100.0) == pytest.approx(0.96117, abs=1e-5)
        assert abs(trace_efficiency(100.0) - 0.96) < 1.2e-3
        with pytest.raises(ValueError):
            trace_efficiency(-1.0)

    def test_freespace_values(self):
        assert freespace_raman_efficiency(5.8) == 0.0
        assert freespace_raman_efficiency(100.0) == pytest.approx(0.942)
        assert freespace_raman_efficiency(1e12) == pytest.approx(1.0, abs=1e-11)
        with pytest.raises(ValueError):
            freespace_raman_efficiency(0.0)

    @given(d=st.floats(4.0, 1e6))
    @settings(max_examples=100, deadline=None)
    def test_trace_expansion_bound(self, d):
        # (d/(d+2))^2 - (1 - 4/d) = (12 d + 16)/(d (d+2)^2) in [0, 12/d^2];
        # the 5e-16 slack absorbs cancellation noise of the float subtraction
        gap = trace_efficiency(d) - (1.0 - 4.0 / d)
        assert -5e-16 <= gap <= 12.0 / d ** 2 + 5e-16


class TestDataset:
    def test_default_dataset_shapes_and_monotonicity(self):
        curves = figure1b_dataset()
        assert {c.scheme for c in curves} == {"cavity", "trace",
                                              "freespace-raman"}
        for c in curves:
            assert np.all(np.diff(c.efficiency) >= 0)
            assert np.all((c.efficiency >= 0) & (c.efficiency <= 1))

    def test_trace_curve_consistent_with_scalar(self):
        curves = {c.scheme: c for c in figure1b_dataset()}
        tr = curves["trace"]
        i = np.argmin(np.abs(tr.abscissa - 500.0))
        assert tr.efficiency[i] == pytest.approx(
            trace_efficiency(tr.abscissa[i]))

    def test_scheme_ordering_above_ten(self):
        curves = {c.scheme: c for c in figure1b_dataset()}
        mask = curves["trace"].abscissa >= 10.0
        cav = curves["cavity"].efficiency[mask]
        tr = curves["trace"].efficiency[mask]
        fs = curves["freespace-raman"].efficiency[mask]
        assert np.all(cav >= tr) and np.all(tr >= fs)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            figure1b_dataset(np.array([]))

    def test_decreasing_abscissa_rejected(self):
        with pytest.raises(ValueError):
            EfficiencyCurve("trace", [3.0, 2.0], [0.5, 0.6])


class TestAgainstFullModel:
    @pytest.mark.parametrize("d", [10.0, 50.0, 200.0])
    def test_simulated_efficiency_matches_closed_form(self, d):
        cfg = ts.EnsembleConfig(d=d, delta_plus=40.0)
        dur = tl.retrieval_duration(cfg, 1.0)
        grid = ts.Grid.over(0.0, dur, 2500, nz=2)
        gate = ts.ControlProfile.constant(grid, 1.0)
        res = tl.simulate_retrieval_full(cfg, grid, "uniform", gate,
                                         model="uniform")
        assert res.efficiency ** 2 == pytest.approx(trace_efficiency(d),
                                                    abs=0.02)
