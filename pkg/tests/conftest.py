import numpy as np
import pytest

import trace_sim as ts


@pytest.fixture(scope="session")
def matched_storage_d500():
    """Impedance-matched exponential storage at d=500 (shared: ~1 s)."""
    cfg = ts.EnsembleConfig(d=500.0, delta_plus=40.0)
    rate = cfg.d * cfg.gamma_e / cfg.delta_plus ** 2  # Omega = 1
    grid = ts.Grid.over(0.0, 8.0 / rate, 8192, nz=201)
    shape = ts.PulseShape.rising_exponential(1.0, rate, cutoff=grid.t_end)
    control = ts.ControlProfile.constant(grid, 1.0)
    result = ts.simulate_storage(cfg, grid, shape, control)
    return cfg, grid, shape, control, result


def matched_setup(d=100.0, delta=40.0, omega=1.0, nz=151, nt=4096,
                  gamma_s=0.0, efolds=8.0):
    cfg = ts.EnsembleConfig(d=d, delta_plus=delta, gamma_s=gamma_s)
    rate = d * cfg.gamma_e * (omega / delta) ** 2
    grid = ts.Grid.over(0.0, efolds / rate, nt, nz=nz)
    shape = ts.PulseShape.rising_exponential(1.0, rate, cutoff=grid.t_end)
    control = ts.ControlProfile.constant(grid, omega)
    return cfg, grid, shape, control


def retrieval_setup(cfg, omega=1.0, nz=151, nt=4096, efolds=8.0):
    rate = cfg.d * cfg.gamma_e * (omega / cfg.delta_plus) ** 2
    grid = ts.Grid.over(0.0, efolds / rate, nt, nz=nz)
    return grid, ts.ControlProfile.constant(grid, omega)
