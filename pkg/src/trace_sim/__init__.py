"""Simulator and analysis toolkit for a two-sided (counter-propagating,
coherently-enhanced) Raman quantum memory: adiabatic and full three-level
solvers, inverse control shaping, efficiency limits, phase-matching and
dispersion analysis, and the statistical estimators used on fringe, decay
and pulse-energy data."""

from .model import (
    ConfigError,
    ControlProfile,
    EnsembleConfig,
    FieldState,
    FitError,
    Grid,
    MismatchSpec,
    PulseShape,
    SimulationError,
    SimulationResult,
    input_energy,
    validate_config,
)
from .adiabatic import (
    hold_decay,
    run_storage_retrieval,
    simulate_retrieval,
    simulate_storage,
    uniformity_metric,
)
from .three_level import (
    adiabatic_residual,
    matched_spinwave,
    retrieval_duration,
    simulate_retrieval_full,
    simulate_storage_full,
    storage_retrieval_full,
)
from .shaping import ShapingResult, output_prediction, recall_schedule, shape_control
from .efficiency import (
    EfficiencyCurve,
    cavity_efficiency,
    figure1b_dataset,
    freespace_raman_efficiency,
    trace_efficiency,
)
from .dispersion import (
    GeometryConfig,
    PhysicalConstants,
    detuning_correction,
    dispersion_phase_offset,
    gaussian_tau_from_temperature,
    mismatch_fringe_sweep,
    rb87_d1_ensemble,
    spinwave_wavelength,
    temperature_from_gaussian_tau,
)
from .stats import (
    DecayCurve,
    DecayFit,
    EfficiencyEstimate,
    FringeDataset,
    FringeFit,
    InterferenceModel,
    estimate_efficiency,
    fit_decay,
    fit_fringe,
    simulate_interference_ensemble,
    visibility,
)

__version__ = "0.1.0"
