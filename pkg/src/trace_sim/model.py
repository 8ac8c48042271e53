"""Shared domain types, unit conventions, grids and validation.

Conventions used throughout the package:

* Time is measured in units of 1/Gamma and rates in units of Gamma, where
  Gamma is half the natural linewidth of the probe transition.  Internally
  ``gamma_e`` defaults to 1 so that all solver quantities are dimensionless.
  SI units appear only in the dispersion/geometry module.
* Optical envelopes are *per-port* amplitudes: the forward probe enters at
  z=0, the backward probe at z=1, and a pulse shape describes the envelope
  on each port separately.  The symmetric-drive convention where the total
  input is split as E_in/2 per port is recovered by halving the amplitude.
* Optical energy is ``integral |E|^2 dt`` summed over ports; spinwave energy
  is ``integral |S|^2 dz``.  In the scaled units these match, so a lossless
  storage run satisfies  input = transmitted + stored.
* Time and space integrals use the trapezoidal rule on uniform grids.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "SimulationError",
    "FitError",
    "EnsembleConfig",
    "Grid",
    "FieldState",
    "PulseShape",
    "ControlProfile",
    "MismatchSpec",
    "SimulationResult",
    "ValidationReport",
    "validate_config",
    "input_energy",
    "trapz_time",
    "trapz_z",
]


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class SimulationError(RuntimeError):
    """Solver failure: non-finite state, unresolvable time step, ... (exit 3)."""


class FitError(RuntimeError):
    """Statistical fit failure (maps to CLI exit code 4)."""


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleConfig:
    """Physical parameters of the atomic ensemble and probe detunings.

    ``delta_plus`` / ``delta_minus`` are the single-photon detunings of the
    forward / backward probes from the reference excited level, in units of
    ``gamma_e``.  ``delta_minus=None`` selects the symmetric configuration
    ``delta_minus = -delta_plus`` (probes detuned above and below the line).
    ``excited_levels`` lists ``(detuning offset, relative strength)`` pairs
    for the excited-state structure used by the dispersion calculations; the
    reference level is ``(0.0, 1.0)``.
    """

    d: float
    gamma_e: float = 1.0
    gamma_s: float = 0.0
    delta_plus: float = 40.0
    delta_minus: float | None = None
    excited_levels: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.delta_minus is None:
            object.__setattr__(self, "delta_minus", -self.delta_plus)
        object.__setattr__(self, "excited_levels",
                           tuple((float(o), float(s)) for o, s in self.excited_levels))


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid: z in [0, 1] with nz samples, nt time samples."""

    nz: int
    nt: int
    dt: float
    t0: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nz)

    @property
    def dz(self) -> float:
        return 1.0 / (self.nz - 1)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.nt - 1)

    @property
    def span(self) -> float:
        return self.dt * (self.nt - 1)

    @classmethod
    def over(cls, t0: float, t1: float, nt: int, nz: int = 201) -> "Grid":
        """Grid covering [t0, t1] inclusive."""
        if nt < 2 or t1 <= t0:
            raise ConfigError("grid needs nt >= 2 and t1 > t0")
        return cls(nz=nz, nt=nt, dt=(t1 - t0) / (nt - 1), t0=t0)


@dataclass
class FieldState:
    """Discretized complex amplitudes on the z grid.

    ``p_plus``/``p_minus`` hold the excited-state coherences and are
    zero-length except in the full three-level model.
    """

    e_plus: np.ndarray
    e_minus: np.ndarray
    s: np.ndarray
    p_plus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    p_minus: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        nz = len(self.s)
        for name in ("e_plus", "e_minus"):
            if len(getattr(self, name)) != nz:
                raise ValueError(f"{name} length does not match spinwave grid")
        for name in ("p_plus", "p_minus"):
            arr = getattr(self, name)
            if len(arr) not in (0, nz):
                raise ValueError(f"{name} length does not match spinwave grid")

    def require_finite(self) -> None:
        for name in ("e_plus", "e_minus", "s", "p_plus", "p_minus"):
            arr = getattr(self, name)
            if arr.size and not np.all(np.isfinite(arr)):
                raise SimulationError(f"non-finite values in {name} (step too large?)")


# --------------------------------------------------------------------------
# pulses and controls
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PulseShape:
    """Per-port input envelope with a global phase on the forward copy.

    kinds:
      rising_exponential  amplitude * exp(rate * (t - cutoff)) for t <= cutoff
      gaussian            amplitude * exp(-(t - center)^2 / (2 width^2))
      samples             explicit complex time series on the run grid
    """

    kind: str
    amplitude: float = 1.0
    rate: float = 1.0
    cutoff: float = 0.0
    center: float = 0.0
    width: float = 1.0
    values: tuple = ()
    phase: float = 0.0

    @classmethod
    def rising_exponential(cls, amplitude: float, rate: float, cutoff: float,
                           phase: float = 0.0) -> "PulseShape":
        if rate <= 0:
            raise ConfigError("rising exponential requires rate > 0")
        if not math.isfinite(cutoff):
            raise ConfigError("rising exponential requires a finite cutoff")
        return cls(kind="rising_exponential", amplitude=amplitude, rate=rate,
                   cutoff=cutoff, phase=phase)

    @classmethod
    def gaussian(cls, amplitude: float, center: float, width: float,
                 phase: float = 0.0) -> "PulseShape":
        if width <= 0:
            raise ConfigError("gaussian width must be > 0")
        return cls(kind="gaussian", amplitude=amplitude, center=center,
                   width=width, phase=phase)

    @classmethod
    def from_samples(cls, values: Sequence[complex], phase: float = 0.0) -> "PulseShape":
        return cls(kind="samples", values=tuple(complex(v) for v in values), phase=phase)

    def sample_at(self, t: np.ndarray, grid: Grid | None = None) -> np.ndarray:
        """Envelope values at arbitrary times (without the forward phase)."""
        t = np.asarray(t, float)
        if self.kind == "rising_exponential":
            out = np.where(t <= self.cutoff,
                           self.amplitude * np.exp(self.rate * (t - self.cutoff)), 0.0)
            return out.astype(complex)
        if self.kind == "gaussian":
            arg = (t - self.center) / self.width
            return (self.amplitude * np.exp(-0.5 * arg * arg)).astype(complex)
        if self.kind == "samples":
            if grid is None:
                raise ConfigError("sampled pulse shapes need the run grid")
            vals = np.asarray(self.values, complex)
            if len(vals) != grid.nt:
                raise ConfigError("sampled pulse length does not match grid nt")
            re = np.interp(t, grid.t, vals.real)
            im = np.interp(t, grid.t, vals.imag)
            return re + 1j * im
        raise ConfigError(f"unknown pulse kind {self.kind!r}")

    def sample(self, grid: Grid) -> np.ndarray:
        vals = self.sample_at(grid.t, grid)
        if not np.all(np.isfinite(vals)):
            raise SimulationError("non-finite pulse samples")
        return vals


@dataclass(frozen=True)
class ControlProfile:
    """Time-sampled complex Rabi frequency with on/off gating windows.

    The profile carries its own grid; ``omega`` has ``grid.nt`` samples and
    is identically zero outside every ``(t_on, t_off)`` window.
    """

    grid: Grid
    omega: np.ndarray
    schedule: tuple[tuple[float, float], ...]

    def __post_init__(self):
        om = np.asarray(self.omega, complex)
        if len(om) != self.grid.nt:
            raise ConfigError("control sample count does not match grid nt")
        mask = self._window_mask(self.grid.t)
        object.__setattr__(self, "omega", np.where(mask, om, 0.0))
        object.__setattr__(self, "schedule",
                           tuple((float(a), float(b)) for a, b in self.schedule))

    def _window_mask(self, t: np.ndarray) -> np.ndarray:
        eps = 1e-12 * max(1.0, abs(self.grid.dt))
        mask = np.zeros(len(t), bool)
        for a, b in self.schedule:
            mask |= (t >= a - eps) & (t <= b + eps)
        return mask

    @classmethod
    def constant(cls, grid: Grid, amplitude: complex,
                 window: tuple[float, float] | None = None) -> "ControlProfile":
        window = window or (grid.t0, grid.t_end)
        return cls(grid=grid, omega=np.full(grid.nt, complex(amplitude)),
                   schedule=(window,))

    @classmethod
    def from_samples(cls, grid: Grid, omega: Sequence[complex],
                     schedule: Sequence[tuple[float, float]] | None = None) -> "ControlProfile":
        schedule = tuple(schedule) if schedule else ((grid.t0, grid.t_end),)
        return cls(grid=grid, omega=np.asarray(omega, complex), schedule=schedule)

    def at(self, t: np.ndarray) -> np.ndarray:
        """Linear interpolation of the sampled profile, zero outside windows."""
        t = np.asarray(t, float)
        re = np.interp(t, self.grid.t, self.omega.real)
        im = np.interp(t, self.grid.t, self.omega.imag)
        return np.where(self._window_mask(t), re + 1j * im, 0.0)

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.omega))) if len(self.omega) else 0.0

    def is_constant_gate(self, rel_tol: float = 1e-12) -> bool:
        """True when the in-window samples all share one complex value."""
        on = self.omega[np.abs(self.omega) > 0]
        if len(on) == 0:
            return True
        return bool(np.max(np.abs(on - on[0])) <= rel_tol * max(1.0, abs(on[0])))


@dataclass(frozen=True)
class MismatchSpec:
    """Residual spinwave wavevector mismatch and global pair phase.

    ``delta_k`` is the total phase (radians) accumulated by the backward
    pair's coupling across the memory; the forward pair defines the
    reference frame.  ``global_phase`` is the relative phase between the two
    control-probe pairs, carried by the forward input.
    """

    delta_k: float = 0.0
    global_phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.delta_k):
            raise ConfigError("delta_k must be finite")
        object.__setattr__(self, "global_phase",
                           float(np.mod(self.global_phase, 2.0 * np.pi)))


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class SimulationResult:
    """Envelopes, energies and efficiency for one storage or retrieval run."""

    t: np.ndarray
    e_out_plus: np.ndarray
    e_out_minus: np.ndarray
    energy_in: float
    energy_transmitted: float
    energy_recalled: float
    efficiency: float
    spinwave_final: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        eps = 1e-6
        if not (-eps <= self.efficiency <= 1.0 + eps):
            raise SimulationError(
                f"efficiency {self.efficiency} outside [0, 1] beyond numerical tolerance")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def trapz_time(y: np.ndarray, dt: float) -> float:
    return float(np.trapezoid(y, dx=dt))


def trapz_z(y: np.ndarray, dz: float) -> float:
    return float(np.trapezoid(y, dx=dz))


def validate_config(config: EnsembleConfig, grid: Grid,
                    control: ControlProfile | None = None) -> ValidationReport:
    """Report hard violations and physics warnings; never raises."""
    rep = ValidationReport()
    if config.d < 0:
        rep.violations.append("optical depth negative")
    if config.gamma_e <= 0:
        rep.violations.append("gamma_e must be > 0")
    if config.gamma_s < 0:
        rep.violations.append("gamma_s must be >= 0")
    for off, strength in config.excited_levels:
        if strength < 0:
            rep.violations.append(f"negative line strength {strength}")
    if grid.nz < 2:
        rep.violations.append("grid nz must be >= 2")
    if grid.nt < 2:
        rep.violations.append("grid nt must be >= 2")
    if grid.dt <= 0:
        rep.violations.append("grid dt must be > 0")

    for name, delta in (("delta_plus", config.delta_plus),
                        ("delta_minus", config.delta_minus)):
        if abs(delta) < 10.0 * config.gamma_e:
            rep.warnings.append(
                f"adiabatic model untrusted: |{name}|/gamma_e = "
                f"{abs(delta) / config.gamma_e:.2f} < 10")
    if control is not None and grid.dt > 0 and abs(config.delta_plus) > 0:
        om = control.max_amplitude()
        cfl = grid.dt * config.d * config.gamma_e * (om / config.delta_plus) ** 2
        if cfl > 0.1:
            rep.warnings.append(
                f"time step coarse for the two-photon rate: dt*d*gamma_e*(Omega/Delta)^2 "
                f"= {cfl:.3f} > 0.1")
    return rep


def require_valid(config: EnsembleConfig, grid: Grid) -> None:
    rep = validate_config(config, grid)
    if not rep.ok:
        raise ConfigError("; ".join(rep.violations))


def input_energy(shape: PulseShape, grid: Grid) -> float:
    """Total input energy on both ports: integral (|E+(0,t)|^2 + |E-(1,t)|^2) dt."""
    env = shape.sample(grid)
    return trapz_time(2.0 * np.abs(env) ** 2, grid.dt)
