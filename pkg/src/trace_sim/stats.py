"""Statistical analyses: phase-fringe fitting, the lambda*(a + b sin theta)
output-energy distribution and efficiency estimator, visibility, and the
Gaussian-times-exponential decay fit.

All stochastic operations are deterministic under a fixed seed; bootstrap
resamples derive per-resample generators from the master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit, minimize

from .model import FitError

__all__ = [
    "DecayCurve",
    "DecayFit",
    "FringeDataset",
    "FringeFit",
    "InterferenceModel",
    "EfficiencyEstimate",
    "VisibilityResult",
    "fit_decay",
    "fit_fringe",
    "simulate_interference_ensemble",
    "estimate_efficiency",
    "visibility",
    "windowed_energies",
]


# --------------------------------------------------------------------------
# decay fitting
# --------------------------------------------------------------------------

@dataclass
class DecayCurve:
    t: np.ndarray
    efficiency: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        self.efficiency = np.asarray(self.efficiency, float)
        if len(self.t) != len(self.efficiency):
            raise ValueError("t and efficiency lengths differ")


@dataclass
class DecayFit:
    eta0: float
    tau_e: float
    tau_g: float
    covariance: np.ndarray


def decay_model(t, eta0, tau_e, tau_g):
    return eta0 * np.exp(-t / tau_e - (t / tau_g) ** 2)


def fit_decay(curve, sigma=None) -> DecayFit:
    """Nonlinear least squares of eta0 exp(-t/tau_e - (t/tau_g)^2).

    Initial guesses: eta0 from the first point; the 1/e crossing time split
    evenly between the two mechanisms (tau_e = 2 t*, tau_g = sqrt(2) t*).
    ``sigma`` optionally weights the residuals (per-point uncertainties).
    """
    if isinstance(curve, DecayCurve):
        t, eta = curve.t, curve.efficiency
    else:
        t, eta = (np.asarray(v, float) for v in zip(*curve))
    if len(t) < 4:
        raise FitError("insufficient data: decay fit needs >= 4 points")
    if np.any(t < 0) or np.any(eta <= 0) or np.any(eta > 1.0 + 1e-9):
        raise FitError("decay curve needs t >= 0 and efficiency in (0, 1]")
    if np.ptp(eta) == 0:
        raise FitError("degenerate decay data: all efficiencies equal")

    eta0_guess = float(eta[np.argmin(t)])
    below = t[eta < eta0_guess / math.e]
    t_star = float(below.min()) if len(below) else float(t.max())
    p0 = [eta0_guess, 2.0 * t_star, math.sqrt(2.0) * t_star]
    try:
        popt, pcov = curve_fit(decay_model, t, eta, p0=p0, sigma=sigma,
                               bounds=([0.0, 1e-12, 1e-12], [1.5, np.inf, np.inf]),
                               maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"decay fit did not converge: {exc}") from exc
    return DecayFit(eta0=float(popt[0]), tau_e=float(popt[1]),
                    tau_g=float(popt[2]), covariance=pcov)


# --------------------------------------------------------------------------
# fringe fitting
# --------------------------------------------------------------------------

@dataclass
class FringeDataset:
    """Pulse-train energies versus imposed phase, one stable unknown global
    phase per run."""

    pulse_index: np.ndarray
    imposed_phase: np.ndarray
    energies: dict[str, np.ndarray]
    run_id: str = "run0"

    def __post_init__(self):
        self.pulse_index = np.asarray(self.pulse_index, int)
        self.imposed_phase = np.asarray(self.imposed_phase, float)
        self.energies = {k: np.asarray(v, float) for k, v in self.energies.items()}
        n = len(self.imposed_phase)
        if np.any(np.diff(self.imposed_phase) < 0):
            raise ValueError("imposed phase must be monotone within a run")
        for name, e in self.energies.items():
            if len(e) != n:
                raise ValueError(f"channel {name} length mismatch")
            if np.any(e < 0):
                raise ValueError(f"negative energies in channel {name}")


@dataclass
class FringeFit:
    """Per-channel sinusoid  energy = offset + amplitude cos(phase_imposed +
    phase) with phase differences referenced to the forward transmitted
    channel."""

    amplitude: dict[str, float]
    offset: dict[str, float]
    phase: dict[str, float]
    phase_differences: dict[str, float]
    visibility: dict[str, float]
    reference: str = "forward_transmitted"


def _wrap_pi(x: float) -> float:
    return float(math.remainder(x, 2.0 * math.pi))


def fit_fringe(dataset: FringeDataset,
               reference: str = "forward_transmitted") -> FringeFit:
    """Linear least-squares sinusoid (known imposed phases) per channel."""
    phi = dataset.imposed_phase
    span = float(phi.max() - phi.min()) if len(phi) else 0.0
    if span < 4.0 * np.pi - 1e-9:
        raise FitError("insufficient phase coverage: need two full fringes")
    design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    amplitude, offset, phase = {}, {}, {}
    for name, e in dataset.energies.items():
        coef, *_ = np.linalg.lstsq(design, e, rcond=None)
        off, c, s = (float(v) for v in coef)
        amp = math.hypot(c, s)
        scale = max(abs(off), float(np.max(np.abs(e))), 1e-300)
        if amp <= 1e-9 * scale:
            raise FitError(f"zero-amplitude channel {name}")
        offset[name] = off
        amplitude[name] = amp
        # offset + c cos + s sin = offset + amp cos(phi + p), p = atan2(-s, c)
        phase[name] = math.atan2(-s, c)
    if reference not in phase:
        raise FitError(f"reference channel {reference} missing")
    diffs = {name: _wrap_pi(phase[name] - phase[reference])
             for name in phase}
    vis = {name: min(1.0, amplitude[name] / offset[name]) if offset[name] > 0
           else 0.0 for name in phase}
    return FringeFit(amplitude=amplitude, offset=offset, phase=phase,
                     phase_differences=diffs, visibility=vis,
                     reference=reference)


# --------------------------------------------------------------------------
# interference-energy distribution
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InterferenceModel:
    """Output pulse energy lambda (a + b sin theta): theta uniform on
    [0, 2 pi), lambda Gaussian with mean 1 and relative width noise_sigma."""

    a: float
    b: float
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b >= 0.0):
            raise ValueError("requires a >= b >= 0 (nonnegative energies)")
        if self.a + self.b > 1.0 + 1e-9:
            raise ValueError("efficiency a + b cannot exceed 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def simulate_interference_ensemble(model: InterferenceModel, n: int,
                                   seed: int = 0) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    lam = rng.normal(1.0, model.noise_sigma, n) if model.noise_sigma > 0 \
        else np.ones(n)
    return lam * (model.a + model.b * np.sin(theta))


@dataclass
class EfficiencyEstimate:
    a: float
    b: float
    noise_sigma: float
    efficiency: float
    ci_low: float
    ci_high: float
    n_bootstrap: int


_THETA_NODES = 384


def _per_sample_logdens(params, x, theta, floor):
    a, b, sig = params
    m = a + b * np.sin(theta)                      # (k,)
    var = (sig * m) ** 2 + floor ** 2              # variance floor for b ~ a
    dx = x[:, None] - m[None, :]
    logp = -0.5 * dx * dx / var[None, :] - 0.5 * np.log(2.0 * np.pi * var)[None, :]
    mx = logp.max(axis=1)
    return np.log(np.mean(np.exp(logp - mx[:, None]), axis=1)) + mx


def _neg_log_likelihood(params, x, theta, floor):
    return -float(np.sum(_per_sample_logdens(params, x, theta, floor)))


def _fit_ml(x: np.ndarray, p0, floor: float):
    theta = (np.arange(_THETA_NODES) + 0.5) * (2.0 * np.pi / _THETA_NODES)
    res = minimize(_neg_log_likelihood, p0, args=(x, theta, floor),
                   method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-6, "maxfev": 4000})
    # polish from the first answer; Nelder-Mead can stall on narrow valleys
    res = minimize(_neg_log_likelihood, res.x, args=(x, theta, floor),
                   method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-6, "maxfev": 2000})
    a, b, sig = res.x
    return (abs(a), abs(b), abs(sig)), bool(res.success)


def estimate_efficiency(samples, seed: int = 0,
                        n_bootstrap: int = 1000) -> EfficiencyEstimate:
    """Maximum-likelihood fit of the lambda (a + b sin theta) distribution
    (theta marginal by quadrature) with a bootstrap interval on a + b.

    The 1000 resample re-estimates use the one-step approximation
    theta_r = theta_hat + I^{-1} U_r (empirical Fisher information I,
    resample score U_r), which is asymptotically equivalent to full refits.
    """
    x = np.asarray(samples, float)
    if len(x) < 100:
        raise FitError("insufficient samples: need >= 100")
    mean = float(np.mean(x))
    var = float(np.var(x))
    b0 = math.sqrt(2.0 * max(var - (0.05 * mean) ** 2, 1e-6 * var))
    p0 = (max(mean, 1e-6), min(b0, mean), 0.05)
    floor = 1e-3 * max(mean, 1e-12)
    (a, b, sig), ok = _fit_ml(x, p0, floor)
    if not ok:
        raise FitError("efficiency distribution fit did not converge")
    if a < 0 or b < 0:
        raise FitError("negative parameter estimates")

    theta = (np.arange(_THETA_NODES) + 0.5) * (2.0 * np.pi / _THETA_NODES)
    th0 = np.array([a, b, sig])
    eps = np.maximum(1e-6, 1e-4 * np.maximum(np.abs(th0), [mean, mean, 0.05]))
    G = np.empty((len(x), 3))
    for j in range(3):
        hi, lo = th0.copy(), th0.copy()
        hi[j] += eps[j]
        lo[j] -= eps[j]
        G[:, j] = (_per_sample_logdens(hi, x, theta, floor)
                   - _per_sample_logdens(lo, x, theta, floor)) / (2 * eps[j])
    fisher = G.T @ G
    try:
        fisher_inv = np.linalg.inv(fisher)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular information matrix in bootstrap") from exc

    rng = np.random.default_rng(seed)
    counts = rng.multinomial(len(x), np.full(len(x), 1.0 / len(x)),
                             size=n_bootstrap)
    scores = (counts - 1.0) @ G                    # resample scores at the MLE
    steps = scores @ fisher_inv.T
    boot = (th0[0] + steps[:, 0]) + (th0[1] + steps[:, 1])
    lo_ci, hi_ci = np.percentile(boot, [2.5, 97.5])
    return EfficiencyEstimate(a=a, b=b, noise_sigma=sig, efficiency=a + b,
                              ci_low=float(lo_ci), ci_high=float(hi_ci),
                              n_bootstrap=n_bootstrap)


# --------------------------------------------------------------------------
# visibility
# --------------------------------------------------------------------------

@dataclass
class VisibilityResult:
    value: float          # (constructive - destructive) / total input energy
    michelson: float      # standard (max - min) / (max + min)


def visibility(constructive_energy: float, destructive_energy: float,
               total_input_energy: float) -> VisibilityResult:
    """Interference contrast normalized to the total optical energy (the
    standard Michelson form is provided alongside)."""
    if min(constructive_energy, destructive_energy, total_input_energy) < 0:
        raise ValueError("energies must be >= 0")
    if total_input_energy == 0:
        raise ValueError("total input energy must be > 0")
    diff = constructive_energy - destructive_energy
    tot = constructive_energy + destructive_energy
    return VisibilityResult(value=diff / total_input_energy,
                            michelson=diff / tot if tot > 0 else 0.0)


# --------------------------------------------------------------------------
# convenience: integrate detector traces over pulse windows
# --------------------------------------------------------------------------

def windowed_energies(t: np.ndarray, trace: np.ndarray,
                      windows) -> np.ndarray:
    """Trapezoidal pulse energies of |trace| over (t_start, t_end) windows."""
    t = np.asarray(t, float)
    power = np.abs(np.asarray(trace)) ** 2 if np.iscomplexobj(trace) \
        else np.asarray(trace, float)
    out = []
    for a, b in windows:
        m = (t >= a) & (t <= b)
        if m.sum() < 2:
            out.append(0.0)
        else:
            out.append(float(np.trapezoid(power[m], x=t[m])))
    return np.asarray(out)
