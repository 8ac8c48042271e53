"""Command-line orchestrator.

Subcommands: simulate, sweep, shape-control, phase-offset, fringe-sim, fit,
fig1b.  Common flags: --config PATH, --out DIR, --seed N, --jobs N,
--format {csv,json}.  TRACE_SIM_LOG sets the log level.  All outputs are
byte-identical under a fixed (config, seed).

Exit codes: 2 config/schema error, 3 solver failure, 4 fit failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import adiabatic, dispersion, efficiency, shaping, stats, sweeps, three_level
from .config_io import RunConfig, load_config
from .io import read_csv, write_csv, write_json
from .model import (
    ConfigError,
    ControlProfile,
    FitError,
    Grid,
    SimulationError,
)

log = logging.getLogger("trace_sim")


def _setup_logging():
    level = os.environ.get("TRACE_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _envelope_rows(tag, result):
    for i, t in enumerate(result.t):
        yield (tag, t,
               result.e_out_plus[i].real, result.e_out_plus[i].imag,
               result.e_out_minus[i].real, result.e_out_minus[i].imag)


ENVELOPE_HEADER = ["leg", "t", "e_out_plus_re", "e_out_plus_im",
                   "e_out_minus_re", "e_out_minus_im"]


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def _seed_of(args, cfg) -> int:
    return args.seed if args.seed is not None else cfg.seed


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    ens = cfg.ensemble()
    grid = cfg.grid()
    proto = cfg.section("protocol")
    mode = proto.get("mode", "storage") if proto else "storage"
    model = proto.get("model", "adiabatic") if proto else "adiabatic"
    out = Path(args.out)

    summary = {"mode": mode, "model": model, "seed": _seed_of(args, cfg)}
    legs = []
    if model == "adiabatic":
        mismatch = cfg.mismatch()
        if mode == "storage":
            shape = cfg.pulse(grid)
            control = cfg.control(grid, ensemble=ens, pulse=shape)
            res = adiabatic.simulate_storage(ens, grid, shape, control, mismatch)
            legs.append(("storage", res))
            summary.update(
                efficiency=res.diagnostics["stored_fraction"],
                leakage=res.diagnostics["leakage_fraction"],
                uniformity=res.diagnostics.get("uniformity"),
                energy_in=res.energy_in,
                energy_transmitted=res.energy_transmitted)
        elif mode == "retrieval":
            control = cfg.control(grid, ensemble=ens)
            s0 = np.ones(grid.nz, complex)
            res = adiabatic.simulate_retrieval(ens, grid, s0, control, mismatch)
            legs.append(("retrieval", res))
            summary.update(efficiency=res.efficiency,
                           energy_in=res.energy_in,
                           energy_recalled=res.energy_recalled)
        elif mode == "storage-retrieval":
            shape = cfg.pulse(grid)
            control = cfg.control(grid, ensemble=ens, pulse=shape)
            rgrid = cfg.grid("retrieval_grid", required=False) or grid
            rsec = cfg.section("retrieval_control")
            if rsec is not None:
                amp = rsec.get("amplitude", required=True)
                rcontrol = ControlProfile.constant(rgrid, float(amp))
                rsec.finish()
            else:
                rcontrol = ControlProfile.constant(rgrid, control.max_amplitude())
            hold = float(proto.get("hold", 0.0)) if proto else 0.0
            tau_g = proto.get("tau_g") if proto else None
            run = adiabatic.run_storage_retrieval(
                ens, grid, shape, control, rgrid, rcontrol, mismatch,
                hold=hold, tau_g=None if tau_g is None else float(tau_g))
            legs.append(("storage", run.storage))
            legs.append(("retrieval", run.retrieval))
            summary.update(
                efficiency=run.efficiency, hold=hold,
                stored_fraction=run.storage.diagnostics["stored_fraction"],
                leakage=run.storage.diagnostics["leakage_fraction"],
                uniformity=run.storage.diagnostics.get("uniformity"))
        else:
            raise ConfigError(f"unknown protocol mode '{mode}'")
    elif model in ("three-level-local", "three-level-uniform"):
        backend = "local" if model.endswith("local") else "uniform"
        csec = cfg.section("control")
        omega = float(csec.get("amplitude", required=True)) if csec else 1.0
        if csec:
            csec.finish()
        if mode == "retrieval":
            init = proto.get("initial_spinwave", "matched") if proto else "matched"
            control = ControlProfile.constant(grid, omega)
            res = three_level.simulate_retrieval_full(
                ens, grid, init, control, model=backend)
            legs.append(("retrieval", res))
            summary.update(efficiency=res.efficiency,
                           ledger_error=res.diagnostics["ledger_error"],
                           loss_spontaneous=res.diagnostics["loss_spontaneous"])
        elif mode == "storage-retrieval":
            run = three_level.storage_retrieval_full(
                ens, omega, nz=grid.nz, model=backend, n_t=min(grid.nt, 6000))
            legs.append(("storage", run.storage))
            legs.append(("retrieval", run.retrieval))
            summary.update(efficiency=run.efficiency_total,
                           efficiency_storage=run.efficiency_storage,
                           efficiency_retrieval=run.efficiency_retrieval)
        else:
            raise ConfigError(f"mode '{mode}' not supported for {model}")
    else:
        raise ConfigError(f"unknown model '{model}'")
    if proto:
        proto.finish()
    cfg.finish()

    rows = []
    for tag, res in legs:
        rows.extend(_envelope_rows(tag, res))
    write_csv(out / "envelopes.csv", ENVELOPE_HEADER, rows)
    write_json(out / "summary.json", summary)
    print(f"wrote {out / 'envelopes.csv'} and {out / 'summary.json'}")
    return 0


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def _write_fig1b(out: Path, d_range=None, C_range=None) -> Path:
    curves = efficiency.figure1b_dataset(d_range, C_range)
    by_name = {c.scheme: c for c in curves}
    cav, tr, fs = (by_name["cavity"], by_name["trace"], by_name["freespace-raman"])
    if np.array_equal(cav.abscissa, tr.abscissa):
        header = ["abscissa", "cavity", "trace", "freespace"]
        rows = zip(tr.abscissa, cav.efficiency, tr.efficiency, fs.efficiency)
    else:
        header = ["scheme", "abscissa", "efficiency"]
        rows = [(c.scheme, a, e) for c in curves
                for a, e in zip(c.abscissa, c.efficiency)]
    return write_csv(out / "fig1b.csv", header, rows)


def cmd_fig1b(args) -> int:
    path = _write_fig1b(Path(args.out))
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    sec = cfg.section("sweep")
    if sec is None:
        raise ConfigError("missing required section 'sweep'")
    kind = sec.get("kind", required=True)
    out = Path(args.out)

    if kind == "fig1b":
        n = int(sec.get("n", 200))
        lo = float(sec.get("min", 1.0))
        hi = float(sec.get("max", 1000.0))
        if n < 1 or hi <= lo:
            raise ConfigError("empty sweep range")
        sec.finish()
        cfg.finish()
        path = _write_fig1b(out, np.logspace(np.log10(lo), np.log10(hi), n))
    elif kind == "decay":
        ens = cfg.ensemble()
        holds = sec.get("holds")
        if holds is None:
            n = int(sec.get("n", 17))
            h_max = float(sec.get("hold_max", required=True))
            if n < 1 or h_max <= 0:
                raise ConfigError("empty sweep range")
            holds = list(np.linspace(0.0, h_max, n))
        if len(holds) == 0:
            raise ConfigError("empty sweep range")
        tau_g = sec.get("tau_g")
        omega = float(sec.get("omega", 1.0))
        nz = int(sec.get("nz", 201))
        nt = int(sec.get("nt", 4096))
        sec.finish()
        cfg.finish()
        rows = sweeps.decay_sweep(ens, [float(h) for h in holds], omega=omega,
                                  tau_g=None if tau_g is None else float(tau_g),
                                  nz=nz, nt=nt, jobs=args.jobs)
        if all(r["error"] for r in rows):
            raise SimulationError("all sweep points failed")
        path = write_csv(out / "decay.csv", ["t", "efficiency", "error"],
                         [(r["t"], r["efficiency"], r["error"]) for r in rows])
    elif kind == "mismatch":
        ens = cfg.ensemble()
        dks = sec.get("delta_k_values")
        if dks is None:
            n = int(sec.get("n", 17))
            lim = float(sec.get("delta_k_max", 2.0 * np.pi))
            if n < 1:
                raise ConfigError("empty sweep range")
            dks = list(np.linspace(-lim, lim, n))
        if len(dks) == 0:
            raise ConfigError("empty sweep range")
        omega = float(sec.get("omega", 1.0))
        nz = int(sec.get("nz", 101))
        nt = int(sec.get("nt", 2048))
        n_theta = int(sec.get("n_theta", 64))
        sec.finish()
        cfg.finish()
        grid, shape, control, rgrid, rcontrol = sweeps.matched_storage_setup(
            ens, omega, nz=nz, nt=nt)

        def one(dk):
            return dispersion.mismatch_fringe_sweep(
                ens, grid, [dk], shape, control, rgrid, rcontrol,
                n_theta=n_theta)[0]

        rows = sweeps._run_points(one, [float(v) for v in dks], args.jobs)
        rows.sort(key=lambda r: r["delta_k"])
        # unwrap after sorting so the curves continue beyond 2 pi
        dispersion._unwrap_rows(rows, "transmitted_offset")
        dispersion._unwrap_rows(rows, "recalled_offset")
        if all(r["error"] for r in rows):
            raise SimulationError("all sweep points failed")
        path = write_csv(
            out / "mismatch.csv",
            ["delta_k", "transmitted_offset", "recalled_offset",
             "max_efficiency", "error"],
            [(r["delta_k"], r["transmitted_offset"], r["recalled_offset"],
              r["max_efficiency"], r["error"]) for r in rows])
    else:
        raise ConfigError(f"unknown sweep kind '{kind}'")
    print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# shaping / dispersion / fringe generation
# --------------------------------------------------------------------------

def cmd_shape_control(args) -> int:
    cfg = load_config(args.config)
    ens = cfg.ensemble()
    grid = cfg.grid()
    shape = cfg.pulse(grid)
    sec = cfg.section("shaping")
    bw = float(sec.get("bandwidth_limit", 100.0)) if sec else 100.0
    if sec:
        sec.finish()
    cfg.finish()
    result = shaping.shape_control(ens, grid, shape, bandwidth_limit=bw)
    out = Path(args.out)
    write_csv(out / "control.csv", ["t", "omega_re", "omega_im"],
              zip(grid.t, result.omega.omega.real, result.omega.omega.imag))
    write_json(out / "shaping.json", {
        "residual_output_fraction": result.residual_output_fraction,
        "closed_form_used": result.closed_form_used,
        "bandwidth_limit": bw})
    print(f"wrote {out / 'control.csv'} and {out / 'shaping.json'}")
    return 0


def cmd_phase_offset(args) -> int:
    cfg = load_config(args.config)
    ens = cfg.ensemble()
    gsec = cfg.section("geometry")
    geom = dispersion.GeometryConfig(
        lambda_probe=float(gsec.get("lambda_probe", dispersion.RB87_D1_WAVELENGTH)),
        hyperfine_splitting=float(gsec.get("hyperfine_splitting",
                                           dispersion.RB87_HYPERFINE_SPLITTING)),
        theta=float(gsec.get("theta", 6e-3))) if gsec else dispersion.GeometryConfig()
    if gsec:
        gsec.finish()
    cfg.finish()
    offset = dispersion.dispersion_phase_offset(ens)
    shift, corrected, residual = dispersion.detuning_correction(ens)
    geom0 = dispersion.GeometryConfig(lambda_probe=geom.lambda_probe,
                                      hyperfine_splitting=geom.hyperfine_splitting,
                                      theta=0.0)
    payload = {
        "offset_rad": offset,
        "detuning_correction": {"shift": shift, "corrected_offset_rad": residual},
        "spinwave_wavelength_m": dispersion.spinwave_wavelength(geom),
        "copropagating_wavelength_m": dispersion.spinwave_wavelength(geom0),
        "strength_ratio": dispersion.RB87_D1_STRENGTH_RATIO,
    }
    path = write_json(Path(args.out) / "phase_offset.json", payload)
    print(f"wrote {path}")
    return 0


def cmd_fringe_sim(args) -> int:
    cfg = load_config(args.config)
    ens = cfg.ensemble()
    sec = cfg.section("train")
    if sec is None:
        raise ConfigError("missing required section 'train'")
    delta_k = float(sec.get("delta_k", 0.0))
    n_pulses = int(sec.get("n_pulses", 17))
    phase_step = float(sec.get("phase_step", 0.3 * np.pi))
    runs = int(sec.get("runs", 1))
    noise = float(sec.get("noise_sigma", 0.0))
    omega = float(sec.get("omega", 1.0))
    nz = int(sec.get("nz", 101))
    nt = int(sec.get("nt", 2048))
    sec.finish()
    cfg.finish()
    datasets = sweeps.fringe_train(ens, delta_k, omega=omega,
                                   n_pulses=n_pulses, phase_step=phase_step,
                                   runs=runs, noise_sigma=noise,
                                   seed=_seed_of(args, cfg), nz=nz, nt=nt)
    rows = []
    for ds in datasets:
        for i in range(len(ds.pulse_index)):
            rows.append((ds.run_id, ds.pulse_index[i], ds.imposed_phase[i],
                         ds.energies["forward_transmitted"][i],
                         ds.energies["backward_transmitted"][i],
                         ds.energies["forward_recalled"][i],
                         ds.energies["backward_recalled"][i]))
    path = write_csv(Path(args.out) / "fringes.csv",
                     ["run_id", "pulse_index", "imposed_phase",
                      "forward_transmitted", "backward_transmitted",
                      "forward_recalled", "backward_recalled"], rows)
    print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------

def _parse_float_cols(header, rows, wanted, path):
    idx = {}
    for name in wanted:
        if name not in header:
            raise ConfigError(f"{path}: expected column '{name}' "
                              f"(found {header})")
        idx[name] = header.index(name)
    out = {name: [] for name in wanted}
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ConfigError(f"{path}: line {r}: wrong field count")
        for name in wanted:
            try:
                out[name].append(float(row[idx[name]]))
            except ValueError as exc:
                raise ConfigError(f"{path}: line {r}: bad value for "
                                  f"'{name}'") from exc
    return {k: np.asarray(v) for k, v in out.items()}


def cmd_fit(args) -> int:
    path = Path(args.data)
    if not path.exists():
        raise ConfigError(f"data file {path} not found")
    try:
        header, rows = read_csv(path)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = Path(args.out)

    if args.model == "decay":
        cols = _parse_float_cols(header, rows, ["t", "efficiency"], path)
        fit = stats.fit_decay(stats.DecayCurve(cols["t"], cols["efficiency"]))
        resid = cols["efficiency"] - stats.decay_model(
            cols["t"], fit.eta0, fit.tau_e, fit.tau_g)
        err = np.sqrt(np.diag(fit.covariance))
        payload = {
            "model": "decay",
            "eta0": fit.eta0, "tau_e": fit.tau_e, "tau_g": fit.tau_g,
            "eta0_err": float(err[0]), "tau_e_err": float(err[1]),
            "tau_g_err": float(err[2]),
            "residual_rms": float(np.sqrt(np.mean(resid ** 2))),
        }
    elif args.model == "fringe":
        wanted = ["imposed_phase", "forward_transmitted", "backward_transmitted",
                  "forward_recalled", "backward_recalled"]
        cols = _parse_float_cols(header, rows, wanted, path)
        run_col = header.index("run_id") if "run_id" in header else None
        run_ids = [row[run_col] for row in rows] if run_col is not None \
            else ["run0"] * len(rows)
        fits = {}
        for rid in sorted(set(run_ids)):
            mask = np.array([r == rid for r in run_ids])
            ds = stats.FringeDataset(
                pulse_index=np.arange(int(mask.sum())),
                imposed_phase=cols["imposed_phase"][mask],
                energies={name: cols[name][mask] for name in wanted[1:]},
                run_id=rid)
            fit = stats.fit_fringe(ds)
            fits[rid] = {
                "channels": {name: {"offset": fit.offset[name],
                                    "amplitude": fit.amplitude[name],
                                    "phase": fit.phase[name]}
                             for name in fit.phase},
                "phase_differences": fit.phase_differences,
                "visibility": fit.visibility,
                "transmitted_offset": float(np.remainder(
                    fit.phase["backward_transmitted"]
                    - fit.phase["forward_transmitted"] + np.pi, 2 * np.pi) - np.pi),
                "recalled_offset": float(np.remainder(
                    fit.phase["backward_recalled"]
                    - fit.phase["forward_recalled"] + np.pi, 2 * np.pi) - np.pi),
            }
        payload = {"model": "fringe", "runs": fits}
    elif args.model == "energy":
        cols = _parse_float_cols(header, rows, ["energy"], path)
        est = stats.estimate_efficiency(cols["energy"], seed=args.seed,
                                        n_bootstrap=args.bootstrap)
        payload = {
            "model": "energy", "a": est.a, "b": est.b,
            "noise_sigma": est.noise_sigma, "efficiency": est.efficiency,
            "ci_low": est.ci_low, "ci_high": est.ci_high,
            "n_bootstrap": est.n_bootstrap,
        }
    else:
        raise ConfigError(f"unknown fit model '{args.model}'")
    path_out = write_json(out / "fit.json", payload)
    print(f"wrote {path_out}")
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="trace-sim",
        description="two-sided Raman memory simulator and analysis toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True, help="YAML run config")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides the config seed)")
        sp.add_argument("--jobs", type=int, default=1,
                        help="concurrent sweep points")
        sp.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format (csv default)")

    for name, fn, needs_cfg in (
            ("simulate", cmd_simulate, True),
            ("sweep", cmd_sweep, True),
            ("shape-control", cmd_shape_control, True),
            ("phase-offset", cmd_phase_offset, True),
            ("fringe-sim", cmd_fringe_sim, True),
            ("fig1b", cmd_fig1b, False)):
        sp = sub.add_parser(name)
        common(sp, needs_cfg)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("fit")
    sp.add_argument("--data", required=True, help="input CSV")
    sp.add_argument("--model", required=True, choices=("decay", "fringe", "energy"))
    sp.add_argument("--out", default="out")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bootstrap", type=int, default=1000)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_fit)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
