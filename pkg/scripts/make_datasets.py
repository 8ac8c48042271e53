#!/usr/bin/env python3
"""Generate the standard figure datasets into out/ using the CLI.

Produces: fig1b.csv (efficiency comparison), decay.csv + decay fit
(storage-time scan), mismatch.csv (phase offsets vs unmatched dispersion),
fringes.csv + fringe fit (synthetic phase-incremented pulse trains), and a
matched-storage trace run.  Everything is seeded and reproducible.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from trace_sim.cli import main as cli

DECAY = """\
seed: 2
ensemble: {d: 200.0, delta_plus: 40.0, gamma_s: 0.002}
sweep:
  kind: decay
  holds: [0.0, 40.0, 80.0, 120.0, 160.0, 200.0, 240.0, 280.0, 320.0,
          360.0, 400.0, 440.0, 480.0, 520.0, 560.0, 600.0, 640.0]
  tau_g: 300.0
  omega: 1.0
  nz: 151
  nt: 4096
"""

MISMATCH = """\
ensemble: {d: 100.0, delta_plus: 40.0}
sweep:
  kind: mismatch
  n: 17
  delta_k_max: 6.2832
  omega: 1.0
  nz: 101
  nt: 2048
"""

FRINGES = """\
seed: 42
ensemble: {d: 100.0, delta_plus: 40.0}
train: {delta_k: 0.8, n_pulses: 17, runs: 3, noise_sigma: 0.02,
        omega: 1.0, nz: 101, nt: 2048}
"""

TRACES = """\
seed: 1
ensemble: {d: 500.0, delta_plus: 40.0}
grid: {nz: 201, nt: 8192, span: 25.6}
pulse: {kind: rising_exponential, amplitude: 1.0, rate: 0.3125, cutoff: 25.6}
control: {kind: constant, amplitude: 1.0}
protocol: {mode: storage-retrieval, model: adiabatic}
retrieval_grid: {nz: 201, nt: 8192, span: 25.6}
"""


def run(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix="trace_sim_cfg_"))

    def cfg(name, text):
        p = tmp / name
        p.write_text(text, encoding="utf-8")
        return str(p)

    jobs = ["--jobs", str(args.jobs)]
    steps = [
        (["fig1b", "--out", str(out)], "fig1b"),
        (["sweep", "--config", cfg("decay.yaml", DECAY),
          "--out", str(out)] + jobs, "decay sweep"),
        (["fit", "--data", str(out / "decay.csv"), "--model", "decay",
          "--out", str(out / "decay_fit")], "decay fit"),
        (["sweep", "--config", cfg("mismatch.yaml", MISMATCH),
          "--out", str(out)] + jobs, "mismatch sweep"),
        (["fringe-sim", "--config", cfg("fringes.yaml", FRINGES),
          "--out", str(out)], "fringe trains"),
        (["fit", "--data", str(out / "fringes.csv"), "--model", "fringe",
          "--out", str(out / "fringe_fit")], "fringe fit"),
        (["simulate", "--config", cfg("traces.yaml", TRACES),
          "--out", str(out / "traces")], "storage/recall traces"),
    ]
    for argv, label in steps:
        print(f"== {label} ==")
        code = cli(argv)
        if code != 0:
            print(f"step '{label}' failed with exit code {code}",
                  file=sys.stderr)
            return code
    print(f"datasets written to {out}/")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    ap.add_argument("--jobs", type=int, default=2)
    sys.exit(run(ap.parse_args()))
