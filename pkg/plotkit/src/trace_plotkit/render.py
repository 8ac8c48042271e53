"""Figure rendering from trace-sim CSV/JSON outputs.

Five figure kinds mirror the simulator's standard datasets: the efficiency
comparison (fig1b), storage/recall traces, the decay curve with its fitted
overlay, phase-incremented fringe scatter with the fitted sinusoids, and
the mismatch phase-offset curves (whose vertical axis continues beyond
2 pi).  All numerical content comes from the input files; this package only
draws.  Rendering is deterministic: fixed figure geometry, a fixed SVG hash
salt and no embedded timestamps.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "trace-plotkit"
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PlotSpec", "SchemaError", "render", "FIGURE_KINDS"]

FIGURE_KINDS = ("fig1b", "traces", "decay", "fringes", "mismatch")

CHANNELS = ("forward_transmitted", "backward_transmitted",
            "forward_recalled", "backward_recalled")

CHANNEL_STYLE = {
    "forward_transmitted": dict(color="#1f77b4", marker="o",
                                label="forward transmitted"),
    "backward_transmitted": dict(color="#d62728", marker="s",
                                 label="backward transmitted"),
    "forward_recalled": dict(color="#2ca02c", marker="^",
                             label="forward recalled"),
    "backward_recalled": dict(color="#9467bd", marker="v",
                              label="backward recalled"),
}


class SchemaError(ValueError):
    """Input file does not match the schema required by the figure kind."""


@dataclass
class PlotSpec:
    kind: str
    csv: str
    out: str
    fit: str | None = None
    title: str | None = None
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    fmt: str = "svg"

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {FIGURE_KINDS}")
        if self.fmt not in ("svg", "png"):
            raise SchemaError("format must be svg or png")


def _read_csv(path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file {path} not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return header, rows


def _require(header, columns, path, what="column"):
    missing = [c for c in columns if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing {what}(s) {missing} "
                          f"(found {header})")


def _col(rows, name) -> np.ndarray:
    return np.array([float(r[name]) for r in rows])


def _new_axes(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: PlotSpec) -> Path:
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, format=spec.fmt, metadata=_no_date(spec.fmt))
    plt.close(fig)
    return out


def _no_date(fmt: str):
    # strip volatile metadata so identical inputs give identical bytes
    if fmt == "svg":
        return {"Date": None}
    return {"Software": "trace-plotkit"}


def _load_fit(spec: PlotSpec) -> dict:
    if spec.fit is None:
        raise SchemaError("missing fit report: this overlay needs --fit")
    path = Path(spec.fit)
    if not path.exists():
        raise SchemaError(f"fit report {path} not found")
    return json.loads(path.read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# renderers
# --------------------------------------------------------------------------

def _render_fig1b(spec: PlotSpec) -> Path:
    header, rows = _read_csv(spec.csv)
    _require(header, ["abscissa", "cavity", "trace", "freespace"], spec.csv)
    x = _col(rows, "abscissa")
    fig, ax = _new_axes(spec)
    for name, label, style in (
            ("cavity", "cavity (1 - 2/C)", "-"),
            ("trace", "two-sided ((d/(d+2))^2)", "-"),
            ("freespace", "free-space Raman (1 - 5.8/d)", ":")):
        y = _col(rows, name)
        if name == "freespace":
            ax.plot(x, y, style, color="black", label=label, markersize=3)
        else:
            ax.plot(x, y, style, label=label)
    ax.set_xscale("log")
    ax.set_xlabel("optical depth d  /  cooperativity C")
    ax.set_ylabel("storage + retrieval efficiency")
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, ax, spec)


def _render_traces(spec: PlotSpec) -> Path:
    header, rows = _read_csv(spec.csv)
    _require(header, ["leg", "t", "e_out_plus_re", "e_out_plus_im",
                      "e_out_minus_re", "e_out_minus_im"], spec.csv)
    fig, ax = _new_axes(spec)
    legs = sorted({r["leg"] for r in rows})
    for leg in legs:
        sel = [r for r in rows if r["leg"] == leg]
        t = _col(sel, "t")
        for port, color in (("plus", "#1f77b4"), ("minus", "#d62728")):
            power = (_col(sel, f"e_out_{port}_re") ** 2
                     + _col(sel, f"e_out_{port}_im") ** 2)
            style = "-" if leg == legs[0] else "--"
            ax.plot(t, power, style, color=color,
                    label=f"{leg}, port {'+' if port == 'plus' else '-'}",
                    linewidth=1.0)
    ax.set_xlabel("time (1/Gamma)")
    ax.set_ylabel("output power |E|^2")
    ax.legend(fontsize=8)
    return _finish(fig, ax, spec)


def _render_decay(spec: PlotSpec) -> Path:
    header, rows = _read_csv(spec.csv)
    _require(header, ["t", "efficiency"], spec.csv)
    t = _col(rows, "t")
    eta = _col(rows, "efficiency")
    fig, ax = _new_axes(spec)
    ax.plot(t, eta, "o", color="#1f77b4", markersize=4, label="measured")
    if spec.fit is not None:
        rep = _load_fit(spec)
        for key in ("eta0", "tau_e", "tau_g"):
            if key not in rep:
                raise SchemaError(f"fit report lacks '{key}'")
        tt = np.linspace(float(t.min()), float(t.max()), 400)
        overlay = rep["eta0"] * np.exp(-tt / rep["tau_e"]
                                       - (tt / rep["tau_g"]) ** 2)
        ax.plot(tt, overlay, "-", color="#d62728",
                label=(f"fit: eta0={rep['eta0']:.3g}, "
                       f"tau_e={rep['tau_e']:.3g}, tau_g={rep['tau_g']:.3g}"))
    ax.set_xlabel("storage time")
    ax.set_ylabel("efficiency")
    ax.legend(fontsize=8)
    return _finish(fig, ax, spec)


def _render_fringes(spec: PlotSpec) -> Path:
    header, rows = _read_csv(spec.csv)
    _require(header, ["run_id", "imposed_phase"], spec.csv)
    _require(header, list(CHANNELS), spec.csv, what="channel")
    fits = {}
    if spec.fit is not None:
        rep = _load_fit(spec)
        fits = rep.get("runs", {})
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 4.0), dpi=120, sharex=True)
    if spec.title:
        fig.suptitle(spec.title)
    panels = {"transmitted": axes[0], "recalled": axes[1]}
    phases = _col(rows, "imposed_phase")
    grid = np.linspace(float(phases.min()), float(phases.max()), 300)
    for name in CHANNELS:
        ax = panels["recalled" if name.endswith("recalled") else "transmitted"]
        style = CHANNEL_STYLE[name]
        ax.plot(phases / np.pi, _col(rows, name), linestyle="none",
                marker=style["marker"], color=style["color"], markersize=3.5,
                label=style["label"])
        drawn = set()
        for rid, f in fits.items():
            ch = f.get("channels", {}).get(name)
            if ch is None or name in drawn:
                continue
            model = (ch["offset"]
                     + ch["amplitude"] * np.cos(grid + ch["phase"]))
            ax.plot(grid / np.pi, model, "-", color=style["color"],
                    linewidth=0.9, alpha=0.7)
            drawn.add(name)   # one representative sinusoid per channel
    for title, ax in panels.items():
        ax.set_xlabel("imposed phase (pi rad)")
        ax.set_title(title, fontsize=9)
        ax.legend(fontsize=7)
    axes[0].set_ylabel("pulse energy")
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, format=spec.fmt, metadata=_no_date(spec.fmt))
    plt.close(fig)
    return out


def _render_mismatch(spec: PlotSpec) -> Path:
    header, rows = _read_csv(spec.csv)
    _require(header, ["delta_k", "transmitted_offset", "recalled_offset"],
             spec.csv)
    ok = [r for r in rows if not r.get("error")]
    if not ok:
        raise SchemaError(f"{spec.csv}: every sweep row carries an error")
    dk = _col(ok, "delta_k")
    fig, ax = _new_axes(spec)
    ax.plot(dk, _col(ok, "transmitted_offset"), "-o", color="black",
            markersize=3.5, label="transmitted")
    ax.plot(ok and dk, _col(ok, "recalled_offset"), "-s", color="#1f77b4",
            markersize=3.5, label="recalled")
    # the offset axis is unwrapped, continuing beyond +-2 pi
    span = max(2.0 * math.pi,
               float(np.nanmax(np.abs(_col(ok, "transmitted_offset")))))
    for y in (-2.0 * math.pi, 2.0 * math.pi):
        if span >= 2.0 * math.pi:
            ax.axhline(y, color="0.8", linewidth=0.6, zorder=0)
    ax.set_xlabel("unmatched dispersion delta_k (rad)")
    ax.set_ylabel("forward/backward maxima offset (rad)")
    ax.legend(fontsize=8)
    return _finish(fig, ax, spec)


_RENDERERS = {
    "fig1b": _render_fig1b,
    "traces": _render_traces,
    "decay": _render_decay,
    "fringes": _render_fringes,
    "mismatch": _render_mismatch,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure; raises SchemaError before drawing anything when
    the inputs do not match the kind's schema."""
    return _RENDERERS[spec.kind](spec)
