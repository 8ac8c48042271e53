"""Run-configuration files: a single YAML tree per run, validated strictly.

Unknown keys are hard errors (silent typos in physics parameters are the
main operator hazard), reported with the source line number.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import yaml

from .model import (
    ConfigError,
    ControlProfile,
    EnsembleConfig,
    Grid,
    MismatchSpec,
    PulseShape,
)
from . import dispersion

__all__ = ["load_config", "RunConfig"]


def _node_to_tree(node):
    """YAML node -> (value, line) tree; mappings/sequences recurse."""
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, val_node in node.value:
            out[str(key_node.value)] = (_node_to_tree(val_node),
                                        key_node.start_mark.line + 1)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_node_to_tree(v) for v in node.value]
    return _scalar(node)


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


class Section:
    """One mapping level of the config with line-aware strict access."""

    def __init__(self, tree: dict, path: str):
        if not isinstance(tree, dict):
            raise ConfigError(f"section '{path}' must be a mapping")
        self._tree = tree
        self._path = path
        self._seen = set()

    def get(self, key, default=None, required=False):
        if key not in self._tree:
            if required:
                raise ConfigError(f"missing required key '{self._path}{key}'")
            return default
        self._seen.add(key)
        value, _line = self._tree[key]
        return value

    def line(self, key) -> int:
        return self._tree[key][1]

    def section(self, key) -> "Section | None":
        if key not in self._tree:
            return None
        self._seen.add(key)
        value, line = self._tree[key]
        if not isinstance(value, dict):
            raise ConfigError(f"line {line}: '{self._path}{key}' must be a mapping")
        return Section(value, f"{self._path}{key}.")

    def finish(self):
        for key, (_value, line) in self._tree.items():
            if key not in self._seen:
                raise ConfigError(
                    f"line {line}: unknown key '{self._path}{key}'")


def _float(value, name):
    if isinstance(value, bool):
        raise ConfigError(f"'{name}' must be a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        # YAML 1.1 reads "1.0e6" (no signed exponent) as a string
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"'{name}' must be a number")


class RunConfig:
    """Parsed configuration; every run is reproducible from (config, seed)."""

    def __init__(self, root: Section, raw: dict):
        self.root = root
        self.raw = raw
        self.seed = int(root.get("seed", 0))

    # -- builders ----------------------------------------------------------

    def ensemble(self, required=True) -> EnsembleConfig | None:
        sec = self.root.section("ensemble")
        if sec is None:
            if required:
                raise ConfigError("missing required section 'ensemble'")
            return None
        if sec.get("rb87_d1", False):
            cfg = dispersion.rb87_d1_ensemble(
                d=_float(sec.get("d", required=True), "ensemble.d"),
                detuning_hz=_float(sec.get("detuning_hz", 230e6),
                                   "ensemble.detuning_hz"))
            sec.finish()
            return cfg
        levels = sec.get("excited_levels", [])
        parsed_levels = []
        for pair in levels:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("excited_levels entries must be [offset, strength]")
            parsed_levels.append((float(pair[0]), float(pair[1])))
        dm = sec.get("delta_minus")
        cfg = EnsembleConfig(
            d=_float(sec.get("d", required=True), "ensemble.d"),
            gamma_e=_float(sec.get("gamma_e", 1.0), "ensemble.gamma_e"),
            gamma_s=_float(sec.get("gamma_s", 0.0), "ensemble.gamma_s"),
            delta_plus=_float(sec.get("delta_plus", 40.0), "ensemble.delta_plus"),
            delta_minus=None if dm is None else _float(dm, "ensemble.delta_minus"),
            excited_levels=tuple(parsed_levels))
        sec.finish()
        return cfg

    def grid(self, key="grid", required=True) -> Grid | None:
        sec = self.root.section(key)
        if sec is None:
            if required:
                raise ConfigError(f"missing required section '{key}'")
            return None
        nz = int(sec.get("nz", 201))
        nt = int(sec.get("nt", 8192))
        t0 = _float(sec.get("t0", 0.0), f"{key}.t0")
        span = sec.get("span")
        dt = sec.get("dt")
        if span is not None and dt is None:
            g = Grid.over(t0, t0 + _float(span, f"{key}.span"), nt, nz=nz)
        elif dt is not None:
            g = Grid(nz=nz, nt=nt, dt=_float(dt, f"{key}.dt"), t0=t0)
        else:
            raise ConfigError(f"section '{key}' needs either dt or span")
        sec.finish()
        return g

    def pulse(self, grid: Grid | None, required=True) -> PulseShape | None:
        sec = self.root.section("pulse")
        if sec is None:
            if required:
                raise ConfigError("missing required section 'pulse'")
            return None
        kind = sec.get("kind", required=True)
        phase = _float(sec.get("phase", 0.0), "pulse.phase")
        if kind in ("rising_exponential", "rising-exponential"):
            shape = PulseShape.rising_exponential(
                amplitude=_float(sec.get("amplitude", 1.0), "pulse.amplitude"),
                rate=_float(sec.get("rate", required=True), "pulse.rate"),
                cutoff=_float(sec.get("cutoff", required=True), "pulse.cutoff"),
                phase=phase)
        elif kind == "gaussian":
            shape = PulseShape.gaussian(
                amplitude=_float(sec.get("amplitude", 1.0), "pulse.amplitude"),
                center=_float(sec.get("center", required=True), "pulse.center"),
                width=_float(sec.get("width", required=True), "pulse.width"),
                phase=phase)
        elif kind == "samples":
            re = sec.get("values_re", required=True)
            im = sec.get("values_im", [0.0] * len(re))
            shape = PulseShape.from_samples(
                np.asarray(re, float) + 1j * np.asarray(im, float), phase=phase)
        else:
            raise ConfigError(f"unknown pulse kind '{kind}'")
        sec.finish()
        return shape

    def control(self, grid: Grid, key="control", required=True,
                ensemble: EnsembleConfig | None = None,
                pulse: PulseShape | None = None) -> ControlProfile | None:
        sec = self.root.section(key)
        if sec is None:
            if required:
                raise ConfigError(f"missing required section '{key}'")
            return None
        kind = sec.get("kind", "constant")
        if kind == "constant":
            amp = _float(sec.get("amplitude", required=True), f"{key}.amplitude")
            window = sec.get("window")
            win = tuple(float(v) for v in window) if window else None
            prof = ControlProfile.constant(grid, amp, window=win)
        elif kind == "shaped":
            if ensemble is None or pulse is None:
                raise ConfigError("shaped control needs ensemble and pulse")
            from . import shaping
            bw = _float(sec.get("bandwidth_limit", 100.0),
                        f"{key}.bandwidth_limit")
            prof = shaping.shape_control(ensemble, grid, pulse,
                                         bandwidth_limit=bw,
                                         validate=False).omega
        else:
            raise ConfigError(f"unknown control kind '{kind}'")
        sec.finish()
        return prof

    def mismatch(self) -> MismatchSpec:
        sec = self.root.section("mismatch")
        if sec is None:
            return MismatchSpec()
        spec = MismatchSpec(
            delta_k=_float(sec.get("delta_k", 0.0), "mismatch.delta_k"),
            global_phase=_float(sec.get("global_phase", 0.0),
                                "mismatch.global_phase"))
        sec.finish()
        return spec

    def section(self, key) -> Section | None:
        return self.root.section(key)

    def finish(self):
        self.root.finish()


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{line}invalid YAML: {exc}") from exc
    if node is None:
        raise ConfigError("empty configuration file")
    tree = _node_to_tree(node)
    if not isinstance(tree, dict):
        raise ConfigError("configuration root must be a mapping")
    return RunConfig(Section(tree, ""), tree)
