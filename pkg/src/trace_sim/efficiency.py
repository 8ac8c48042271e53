"""Closed-form efficiency limits for cavity, two-sided (TRACE) and
single-pass free-space Raman memories, and the comparison dataset.

All three are storage-followed-by-retrieval totals: 1 - 2/C for a cavity
with cooperativity C, (d/(d+2))^2 for the two-sided scheme at optical depth
d, and the approximate optimum 1 - 5.8/d for a single-pass free-space
memory.  The asymptotic forms are clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EfficiencyCurve",
    "cavity_efficiency",
    "trace_efficiency",
    "freespace_raman_efficiency",
    "figure1b_dataset",
]


@dataclass
class EfficiencyCurve:
    scheme: str
    abscissa: np.ndarray
    efficiency: np.ndarray

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, float)
        self.efficiency = np.clip(np.asarray(self.efficiency, float), 0.0, 1.0)
        if len(self.abscissa) == 0:
            raise ValueError("empty abscissa")
        if np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissa must be strictly increasing")


def cavity_efficiency(C: float) -> float:
    """Storage-plus-retrieval limit 1 - 2/C for cooperativity C > 0."""
    if C <= 0:
        raise ValueError("cooperativity must be > 0")
    return max(0.0, 1.0 - 2.0 / C)


def trace_efficiency(d: float) -> float:
    """Two-sided limit (d/(d+2))^2; approaches 1 - 4/d at large d."""
    if d < 0:
        raise ValueError("optical depth must be >= 0")
    return (d / (d + 2.0)) ** 2


def freespace_raman_efficiency(d: float) -> float:
    """Approximate single-pass free-space optimum 1 - 5.8/d."""
    if d <= 0:
        raise ValueError("optical depth must be > 0")
    return max(0.0, 1.0 - 5.8 / d)


def figure1b_dataset(d_range: np.ndarray | None = None,
                     C_range: np.ndarray | None = None) -> list[EfficiencyCurve]:
    """The three comparison curves on log-spaced grids."""
    if d_range is None:
        d_range = np.logspace(0.0, 3.0, 200)
    if C_range is None:
        C_range = np.asarray(d_range, float)
    d_range = np.asarray(d_range, float)
    C_range = np.asarray(C_range, float)
    if len(d_range) == 0 or len(C_range) == 0:
        raise ValueError("empty range")
    return [
        EfficiencyCurve("cavity", C_range,
                        [cavity_efficiency(c) for c in C_range]),
        EfficiencyCurve("trace", d_range,
                        [trace_efficiency(d) for d in d_range]),
        EfficiencyCurve("freespace-raman", d_range,
                        [freespace_raman_efficiency(d) for d in d_range]),
    ]
