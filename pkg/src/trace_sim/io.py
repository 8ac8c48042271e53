"""Deterministic CSV/JSON writers: UTF-8, '.' decimal, header row, complex
values as paired _re/_im columns, shortest round-trip float formatting.
No timestamps, so identical inputs give byte-identical files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["format_value", "write_csv", "write_json", "read_csv"]


def format_value(v) -> str:
    if isinstance(v, (np.floating, float)):
        x = float(v)
        if x != x:
            return "nan"
        return repr(x)
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True)
                    + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty CSV file")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]
