"""Deterministic JSON and CSV writers.

Floats are rendered with 17 significant digits, which round-trips IEEE
doubles exactly, and dict keys keep insertion order.  Nothing here embeds
timestamps or environment data, so identical inputs produce byte-identical
files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("bool is not a float")
    x = float(x)
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return "1e9999" if x > 0 else "-1e9999"
    return format(x, ".17g")


def _encode(obj, pieces: list[str]) -> None:
    if obj is None:
        pieces.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        pieces.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        pieces.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        pieces.append(format_float(obj))
    elif isinstance(obj, str):
        escaped = (
            obj.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
            .replace("\t", "\\t")
        )
        pieces.append(f'"{escaped}"')
    elif isinstance(obj, dict):
        pieces.append("{")
        for i, (key, val) in enumerate(obj.items()):
            if i:
                pieces.append(", ")
            _encode(str(key), pieces)
            pieces.append(": ")
            _encode(val, pieces)
        pieces.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        pieces.append("[")
        for i, val in enumerate(obj):
            if i:
                pieces.append(", ")
            _encode(val, pieces)
        pieces.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj) -> str:
    pieces: list[str] = []
    _encode(obj, pieces)
    return "".join(pieces)


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(to_json(obj) + "\n")


def csv_cell(value) -> str:
    """One CSV cell: floats at 17 digits, None as the empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(csv_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
