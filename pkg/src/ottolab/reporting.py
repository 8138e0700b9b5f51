"""Deterministic CSV/JSON writers with provenance headers.

All floats are written with 17 significant digits ('.' decimal separator,
'\\n' line endings) so outputs round-trip exactly and reruns are
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return "%.17g" % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def canonical_json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not JSON-serializable: {type(o)}")
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=default)


def params_hash(params) -> str:
    return hashlib.sha256(canonical_json(params).encode()).hexdigest()[:16]


def provenance_lines(command: str, params) -> list[str]:
    return [f"format_version={FORMAT_VERSION}",
            f"command={command}",
            f"params_sha256={params_hash(params)}"]


def write_csv(path, columns: dict, header_lines=()) -> None:
    """Write named columns; ``header_lines`` become leading '# ' comments."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    rows = len(next(iter(columns.values()))) if columns else 0
    for name in names:
        if len(columns[name]) != rows:
            raise ValueError(f"column {name!r} has mismatched length")
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(fmt(columns[name][i]) for name in names) + "\n")


def write_json(path, obj, header=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(obj)
    if header is not None:
        payload = {"provenance": header, **payload}
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(_jsonable(payload), sort_keys=True, indent=2))
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
