"""Field container files, structured records and delimited series.

A field file is one UTF-8 header line holding a JSON object with at least
``format_version``, ``n``, ``points_per_axis`` and ``field_name``, followed
by ``points_per_axis ** (2n)`` little-endian float64 values in row-major
axis order.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .grid import GridSpec, ScalarField

FORMAT_VERSION = 1
REQUIRED_KEYS = ("format_version", "n", "points_per_axis", "field_name")


def write_field(path, f: ScalarField, field_name: str, **extra) -> Path:
    path = Path(path)
    header = {
        "format_version": FORMAT_VERSION,
        "n": f.spec.n,
        "points_per_axis": f.spec.points_per_axis,
        "field_name": field_name,
    }
    for key, value in extra.items():
        if key in header:
            raise DomainError(f"header key {key!r} is reserved")
        header[key] = value
    line = json.dumps(header, sort_keys=False, separators=(",", ":"))
    if "\n" in line:
        raise DomainError("header must fit on one line")
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(line.encode("utf-8") + b"\n")
        fh.write(payload)
    return path


def read_field(path):
    """Return ``(field, header)`` from a field file."""
    with open(path, "rb") as fh:
        line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DomainError(f"{path}: malformed field header") from exc
    missing = [k for k in REQUIRED_KEYS if k not in header]
    if missing:
        raise DomainError(f"{path}: header lacks {missing}")
    if header["format_version"] != FORMAT_VERSION:
        raise DomainError(f"{path}: unsupported format_version {header['format_version']}")
    spec = GridSpec(int(header["n"]), int(header["points_per_axis"]))
    if len(payload) != 8 * spec.size:
        raise DomainError(
            f"{path}: payload has {len(payload)} bytes, expected {8 * spec.size}"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(spec.shape)
    return ScalarField(spec, values), header


def _plain(obj):
    """Make numpy scalars/arrays JSON-serializable."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_record(path, record: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(record), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_record(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def format_record(record: dict) -> str:
    return json.dumps(_plain(record), indent=2, sort_keys=True)


def write_series(path, rows: list, columns: list) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(row[c])) for c in columns])
    return path


def read_series(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
