"""CSV and JSON file conventions.

Matrix CSV: plain numeric, no header, d rows by d columns.  Dataset CSV:
n rows by d columns, one optional header row auto-detected on read.  Vector
CSV: one value per line.  All numeric output uses 12 significant digits so
reruns are byte-stable.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch

FLOAT_FORMAT = "%.12g"


def format_float(x: float) -> str:
    return FLOAT_FORMAT % x


def write_matrix_csv(path, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    np.savetxt(path, m, delimiter=",", fmt=FLOAT_FORMAT)


def read_matrix_csv(path) -> np.ndarray:
    m = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{path}: expected a square matrix, got shape {m.shape}")
    return m


def write_dataset_csv(path, x: np.ndarray, header: list[str] | None = None) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in x:
            writer.writerow([format_float(v) for v in row])


def _is_numeric_row(fields: list[str]) -> bool:
    try:
        for token in fields:
            float(token)
        return True
    except ValueError:
        return False


def read_dataset_csv(path) -> tuple[np.ndarray, list[str] | None]:
    """Read an observations-by-features CSV; a single non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty dataset file")
    header = None
    if not _is_numeric_row(rows[0]):
        header = [token.strip() for token in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: header but no data rows")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise DimensionMismatch(f"{path}: ragged rows")
    return np.array([[float(v) for v in row] for row in rows]), header


def write_vector_csv(path, v: np.ndarray) -> None:
    v = np.asarray(v, dtype=np.float64).ravel()
    with open(path, "w") as fh:
        for value in v:
            fh.write(format_float(value) + "\n")


def read_vector_csv(path) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, delimiter=",", dtype=np.float64)).ravel()


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
