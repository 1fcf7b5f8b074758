"""CSV import/export of realization matrices, one file per matrix.

Each file starts with a ``rows=<r>,cols=<c>`` header line followed by ``r``
comma-separated data rows (no rows at all when there are no columns).
"""
import csv
from pathlib import Path

import numpy as np

from ..exceptions import ParseError
from .systems import LtiSystem, TransferFunction


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(f"rows={M.shape[0]},cols={M.shape[1]}\n")
        w = csv.writer(fh, lineterminator="\n")
        if M.shape[1] == 0:
            return
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def read_matrix(path):
    path = Path(path)
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file")
    try:
        parts = dict(kv.split("=") for kv in lines[0].split(","))
        rows, cols = int(parts["rows"]), int(parts["cols"])
    except (ValueError, KeyError):
        raise ParseError(f"{path}:1: expected 'rows=<r>,cols=<c>' header") from None
    data = np.zeros((rows, cols))
    if cols == 0:
        return data
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        raise ParseError(f"{path}: header says {rows} rows, found {len(body)}")
    for i, ln in enumerate(body):
        try:
            vals = [float(v) for v in ln.split(",")]
        except ValueError:
            raise ParseError(f"{path}:{i + 2}: non-numeric entry") from None
        if len(vals) != cols:
            raise ParseError(f"{path}:{i + 2}: expected {cols} values, got {len(vals)}")
        data[i] = vals
    return data


def save_system(directory, sys, prefix=""):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in "ABCD":
        write_matrix(directory / f"{prefix}{name}.csv", getattr(sys, name))


def load_system(directory, prefix=""):
    directory = Path(directory)
    mats = [read_matrix(directory / f"{prefix}{name}.csv") for name in "ABCD"]
    return LtiSystem(*mats)


def save_transfer_function(directory, tf, prefix=""):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / f"{prefix}num.csv", np.atleast_2d(tf.num))
    write_matrix(directory / f"{prefix}den.csv", np.atleast_2d(tf.den))


def load_transfer_function(directory, prefix=""):
    directory = Path(directory)
    num = read_matrix(directory / f"{prefix}num.csv").ravel()
    den = read_matrix(directory / f"{prefix}den.csv").ravel()
    return TransferFunction(num, den)
