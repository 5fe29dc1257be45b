"""CSV loading with explicit schema failures."""

import csv
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Dataset file missing, empty, or without a required column."""


def load_csv(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"{path}: no such dataset")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: header but no data rows")
    table = {}
    for j, name in enumerate(names):
        raw = [row[j] for row in rows]
        try:
            table[name] = np.array([float(v) for v in raw])
        except ValueError:
            table[name] = raw
    return table


def numeric(table: dict, path, *names) -> list[np.ndarray]:
    cols = []
    for name in names:
        if name not in table:
            raise SchemaError(f"{path}: missing column {name!r}")
        col = table[name]
        if not isinstance(col, np.ndarray):
            raise SchemaError(f"{path}: column {name!r} is not numeric")
        cols.append(col)
    return cols


def text(table: dict, path, name) -> list[str]:
    if name not in table:
        raise SchemaError(f"{path}: missing column {name!r}")
    col = table[name]
    if isinstance(col, np.ndarray):
        col = [str(v) for v in col]
    return col
