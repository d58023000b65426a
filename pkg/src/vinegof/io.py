"""Reading and writing models, samples and reports."""
import csv
import json

import numpy as np

from .errors import DomainError, FormatError
from .rvine import RVineSpec


def dumps(obj):
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def model_from_json(obj, where="model"):
    try:
        return RVineSpec.from_dict(obj)
    except DomainError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def read_model(path):
    return model_from_json(read_json(path), str(path))


def write_model(spec, path):
    write_json(spec.to_dict(), path)


def read_data(path, d=None):
    """Read a comma-separated sample; a single non-numeric first row is a header."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                rows.append([float(f) for f in rec])
            except ValueError as exc:
                if lineno == 1 and not rows:
                    continue
                raise FormatError(f"{path}:{lineno}: non-numeric field") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise FormatError(f"{path}: rows have differing numbers of columns")
    arr = np.array(rows, dtype=float)
    if d is not None and arr.shape[1] != d:
        raise FormatError(f"{path}: expected {d} columns, found {arr.shape[1]}")
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise FormatError(f"{path}: all entries must lie strictly inside (0, 1)")
    return arr


def write_data(arr, path, header=None):
    """Write a sample with full double precision and LF line endings."""
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
