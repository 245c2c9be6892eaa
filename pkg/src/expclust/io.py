"""CSV/JSON file formats for points, centers, assignments and instance metadata."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import CenterSet, Dataset, Objective
from .instances import Instance


class FormatError(ValueError):
    pass


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_points_csv(path) -> Dataset:
    """Rows of d floats. A header row is optional; a first header column named ``w``
    holds weights."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: no rows")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise FormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    for n, r in enumerate(rows, start=2 if header else 1):
        if len(r) != width:
            raise FormatError(f"{path}:{n}: expected {width} columns, got {len(r)}")
    try:
        arr = np.array(rows, dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{path}: non-numeric value ({e})") from None
    try:
        if header and header[0].lower() == "w":
            if width < 2:
                raise FormatError(f"{path}: weight column but no coordinates")
            return Dataset(arr[:, 1:], arr[:, 0])
        return Dataset(arr)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


def read_centers_csv(path) -> CenterSet:
    ds = read_points_csv(path)
    try:
        return CenterSet(ds.points)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


def _write_rows(path, header, arr) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_points_csv(path, X: Dataset, with_weights: bool = True) -> None:
    d = X.dimension
    cols = [f"x{i}" for i in range(d)]
    if with_weights:
        _write_rows(path, ["w", *cols], np.column_stack([X.weights, X.points]))
    else:
        _write_rows(path, cols, X.points)


def write_centers_csv(path, C: CenterSet) -> None:
    _write_rows(path, [f"x{i}" for i in range(C.dimension)], C.centers)


def write_assignment_csv(path, assignment) -> None:
    with open(path, "w") as fh:
        fh.write("center\n")
        fh.writelines(f"{int(a)}\n" for a in assignment)


def read_assignment_csv(path) -> np.ndarray:
    with open(path) as fh:
        vals = [ln.strip() for ln in fh if ln.strip()]
    if vals and not _is_number(vals[0]):
        vals = vals[1:]
    try:
        return np.array([int(v) for v in vals], dtype=np.int64)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


INSTANCE_FILES = {"data": "data.csv", "centers": "centers.csv",
                  "assignment": "assignment.csv", "meta": "meta.json"}


def write_instance(directory, inst: Instance, seed: int | None = None) -> dict:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    meta = inst.metadata()
    if seed is not None:
        meta["seed"] = seed
    write_points_csv(out / INSTANCE_FILES["data"], inst.data)
    write_centers_csv(out / INSTANCE_FILES["centers"], inst.centers)
    write_assignment_csv(out / INSTANCE_FILES["assignment"], inst.assignment)
    (out / INSTANCE_FILES["meta"]).write_text(json.dumps(meta, sort_keys=True) + "\n")
    return meta


def read_metadata(path) -> dict:
    try:
        meta = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(meta, dict):
        raise FormatError(f"{path}: expected an object")
    return meta


def read_instance(directory) -> Instance:
    d = Path(directory)
    meta = read_metadata(d / INSTANCE_FILES["meta"])
    X = read_points_csv(d / INSTANCE_FILES["data"])
    C = read_centers_csv(d / INSTANCE_FILES["centers"])
    a = read_assignment_csv(d / INSTANCE_FILES["assignment"])
    extra = {k: v for k, v in meta.items() if k not in ("k", "d", "known_opt", "objective")}
    return Instance(X, C, a, Objective(meta.get("objective", "l1")), meta.get("known_opt"), extra)
