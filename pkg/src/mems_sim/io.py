"""CSV / JSON serialisation of trajectories, snapshots and reports."""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .theory import TRAJECTORY_COLUMNS, DiagnosticsRecord

SNAPSHOT_DIR = "snapshots"
SNAPSHOT_INDEX = "index.csv"


def fmt(value):
    """17 significant digits so reruns diff byte-for-byte."""
    if value is None:
        return ""
    return f"{float(value):.17g}"


def write_trajectory_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for rec in records:
            w.writerow([fmt(v) for v in rec.row()])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected trajectory columns {header}")
        records = []
        for row in reader:
            vals = dict(zip(header, (float(v) if v else math.nan for v in row)))
            records.append(DiagnosticsRecord(**vals))
    return records


def write_snapshot_csv(path, x, u):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for xi, ui in zip(x, u):
            w.writerow([fmt(xi), fmt(ui)])


def read_profile_csv(path):
    """Read an ``x,u`` table; returns two arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_snapshots(out_dir, x, states, steps):
    snap_dir = Path(out_dir) / SNAPSHOT_DIR
    snap_dir.mkdir(parents=True, exist_ok=True)
    with open(snap_dir / SNAPSHOT_INDEX, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "file"])
        for step, state in zip(steps, states):
            name = f"snapshot_{step:06d}.csv"
            write_snapshot_csv(snap_dir / name, x, state.u)
            w.writerow([step, fmt(state.t), name])


def read_snapshots(out_dir):
    """List of ``(step, t, u)`` in stored order."""
    snap_dir = Path(out_dir) / SNAPSHOT_DIR
    index = snap_dir / SNAPSHOT_INDEX
    if not index.exists():
        raise FileNotFoundError(f"no snapshot index at {index}")
    out = []
    with open(index, newline="") as fh:
        for row in csv.DictReader(fh):
            _, u = read_profile_csv(snap_dir / row["file"])
            out.append((int(row["step"]), float(row["t"]), u))
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
