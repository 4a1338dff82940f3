"""Atomic CSV/JSON writers with locale-independent 17-digit floats."""
from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"refusing to write non-finite value {x}")
        return format(float(x), ".17g")
    return str(x)


def _atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def write_csv(path, header, rows) -> Path:
    lines = [",".join(header)]
    for r in rows:
        if len(r) != len(header):
            raise ValueError("row length does not match header")
        lines.append(",".join(fmt(x) for x in r))
    return _atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple[list, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj) -> Path:
    return _atomic_write(path, json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def save_trajectory(path, traj) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "wb") as fh:
        np.savez(fh, data=traj.data, t0=traj.t0, dt=traj.dt, n=traj.grid.n)
    os.replace(tmp, path)
    return path


def load_trajectory(path):
    from .dynamics import Trajectory
    from .spectral import TorusGrid
    with np.load(path) as z:
        return Trajectory(TorusGrid(int(z["n"])), float(z["t0"]), float(z["dt"]), z["data"])
