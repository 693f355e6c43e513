"""Tabular CSV/JSON export of trajectories, dressed frames, sweeps and scans.

Floats are written with 17 significant digits and lines end in LF, so identical
inputs give byte-identical files.  JSON mirrors the CSV: ``{"columns": [...],
"rows": [[...], ...]}`` with NaN written as ``null``.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .dressed import DressedFrame
from .propagator import Trajectory
from .sweep import SweepResult

FORMATS = ("csv", "json")


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def trajectory_table(tr: Trajectory):
    n = tr.n_levels
    a = tr.amplitudes
    header = ["t"]
    cols = [tr.times]
    for i in range(n):
        header += [f"re_a{i + 1}", f"im_a{i + 1}"]
        cols += [a[:, i].real, a[:, i].imag]
    pops = tr.populations
    for i in range(n):
        header.append(f"rho{i + 1}{i + 1}")
        cols.append(pops[:, i])
    for i, j in _pairs(n):
        header.append(f"abs_rho{i + 1}{j + 1}")
        cols.append(np.abs(a[:, i] * a[:, j].conj()))
    header.append("norm")
    cols.append(tr.norm)
    return header, np.column_stack(cols)


def frame_table(df: DressedFrame):
    n = df.n_levels
    header = ["t"] + [f"lambda{k + 1}" for k in range(n)] + [f"pop_d{k + 1}" for k in range(n)]
    pops = df.populations if df.populations is not None else np.full_like(df.eigenvalues, np.nan)
    cols = [df.times[:, None], df.eigenvalues, pops]
    for i, j in _pairs(n):
        header.append(f"V_{i + 1}{j + 1}")
        cols.append(df.couplings[:, i, j][:, None])
    return header, np.hstack(cols)


def sweep_table(res: SweepResult):
    xx, yy = np.meshgrid(res.x.values, res.y.values)
    return ["x", "y", "value"], np.column_stack([xx.ravel(), yy.ravel(), res.grid.ravel()])


def columns_table(columns: dict):
    header = list(columns)
    return header, np.column_stack([np.asarray(columns[k], dtype=float) for k in header])


def to_table(data):
    """``(header, rows)`` for any exportable object."""
    if isinstance(data, Trajectory):
        return trajectory_table(data)
    if isinstance(data, DressedFrame):
        return frame_table(data)
    if isinstance(data, SweepResult):
        return sweep_table(data)
    if isinstance(data, dict):
        return columns_table(data)
    raise TypeError(f"cannot export {type(data).__name__}")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _json_num(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def render(data, fmt: str = "csv") -> str:
    header, rows = to_table(data)
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        cols = ", ".join(f'"{h}"' for h in header)
        body = ",\n    ".join("[" + ", ".join(_json_num(v) for v in row) + "]" for row in rows)
        return f'{{\n  "columns": [{cols}],\n  "rows": [\n    {body}\n  ]\n}}\n'
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def write_outputs(data, fmt: str, path) -> Path:
    """Write ``data`` to ``path`` in ``fmt``; returns the path written."""
    text = render(data, fmt)
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
