"""Trace and scatter CSVs to SVG.

SVG output is byte-for-byte reproducible: the hash salt is pinned and the
date metadata dropped.
"""

from __future__ import annotations

import csv
import io
import os
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import MalformedCsv
from .methods import TRACE_HEADER

SCATTER_HEADER = ("trial", "R", "gap_rel")
GAP_FLOOR = 1e-16


def _read_rows(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise MalformedCsv(f"{path}: empty file")
    reader = csv.reader(io.StringIO("".join(lines)))
    header = tuple(next(reader))
    return header, [row for row in reader if row]


def _column(rows, idx, path, name, allow_empty=False):
    out = []
    for row in rows:
        try:
            cell = row[idx]
        except IndexError:
            raise MalformedCsv(f"{path}: short row {row}") from None
        if cell == "":
            if not allow_empty:
                raise MalformedCsv(f"{path}: empty {name}")
            out.append(np.nan)
            continue
        try:
            out.append(float(cell))
        except ValueError:
            raise MalformedCsv(f"{path}: bad {name} value {cell!r}") from None
    return np.array(out)


def read_trace(path):
    """Columns of a trace CSV as a dict of arrays; gap_rel may be all-NaN."""
    header, rows = _read_rows(path)
    if header != TRACE_HEADER:
        raise MalformedCsv(f"{path}: header {header} != {TRACE_HEADER}")
    cols = {name: _column(rows, i, path, name, allow_empty=(name == "gap_rel"))
            for i, name in enumerate(TRACE_HEADER)}
    if np.any(np.diff(cols["iter"]) <= 0):
        raise MalformedCsv(f"{path}: iter not strictly increasing")
    return cols


def read_scatter(path):
    header, rows = _read_rows(path)
    if header[:3] != SCATTER_HEADER:
        raise MalformedCsv(f"{path}: header {header} does not start with {SCATTER_HEADER}")
    return {name: _column(rows, i, path, name) for i, name in enumerate(SCATTER_HEADER)}


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "multiradial"
    plt.rcParams["svg.fonttype"] = "path"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    return plt, fig, ax


def _save(plt, fig, out):
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_traces(paths: Sequence[str], out: str, labels: Optional[List[str]] = None,
                x_axis: str = "iterations", title: Optional[str] = None):
    """Relative gap (log scale) against iterations or wall time, one line per CSV.

    A trace without gap values falls back to f_best.  Gaps are floored at
    1e-16 so exact hits stay on the log axis.
    """
    if x_axis not in ("iterations", "time"):
        raise ValueError("x_axis must be 'iterations' or 'time'")
    traces = [read_trace(p) for p in paths]
    labels = labels or [os.path.splitext(os.path.basename(p))[0] for p in paths]
    if len(labels) != len(traces):
        raise ValueError("one label per trace")
    plt, fig, ax = _figure()
    ylabel = "relative gap"
    for cols, label in zip(traces, labels):
        x = cols["iter"] if x_axis == "iterations" else cols["wall_ms"] / 1000.0
        gap = cols["gap_rel"]
        if np.all(np.isnan(gap)):
            y, ylabel = cols["f_best"], "f_best"
        else:
            y = np.maximum(gap, GAP_FLOOR)
        ax.plot(x, y, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("iterations" if x_axis == "iterations" else "wall time (s)")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(traces) > 1:
        ax.legend()
    _save(plt, fig, out)


def plot_scatter(paths: Sequence[str], out: str, labels: Optional[List[str]] = None,
                 title: Optional[str] = None):
    """Final relative gap against min_j R_j, log-log, one marker per trial."""
    data = [read_scatter(p) for p in paths]
    labels = labels or [os.path.splitext(os.path.basename(p))[0] for p in paths]
    plt, fig, ax = _figure()
    for cols, label in zip(data, labels):
        ax.scatter(cols["R"], np.maximum(cols["gap_rel"], GAP_FLOOR), s=12, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("R (min interior radius)")
    ax.set_ylabel("final relative gap")
    if title:
        ax.set_title(title)
    if len(data) > 1:
        ax.legend()
    _save(plt, fig, out)


def write_scatter_csv(path, rows, config_hash=None):
    """rows: (trial, R, gap_rel) triples."""
    with open(path, "w", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config-hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCATTER_HEADER)
        for trial, R, gap in rows:
            w.writerow([trial, repr(float(R)), repr(float(gap))])
