"""Figures for scenario output.

Reads the CSV files a scenario writes into ``<out>/<scenario>/`` and saves
a PNG next to each one that has a natural picture.  Uses the Agg canvas
directly, so no display or global pyplot state is involved.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["plot_scenario", "read_table"]

_PNG_META = {"Software": None}


def read_table(path) -> dict:
    """CSV columns as float arrays (non-numeric columns stay strings)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for k, name in enumerate(header):
        vals = [r[k] for r in body]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return cols


def _figure(ncols=1, width=5.0, height=3.6):
    fig = Figure(figsize=(width * ncols, height))
    FigureCanvasAgg(fig)
    axes = [fig.add_subplot(1, ncols, k + 1) for k in range(ncols)]
    return fig, axes


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    return path


def _by_value(col):
    return [(v, col == v) for v in np.unique(col)]


def _profiles(data, out):
    fig, (aw, au) = _figure(2)
    for t, sel in _by_value(data["t"]):
        aw.plot(data["x"][sel], data["re_w"][sel], label=f"t = {t:.4g}")
        line, = au.plot(data["x"][sel], data["re_u"][sel], label=f"Re u, t = {t:.4g}")
        if np.max(np.abs(data["im_u"][sel])) > 1e-9:
            au.plot(data["x"][sel], data["im_u"][sel], ls="--", color=line.get_color(),
                    label=f"Im u, t = {t:.4g}")
    aw.set_xlabel("x")
    aw.set_ylabel("Re w")
    au.set_xlabel("x")
    au.set_ylabel("u")
    aw.legend(fontsize=7)
    au.legend(fontsize=7)
    return _save(fig, out)


def _tgc(data, out, events=None):
    fig, (ax,) = _figure()
    t = data["t_gc"]
    ax.plot(data["x0"], np.where(t > 0, t, np.nan), lw=1)
    top = 1.0
    if events is not None and len(events["t_s"]):
        ax.plot(events["re_x0"], events["t_s"], "o", ms=4, label="events")
        top = 3.0 * float(np.max(events["t_s"]))
        ax.legend(fontsize=7)
    ax.set_ylim(0.0, top)
    ax.set_xlabel("x0")
    ax.set_ylabel("t_gc(x0)")
    return _save(fig, out)


def _folded(data, out):
    fig, (ax,) = _figure()
    keep = data["kept"] > 0.5
    ax.plot(data["x"], data["re_u"], ls=":", lw=1, color="0.5", label="multivalued curve")
    xs, us = data["x"].copy(), data["re_u"].copy()
    us[~keep] = np.nan
    ax.plot(xs, us, lw=1.5, label="loop removed")
    ax.set_xlabel("x")
    ax.set_ylabel("Re u")
    ax.legend(fontsize=7)
    return _save(fig, out)


def _branches(data, out):
    fig, (ar, ai) = _figure(2)
    for b, sel in _by_value(data["branch"]):
        ar.plot(data["x"][sel], data["re_w"][sel], ".", ms=1.5, label=f"branch {int(b)}")
        ai.plot(data["x"][sel], data["im_w"][sel], ".", ms=1.5)
    ar.set_xlabel("x")
    ar.set_ylabel("Re w")
    ai.set_xlabel("x")
    ai.set_ylabel("Im w")
    ar.legend(fontsize=7, markerscale=4)
    return _save(fig, out)


def _jump(data, out):
    fig, (ar, ai) = _figure(2)
    for part, ax in (("re", ar), ("im", ai)):
        ax.plot(data["x"], data[f"{part}_u_left"], label="from the left")
        ax.plot(data["x"], data[f"{part}_u_right"], ls=":", label="from the right")
        ax.set_xlabel("x")
        ax.set_ylabel(f"{part.capitalize()} u")
        ax.legend(fontsize=7)
    return _save(fig, out)


def _table(data, out):
    fig, (at, ax) = _figure(2)
    at.plot(data["eps"], data["t_s1"], "o-", label="t_s1")
    at.plot(data["eps"], data["t_s2"], "s-", label="t_s2")
    ax.plot(data["eps"], data["x_s1"], "o-", label="x_s1")
    ax.plot(data["eps"], data["x_s2"], "s-", label="x_s2")
    for a, lab in ((at, "shock time"), (ax, "shock position")):
        a.set_xlabel("eps")
        a.set_ylabel(lab)
        a.legend(fontsize=7)
    return _save(fig, out)


def plot_scenario(directory) -> list:
    """Render every recognised CSV in a scenario directory; returns PNG paths."""
    directory = Path(directory)
    written = []
    events = directory / "events.csv"
    ev = read_table(events) if events.exists() else None
    for path in sorted(directory.glob("*.csv")):
        stem = path.stem
        out = path.with_suffix(".png")
        if stem == "profiles":
            written.append(_profiles(read_table(path), out))
        elif stem == "t_gc":
            written.append(_tgc(read_table(path), out, ev))
        elif stem.startswith("folded"):
            written.append(_folded(read_table(path), out))
        elif stem.startswith("branches"):
            written.append(_branches(read_table(path), out))
        elif stem.startswith("jump"):
            written.append(_jump(read_table(path), out))
        elif stem == "table":
            written.append(_table(read_table(path), out))
    return written
