"""Render result CSVs to deterministic SVG figures.

The renderer is file-driven: it sniffs the header row of a CSV produced by
the CLI and picks a figure layout for it.  SVG output is byte-reproducible:
the matplotlib ``svg.hashsalt`` is pinned, glyphs stay as text instead of
hashed paths, and the creation timestamp is stripped from the metadata.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["read_csv_columns", "render_file"]

_RC = {
    "svg.hashsalt": "fishnet",
    "svg.fonttype": "none",
    "figure.figsize": (6.4, 4.6),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def read_csv_columns(path):
    """Read a delimited file into ``(header, {name: float array})``.

    Every cell must parse as a float; the CLI only feeds this its own
    numeric outputs.  Raises ``ValueError`` for a missing header or a file
    with no data rows, so callers can refuse to emit an empty figure.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.empty((len(rows), len(header)), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        data[i] = [float(cell) for cell in row]
    return header, {name: data[:, j].copy() for j, name in enumerate(header)}


def _ystar(pf):
    """Double-log ordinate; values outside (0, 1) map to nan."""
    pf = np.asarray(pf, dtype=float)
    out = np.full(pf.shape, np.nan)
    ok = (pf > 0.0) & (pf < 1.0)
    out[ok] = np.log(-np.log1p(-pf[ok]))
    return out


def _save(fig, out_path):
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _weibull_axes(ax):
    ax.set_xlabel("ln sigma")
    ax.set_ylabel("ln(-ln(1 - Pf))")


def _render_cdf(cols, out_path):
    fig, (ax_lin, ax_wb) = plt.subplots(1, 2, figsize=(11, 4.6))
    sigma = cols["sigma"]
    ax_lin.plot(sigma, cols["Pf_emp"], "k.", ms=3, label="empirical")
    ax_wb.plot(np.log(sigma), cols["Ystar_emp"], "k.", ms=3, label="empirical")
    for name, values in cols.items():
        if name.startswith("Pf_") and name != "Pf_emp":
            label = name[3:].replace("_", " ")
            ax_lin.plot(sigma, values, lw=1.2, label=label)
            ax_wb.plot(np.log(sigma), _ystar(values), lw=1.2, label=label)
    ax_lin.set_xlabel("nominal stress")
    ax_lin.set_ylabel("Pf")
    _weibull_axes(ax_wb)
    ax_lin.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def _render_models(cols, out_path):
    fig, ax = plt.subplots()
    x = np.log(cols["sigma"])
    for name, values in cols.items():
        if name.startswith("Pf_"):
            ax.plot(x, _ystar(values), lw=1.2, label=name[3:].replace("_", " "))
    if "P1" in cols:
        ax.plot(x, _ystar(cols["P1"]), "k--", lw=0.9, label="single link")
    _weibull_axes(ax)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def _render_hist(cols, out_path):
    fig, ax = plt.subplots()
    centers = cols["bin_center"]
    width = np.min(np.diff(centers)) if centers.size > 1 else 1.0
    ax.bar(centers, cols["density"], width=0.92 * width, color="#4878a8")
    ax.set_xlabel("peak nominal stress")
    ax.set_ylabel("density")
    fig.tight_layout()
    _save(fig, out_path)


def _render_transition(cols, out_path):
    fig, ax = plt.subplots()
    x = np.log(cols["sigma"])
    for name, values in cols.items():
        if name == "sigma":
            continue
        style = "--" if name.endswith("_model") else "-"
        ax.plot(x, _ystar(values), style, lw=1.2, label=name[3:].replace("_", " "))
    _weibull_axes(ax)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def _render_eta(cols, out_path):
    fig, ax = plt.subplots()
    ax.plot(cols["link_id"], cols["eta"], ".", ms=4, color="#a84848")
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xlabel("link id")
    ax.set_ylabel("stress concentration")
    fig.tight_layout()
    _save(fig, out_path)


def _render_samples(cols, out_path):
    peaks = np.sort(cols["peak_stress"])
    n = peaks.size
    pf = (np.arange(1, n + 1) - 0.5) / n
    fig, ax = plt.subplots()
    ax.plot(np.log(peaks), _ystar(pf), "k.", ms=3)
    _weibull_axes(ax)
    fig.tight_layout()
    _save(fig, out_path)


_DISPATCH = [
    ({"sigma", "Pf_emp", "Ystar_emp"}, _render_cdf),
    ({"bin_center", "density"}, _render_hist),
    ({"link_id", "eta"}, _render_eta),
    ({"sample_id", "peak_stress"}, _render_samples),
    ({"sigma", "P1"}, _render_models),
    ({"sigma"}, _render_transition),
]


def render_file(csv_path, out_dir):
    """Render one CSV to ``<out_dir>/<stem>.svg``; returns the SVG path.

    Raises ``ValueError`` when the file is empty or its header matches no
    known layout.  On failure no output file is left behind.
    """
    header, cols = read_csv_columns(csv_path)
    names = set(header)
    for required, renderer in _DISPATCH:
        if required <= names:
            break
    else:
        raise ValueError(f"{csv_path}: unrecognized columns {header!r}")
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    out_path = os.path.join(out_dir, stem + ".svg")
    with matplotlib.rc_context(_RC):
        renderer(cols, out_path)
    return out_path
