"""Shared rendering layer for the figure scripts.

Each script declares a FigureSpec naming the CSV columns it needs; render
validates the columns, plots them with fixed styles and writes the image
deterministically.  No physics is computed here: everything plotted comes
straight out of the CSV cells.
"""

import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class MissingColumn(RuntimeError):
    pass


@dataclass
class FigureSpec:
    csv_paths: list
    kind: str  # line | heatmap | scatter
    out_path: str
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logy: bool = False
    options: dict = field(default_factory=dict)


def load_columns(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    out = {}
    for col in required:
        vals = []
        for row in rows:
            try:
                vals.append(float(row[col]))
            except ValueError:
                vals.append(np.nan)
        out[col] = np.array(vals)
    return out


def render(spec):
    plt.rcParams.update(STYLE)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    if spec.kind == "line":
        for path, series in zip(spec.csv_paths, spec.options["series"]):
            cols = load_columns(path, [series["x"]] + [c for c, _, _ in series["y"]])
            for col, label, style in series["y"]:
                mask = ~np.isnan(cols[col])
                ax.plot(cols[series["x"]][mask], cols[col][mask], style, label=label)
        for level, label in spec.options.get("hlines", []):
            ax.axhline(level, color="k", lw=0.8, ls=":", label=label)
        ax.legend(fontsize=7)
    elif spec.kind == "heatmap":
        opts = spec.options
        cols = load_columns(spec.csv_paths[0], [opts["x"], opts["y"], opts["z"]])
        x = np.unique(cols[opts["x"]])
        y = np.unique(cols[opts["y"]])
        z = np.full((x.size, y.size), np.nan)
        xi = np.searchsorted(x, cols[opts["x"]])
        yi = np.searchsorted(y, cols[opts["y"]])
        z[xi, yi] = cols[opts["z"]]
        mesh = ax.pcolormesh(x, y, z.T, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=opts.get("zlabel", opts["z"]))
    elif spec.kind == "scatter":
        opts = spec.options
        cols = load_columns(spec.csv_paths[0], [opts["x"], opts["y"]])
        ax.plot(cols[opts["x"]], cols[opts["y"]], ".", ms=1.5, alpha=0.4)
        if "circle" in opts:
            cx, cy, radius = opts["circle"]
            phi = np.linspace(0, 2 * np.pi, 256)
            ax.plot(cx + radius * np.cos(phi), cy + radius * np.sin(phi), "k:", lw=1.2)
        ax.set_aspect("equal")
    else:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title, fontsize=9)
    fig.tight_layout()
    fig.savefig(spec.out_path, metadata={})
    plt.close(fig)
    return spec.out_path


def run_script(build_spec, argv):
    """Entry-point wrapper: argv -> spec -> render, MissingColumn exits 1."""
    try:
        spec = build_spec(argv)
        render(spec)
    except MissingColumn as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
