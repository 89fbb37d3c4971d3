"""Dispersion figure output: standalone plot scripts and rendered files.

The CLI dispersion path writes delimited data; this module turns those CSV
files into eigenphase-branch figures, either by emitting a self-contained
matplotlib script (so the plot can be regenerated or edited without this
package) or by rendering PNG/PDF files directly next to the data.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence


_SCRIPT_TEMPLATE = '''"""Plot dispersion branches from walk CSV output (auto-generated)."""

import csv
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_FILES = {csv_files!r}
OUT_FILE = {out_file!r}


def read_branches(path):
    ks, plus, minus = [], [], []
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            ks.append(float(row["k"]))
            plus.append(float(row["omega_plus"]))
            minus.append(float(row["omega_minus"]))
    return ks, plus, minus


def main():
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for path in CSV_FILES:
        ks, plus, minus = read_branches(path)
        label = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
        (line,) = ax.plot(ks, plus, lw=1.4, label=label)
        ax.plot(ks, minus, lw=1.4, color=line.get_color())
    ax.set_xlabel("k")
    ax.set_ylabel("omega(k)")
    ax.set_xlim(-math.pi, math.pi)
    ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT_FILE, dpi=160)
    print("wrote", OUT_FILE)


if __name__ == "__main__":
    main()
'''


def dispersion_plot_script(csv_paths: Sequence[str], out_file: str = "dispersion.png") -> str:
    """Source of a standalone script plotting branch curves from the CSVs."""
    return _SCRIPT_TEMPLATE.format(
        csv_files=[str(p) for p in csv_paths], out_file=str(out_file)
    )


def render_dispersion_csvs(csv_paths: Iterable[str], out_file: str, title: str = "") -> None:
    """Render omega_plus/omega_minus curves from CSV files straight to disk."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for path in csv_paths:
        ks, plus, minus = [], [], []
        with open(path, newline="") as handle:
            for row in csv.DictReader(handle):
                ks.append(float(row["k"]))
                plus.append(float(row["omega_plus"]))
                minus.append(float(row["omega_minus"]))
        label = Path(path).stem
        (line,) = ax.plot(ks, plus, lw=1.4, label=label)
        ax.plot(ks, minus, lw=1.4, color=line.get_color())
    ax.set_xlabel("k")
    ax.set_ylabel("omega(k)")
    if title:
        ax.set_title(title)
    ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_file, dpi=160)
    plt.close(fig)
