#!/usr/bin/env python3
"""Plot a threshold scan CSV (sis-scan or multi-domain-scan output).

Usage: python scripts/plot_threshold.py RUN_DIR [--normalization occupied|all]
Reads RUN_DIR/scan.csv, writes RUN_DIR/scan.png.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rydsim.runner import read_csv_columns


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--normalization", choices=("occupied", "all"), default="occupied")
    args = ap.parse_args()

    cols = read_csv_columns(args.run_dir / "scan.csv")
    x = cols["f_R"]
    if args.normalization == "occupied":
        occ = cols["f_S"] + cols["f_I"]
        y = np.where(occ > 0, cols["f_I"] / np.where(occ > 0, occ, 1.0), 0.0)
        label = "final $f_I$ / occupied"
    else:
        y = cols["f_I"]
        label = "final $f_I$"

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(x, y, yerr=cols["stddev"], fmt="o", ms=4, capsize=2)
    ax.set_xlabel("fill fraction $f_R$")
    ax.set_ylabel(label)
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    out = args.run_dir / "scan.png"
    fig.savefig(out, dpi=160)
    print(out)


if __name__ == "__main__":
    main()
