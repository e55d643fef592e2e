#!/usr/bin/env python3
"""Plot an outbreak time series (sir-run output).

Usage: python scripts/plot_timeseries.py RUN_DIR
Reads RUN_DIR/series.csv, writes RUN_DIR/series.png.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from rydsim.runner import read_csv_columns


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", type=Path)
    args = ap.parse_args()

    cols = read_csv_columns(args.run_dir / "series.csv")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(cols["iteration"], cols["f_S"], label="$f_S$", color="tab:green")
    ax.plot(cols["iteration"], cols["f_I"], label="$f_I$", color="tab:red")
    ax.plot(cols["iteration"], cols["f_D"], label="$f_D$", color="black")
    ax.set_xlabel("iteration")
    ax.set_ylabel("state fraction")
    ax.legend()
    fig.tight_layout()
    out = args.run_dir / "series.png"
    fig.savefig(out, dpi=160)
    print(out)


if __name__ == "__main__":
    main()
