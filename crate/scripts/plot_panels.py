#!/usr/bin/env python3
"""Plot the per-run panels written by `asf experiment` (panels/seed*_tm*.csv).

Usage: plot_panels.py OUT_DIR [--save DIR]
"""
import argparse
import csv
import pathlib

import matplotlib.pyplot as plt


def read_panel(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    cols = {name: [float(r[i]) for r in body] for i, name in enumerate(header)}
    return header, cols


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--save", type=pathlib.Path, help="write PNGs here instead of showing")
    args = ap.parse_args()

    panels = sorted((args.out_dir / "panels").glob("seed*_tm*.csv"))
    if not panels:
        raise SystemExit(f"no panels under {args.out_dir / 'panels'}")
    for path in panels:
        header, cols = read_panel(path)
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.fill_between(cols["xi"], cols["truth"], step="mid", alpha=0.3, label="truth")
        for name in header[2:]:
            ax.step(cols["xi"], cols[name], where="mid", label=name, lw=1)
        ax.set_xlabel("xi")
        ax.set_ylabel("gamma (unit sum)")
        ax.set_title(path.stem)
        ax.legend(fontsize="small")
        fig.tight_layout()
        if args.save:
            args.save.mkdir(parents=True, exist_ok=True)
            fig.savefig(args.save / f"{path.stem}.png", dpi=120)
            plt.close(fig)
    if not args.save:
        plt.show()


if __name__ == "__main__":
    main()
