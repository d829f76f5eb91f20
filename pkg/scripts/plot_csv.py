"""Render a khopsim CSV as a line plot (needs matplotlib; not part of the tool)."""

import argparse

from khopsim.reporting import read_table_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--x", required=True)
    ap.add_argument("--y", required=True, help="comma separated columns")
    ap.add_argument("--group", help="column whose values become separate lines")
    ap.add_argument("--out", default="plot.png")
    args = ap.parse_args(argv)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.csv) as fh:
        rows = read_table_csv(fh)
    groups = sorted({r[args.group] for r in rows}) if args.group else [None]
    fig, ax = plt.subplots(figsize=(6, 4))
    for g in groups:
        sel = [r for r in rows if g is None or r[args.group] == g]
        for y in args.y.split(","):
            label = y if g is None else f"{g} {y}"
            ax.plot([float(r[args.x]) for r in sel], [float(r[y]) for r in sel], marker="o", label=label)
    ax.set_xlabel(args.x)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
