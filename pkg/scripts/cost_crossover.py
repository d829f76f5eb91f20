"""Aggregate cost per GPU for K=2 and K=3 against fault ratio, and their crossover."""

import argparse
import sys

from khopsim.analysis import BoundParams, monte_carlo_waste
from khopsim.cost import crossover, load_boms, per_gpu_cost_power
from khopsim.reporting import write_table_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gpu-cost", type=float, default=25_000.0, help="USD per GPU")
    ap.add_argument("--nodes", type=int, default=720)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--max-ratio", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    boms = load_boms()
    inter = {K: per_gpu_cost_power(boms[f"K{K}"]).cost for K in (2, 3)}
    xs = [i / 100 for i in range(int(round(args.max_ratio * 100)) + 1)]
    agg = {}
    for K in (2, 3):
        waste = [monte_carlo_waste(BoundParams(x, K, 4, N_s=args.nodes), args.trials, args.seed).mean
                 for x in xs]
        agg[K] = [args.gpu_cost * (w + x) + inter[K] for w, x in zip(waste, xs)]
    rows = [{"fault_ratio": x, "k2_per_gpu": a, "k3_per_gpu": b} for x, a, b in zip(xs, agg[2], agg[3])]
    out = open(args.out, "w") if args.out else sys.stdout
    write_table_csv(rows, out, "cost-crossover")
    x_c = crossover(xs, agg[2], agg[3])
    print(f"crossover: {x_c if x_c is None else f'{x_c:.2%}'} (GPU at ${args.gpu_cost:,.0f})",
          file=sys.stderr)


if __name__ == "__main__":
    main()
