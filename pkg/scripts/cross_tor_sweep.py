"""Cross-ToR traffic fraction of the fat-tree orchestrator and the greedy baseline."""

import argparse
import sys

import numpy as np

from khopsim.config import ClusterConfig
from khopsim.reporting import write_table_csv
from khopsim.scenario import cross_tor_trial


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=2048)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--nodes-per-tor", type=int, default=2)
    ap.add_argument("--nodes-per-domain", type=int, default=1024)
    ap.add_argument("--tp", type=int, default=32)
    ap.add_argument("--job-ratios", default="0.85")
    ap.add_argument("--ratios", default="0.01,0.03,0.05,0.06,0.07,0.08,0.1")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    cfg = ClusterConfig(n=args.nodes, R=4, K=args.k, p=args.nodes_per_tor, d=args.nodes_per_domain)
    rows = []
    for job_ratio in (float(x) for x in args.job_ratios.split(",")):
        for ratio in (float(x) for x in args.ratios.split(",")):
            trials = [cross_tor_trial(cfg, args.tp, job_ratio, ratio, s) for s in range(args.seeds)]
            opt = np.array([t.optimized for t in trials])
            greedy = np.array([t.greedy for t in trials])
            rows.append({"job_ratio": job_ratio, "fault_ratio": ratio,
                         "optimized_mean": float(np.nanmean(opt)) if (~np.isnan(opt)).any() else float("nan"),
                         "greedy_mean": float(np.nanmean(greedy)) if (~np.isnan(greedy)).any() else float("nan"),
                         "unplaceable": int(np.isnan(opt).sum())})
    out = open(args.out, "w") if args.out else sys.stdout
    write_table_csv(rows, out, "cross-tor-sweep")


if __name__ == "__main__":
    main()
