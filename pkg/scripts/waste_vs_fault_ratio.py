"""Mean waste ratio against node fault ratio for the K-hop ring and the baselines.

Writes a versioned CSV, one row per (architecture, fault ratio).
"""

import argparse
import sys

from khopsim.config import ClusterConfig, JobSpec
from khopsim.reporting import write_table_csv
from khopsim.scenario import Scenario, run_scenario

ARCHS = ("infhbd", "big-switch", "nvl-36", "nvl-72", "nvl-576", "tpuv4", "sip-ring")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=720)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--tp", type=int, default=32)
    ap.add_argument("--ratios", default="0,0.01,0.02,0.03,0.0368,0.05,0.07,0.1")
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    cfg = ClusterConfig(n=args.nodes, R=4, K=args.k)
    job = JobSpec(t=args.tp, s=int(cfg.gpus * 0.85) // args.tp * args.tp, r=4)
    rows = []
    for ratio in (float(x) for x in args.ratios.split(",")):
        for arch in ARCHS:
            sc = Scenario(cluster=cfg, job=job, fault_ratio=ratio, steps=args.steps,
                          seed=args.seed, architecture=arch)
            s = run_scenario(sc)[1]
            rows.append({"architecture": arch, "fault_ratio": ratio,
                         "waste_mean": s["waste_ratio"]["mean"], "waste_p99": s["waste_ratio"]["p99"]})
    out = open(args.out, "w") if args.out else sys.stdout
    write_table_csv(rows, out, "waste-sweep")


if __name__ == "__main__":
    main()
