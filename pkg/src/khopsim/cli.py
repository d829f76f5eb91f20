"""Command-line driver: ``khopsim <verb> [options]``."""

from __future__ import annotations

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import analysis, collectives, cost
from .config import ClusterConfig, ConfigError, JobSpec, load_cluster_config
from .faults import TraceParseError, dump_trace, load_trace, normalize_trace_8to4
from .orchestration import (UnsatisfiableError, orchestrate_dcn_free, orchestrate_fat_tree,
                            orchestrate_greedy_baseline)
from .reporting import dump_json, write_report_csv, write_table_csv
from .scenario import MODES, Scenario, load_scenario, run_scenario, sweep_fault_ratios
from .topology import build_alltoall_topology, build_deployment, build_khop_topology

log = logging.getLogger("khopsim")


def _emit(args, name: str, text: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
        print(out / name)
    else:
        sys.stdout.write(text)


def _cluster(args) -> ClusterConfig:
    if args.config:
        return load_cluster_config(args.config)
    if getattr(args, "nodes", None) is None:
        raise ConfigError("nodes: give --config or --nodes")
    return ClusterConfig(n=args.nodes, R=args.gpus_per_node, K=args.k, p=args.nodes_per_tor,
                         d=args.nodes_per_domain, ring_closed=args.ring_closed)


def _int_list(text: Optional[str]) -> List[int]:
    if not text:
        return []
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def cmd_topo(args) -> int:
    cfg = _cluster(args)
    if args.variant == "alltoall":
        topo = build_alltoall_topology(cfg)
    elif args.variant == "deployed":
        topo = build_deployment(cfg).topology()
    else:
        topo = build_khop_topology(cfg)
    _emit(args, "topology.txt", topo.edge_list_text())
    return 0


def cmd_place(args) -> int:
    cfg = _cluster(args)
    topo = build_khop_topology(cfg)
    F = set(_int_list(args.faults))
    if args.trace:
        with open(args.trace) as fh:
            tl = load_trace(fh)
        if tl.node_count != cfg.n:
            tl = tl.remap(cfg.n)
        F |= tl.faulty_at(args.time)
    scale = args.scale if args.scale is not None else int(cfg.gpus * args.scale_ratio) // args.tp * args.tp
    job = JobSpec(t=args.tp, s=scale, r=cfg.R)
    if args.mode == "dcn-free":
        scheme = orchestrate_dcn_free(topo, F, job.m)
    elif args.mode == "fat-tree":
        scheme = orchestrate_fat_tree(topo, F, job, check_monotonic=args.check_monotonic)
    else:
        scheme = orchestrate_greedy_baseline(topo, F, job, seed=args.seed)
    if scheme is None:
        raise UnsatisfiableError(f"no {args.mode} placement hosts {job.s} GPUs with {len(F)} faulty nodes")
    _emit(args, "placement.json", scheme.to_json() + "\n")
    return 0


def cmd_simulate(args) -> int:
    if args.config:
        sc = load_scenario(args.config)
        sc.seed = args.seed if args.seed is not None else sc.seed
    else:
        cfg = _cluster(args)
        scale = int(cfg.gpus * args.scale_ratio) // args.tp * args.tp
        sc = Scenario(cluster=cfg, job=JobSpec(t=args.tp, s=scale, r=cfg.R), trace=args.trace,
                      fault_ratio=None if args.trace else args.fault_ratio, steps=args.steps,
                      mode=args.mode, architecture=args.architecture, seed=args.seed or 0)
    if args.architecture_override:
        sc.architecture = args.architecture_override
    ratios = _float_list(args.fault_ratios) or list(sc.fault_ratios)
    if ratios:
        results = sweep_fault_ratios(sc, ratios, workers=args.workers)
        table = []
        for ratio, s in results:
            row = {"fault_ratio": ratio}
            for col in ("waste_ratio", "max_job_scale", "cross_tor_fraction"):
                row[f"{col}_mean"] = s[col]["mean"] if s.get(col) and s[col]["mean"] is not None else float("nan")
            row["fault_waiting_seconds"] = s["fault_waiting_seconds"]
            table.append(row)
        if args.format == "json":
            buf = io.StringIO()
            dump_json([{"fault_ratio": r, "summary": s} for r, s in results], buf)
            _emit(args, "sweep.json", buf.getvalue())
        else:
            buf = io.StringIO()
            write_table_csv(table, buf, "sweep")
            _emit(args, "sweep.csv", buf.getvalue())
        return 0
    rows, summary = run_scenario(sc)
    buf = io.StringIO()
    write_report_csv(rows, buf)
    sbuf = io.StringIO()
    dump_json(summary, sbuf)
    if args.out:
        _emit(args, "report.csv", buf.getvalue())
        _emit(args, "summary.json", sbuf.getvalue())
    else:
        sys.stdout.write(sbuf.getvalue() if args.format == "json" else buf.getvalue())
    return 0


def _float_list(text: Optional[str]) -> List[float]:
    if not text:
        return []
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def cmd_bound(args) -> int:
    if args.sweep:
        rows = analysis.bound_grid({4: args.ps4, 8: args.ps8}, N_t=args.nt)
    else:
        params = analysis.BoundParams(P_s=args.ps, K=args.k_hop, R=args.r, N_t=args.nt, N_s=args.ns)
        row = {"R": params.R, "K": params.K, "P_s": params.P_s, "N_t": params.N_t,
               "bound": analysis.waste_ratio_bound(params),
               "breakpoints_per_node": analysis.breakpoint_expectation(params)}
        if args.trials:
            mc = analysis.monte_carlo_waste(params, args.trials, args.seed or 0)
            row.update(mc_mean=mc.mean, mc_ci=mc.ci, mc_excess_mean=mc.excess_mean,
                       mc_excess_ci=mc.excess_ci)
        rows = [row]
    buf = io.StringIO()
    if args.format == "json":
        dump_json(rows, buf)
        _emit(args, "bound.json", buf.getvalue())
    else:
        write_table_csv(rows, buf, "bound")
        _emit(args, "bound.csv", buf.getvalue())
    return 0


def cmd_cost(args) -> int:
    boms = cost.load_boms(args.bom)
    names = sorted(boms) if args.arch == "all" else [args.arch]
    rows = []
    for name in names:
        if name not in boms:
            raise ConfigError(f"arch: unknown architecture {name!r}; known: {sorted(boms)}")
        f = cost.per_gpu_cost_power(boms[name])
        rows.append({"architecture": name, "cost_per_gpu": round(f.cost, 4),
                     "power_per_gpu": round(f.power, 4),
                     "cost_per_gpu_per_gbps": round(f.cost_per_gbps, 6),
                     "power_per_gpu_per_gbps": round(f.power_per_gbps, 6)})
    buf = io.StringIO()
    if args.format == "json":
        dump_json(rows, buf)
        _emit(args, "cost.json", buf.getvalue())
    else:
        write_table_csv(rows, buf, "cost")
        _emit(args, "cost.csv", buf.getvalue())
    return 0


def cmd_alltoall(args) -> int:
    schedule = collectives.binary_exchange_schedule(args.p, args.m)
    buf = io.StringIO()
    write_table_csv(collectives.round_table(schedule, args.m), buf, "alltoall")
    if args.verify:
        states = collectives.simulate_exchange(schedule, args.p, args.m)
        ok = all(collectives.final_blocks(st) == {(o, st.node) for o in range(args.p)}
                 for st in states)
        per_node = [sum(st.sent_units) for st in states]
        expected = args.m * args.p * (args.p.bit_length() - 1) // 2
        buf.write(f"# verify oracle={'ok' if ok else 'MISMATCH'} "
                  f"units_per_node={per_node[0]} expected={expected}\n")
        if not ok or any(u != expected for u in per_node):
            _emit(args, "alltoall.csv", buf.getvalue())
            return 1
    _emit(args, "alltoall.csv", buf.getvalue())
    return 0


def cmd_trace_stats(args) -> int:
    with open(args.trace) as fh:
        tl = load_trace(fh, horizon=args.horizon)
    stats = tl.stats()
    stats["mean_duration"] = tl.mean_duration
    stats["nodes"] = tl.node_count
    stats["horizon"] = tl.horizon
    buf = io.StringIO()
    if args.format == "json":
        dump_json(stats, buf)
    else:
        write_table_csv([stats], buf, "trace-stats")
    _emit(args, "trace_stats." + args.format, buf.getvalue())
    return 0


def cmd_trace_convert(args) -> int:
    with open(args.trace) as fh:
        tl = load_trace(fh, node_count=args.nodes8, horizon=args.horizon)
    converted = normalize_trace_8to4(tl, seed=args.seed or 0, probability=args.probability)
    buf = io.StringIO()
    dump_trace(converted, buf)
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        _emit(args, "trace_r4.csv", buf.getvalue())
    sys.stderr.write(
        f"inheritance_probability={converted.metadata['inheritance_probability']} "
        f"mean_fault_ratio_r8={tl.mean_fault_ratio():.6f} "
        f"mean_fault_ratio_r4={converted.mean_fault_ratio():.6f}\n")
    return 0


def _add_cluster_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cluster (ignored when --config is given)")
    g.add_argument("--nodes", type=int)
    g.add_argument("--gpus-per-node", type=int, default=4)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--nodes-per-tor", type=int, default=1)
    g.add_argument("--nodes-per-domain", type=int)
    g.add_argument("--ring-closed", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the verb; SUPPRESS keeps the
    # verb-level copy from clobbering a value given before the verb
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, help="cluster or scenario file (YAML/JSON)")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--out", default=S, help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    ap = argparse.ArgumentParser(prog="khopsim", parents=[common],
                                 description="K-hop ring HBD simulator")
    ap.set_defaults(config=None, seed=None, out=None, format="csv", verbose=False)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("topo", parents=[common], help="dump the HBD edge list")
    _add_cluster_flags(p)
    p.add_argument("--variant", choices=("khop", "deployed", "alltoall"), default="khop")
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("place", parents=[common], help="place TP groups for one fault set")
    _add_cluster_flags(p)
    p.add_argument("--mode", choices=MODES, default="dcn-free")
    p.add_argument("--tp", type=int, default=32)
    p.add_argument("--scale", type=int)
    p.add_argument("--scale-ratio", type=float, default=0.85)
    p.add_argument("--faults", help="comma separated faulty node ids")
    p.add_argument("--trace")
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--check-monotonic", action="store_true")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario or a fault-ratio sweep")
    _add_cluster_flags(p)
    p.add_argument("--mode", choices=MODES, default="dcn-free")
    p.add_argument("--architecture", default="infhbd")
    p.add_argument("--arch", dest="architecture_override")
    p.add_argument("--tp", type=int, default=32)
    p.add_argument("--scale-ratio", type=float, default=0.85)
    p.add_argument("--trace")
    p.add_argument("--fault-ratio", type=float, default=0.0)
    p.add_argument("--fault-ratios", help="comma separated node fault ratios to sweep")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", parents=[common], help="closed-form waste bound")
    p.add_argument("--sweep", action="store_true", help="R in {4,8} x K in {2,3,4} grid")
    p.add_argument("--ps4", type=float, default=analysis.BOUND_GRID_PS[4])
    p.add_argument("--ps8", type=float, default=analysis.BOUND_GRID_PS[8])
    p.add_argument("--ps", type=float, default=analysis.BOUND_GRID_PS[4])
    p.add_argument("--k-hop", type=int, default=2)
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--nt", type=int, default=32)
    p.add_argument("--ns", type=int, default=2000)
    p.add_argument("--trials", type=int, default=0, help="also run a Monte Carlo check")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("cost", parents=[common], help="per-GPU interconnect cost and power")
    p.add_argument("--arch", default="all")
    p.add_argument("--bom", help="BOM CSV (default: bundled)")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("alltoall", parents=[common], help="binary-exchange AllToAll rounds")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_alltoall)

    p = sub.add_parser("trace-stats", parents=[common], help="mean/P50/P99 faulty-node ratio")
    p.add_argument("trace")
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_trace_stats)

    p = sub.add_parser("trace-convert", parents=[common], help="8-GPU node trace to 4-GPU nodes")
    p.add_argument("trace")
    p.add_argument("output", nargs="?")
    p.add_argument("--nodes8", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--probability", type=float)
    p.set_defaults(func=cmd_trace_convert)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TraceParseError, UnsatisfiableError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
