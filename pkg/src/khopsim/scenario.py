"""Scenario plumbing: one cluster, one job, one fault source, one architecture."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import (ARCHITECTURES, baseline_max_job_scale, baseline_wasted_gpus,
                        node_faults_to_gpus)
from .config import ClusterConfig, ConfigError, JobSpec, cluster_from_mapping, read_mapping
from .faults import FaultModelParams, FaultTimeline, load_trace, synthesize_trace
from .metrics import (MetricsReport, cross_tor_fraction, fault_waiting_time, waste_counts)
from .orchestration import (orchestrate_dcn_free, orchestrate_fat_tree,
                            orchestrate_greedy_baseline)
from .reporting import summarize
from .topology import build_deployment, build_khop_topology

MODES = ("dcn-free", "fat-tree", "greedy")
INFHBD = "infhbd"


@dataclass
class Scenario:
    cluster: ClusterConfig
    job: JobSpec
    trace: Optional[str] = None
    fault_ratio: Optional[float] = None  # node-level, synthetic i.i.d. per step
    steps: int = 100
    mode: str = "dcn-free"
    architecture: str = INFHBD
    seed: int = 0
    out: Optional[str] = None
    fault_ratios: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if (self.trace is None) == (self.fault_ratio is None):
            raise ConfigError("exactly one of trace or fault_ratio must be given")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.architecture != INFHBD and self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture must be {INFHBD!r} or one of {sorted(ARCHITECTURES)}")
        if self.job.r != self.cluster.R:
            raise ConfigError(f"job gpus_per_node {self.job.r} != cluster gpus_per_node {self.cluster.R}")
        if self.fault_ratio is not None and not 0.0 <= self.fault_ratio < 1.0:
            raise ConfigError(f"fault_ratio must be in [0, 1), got {self.fault_ratio}")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


_SCENARIO_KEYS = {"trace", "fault_ratio", "steps", "mode", "architecture", "seed", "out", "fault_ratios"}


def scenario_from_mapping(raw: dict, base_dir: Path | None = None) -> Scenario:
    raw = dict(raw)
    cluster_raw = raw.pop("cluster", None)
    if cluster_raw is None:
        keys = ("nodes", "gpus_per_node", "k", "nodes_per_tor", "nodes_per_domain", "ring_closed")
        cluster_raw = {k: raw.pop(k) for k in keys if k in raw}
    cluster = cluster_from_mapping(cluster_raw)
    job_raw = raw.pop("job", {}) or {}
    tp = int(job_raw.get("tp_size", 32))
    if "scale" in job_raw:
        s = int(job_raw["scale"])
    else:
        ratio = float(job_raw.get("scale_ratio", 0.85))
        s = int(cluster.gpus * ratio) // tp * tp
    job = JobSpec(t=tp, s=s, r=cluster.R)
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    if raw.get("trace") and base_dir is not None:
        raw["trace"] = str((base_dir / raw["trace"]).resolve()) if not Path(raw["trace"]).is_absolute() else raw["trace"]
    if "fault_ratios" in raw:
        raw["fault_ratios"] = tuple(float(x) for x in raw["fault_ratios"])
    return Scenario(cluster=cluster, job=job, **raw)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return scenario_from_mapping(read_mapping(path), path.parent)


def scenario_timeline(sc: Scenario) -> FaultTimeline:
    if sc.trace is not None:
        path = Path(sc.trace)
        if not path.exists():
            raise FileNotFoundError(f"trace: {path} does not exist")
        with path.open() as fh:
            tl = load_trace(fh)
        return tl.remap(sc.cluster.n) if tl.node_count != sc.cluster.n else tl
    params = FaultModelParams(p_gpu=0.0, R=sc.cluster.R)
    params = FaultModelParams.from_node_prob(sc.fault_ratio, sc.cluster.R) if sc.fault_ratio else params
    return synthesize_trace(params, sc.cluster.n, sc.steps, sc.seed)


def _infhbd_row(sc: Scenario, t: float, F: frozenset, topo, deploy, seed: int) -> MetricsReport:
    job = sc.job
    full = orchestrate_dcn_free(topo, F, job.m)
    scale = len(full) * job.t
    if sc.mode == "dcn-free":
        placement = full
    elif sc.mode == "fat-tree":
        placement = orchestrate_fat_tree(topo, F, job, deploy=deploy)
    else:
        placement = orchestrate_greedy_baseline(topo, F, job, seed=seed)
    basis = placement if placement is not None else full
    c = waste_counts(basis, topo, F)
    cross = cross_tor_fraction(placement, topo, job) if placement is not None else float("nan")
    return MetricsReport(t=t, faulty=c["faulty"], wasted=c["wasted"],
                         waste_ratio=c["wasted"] / c["total"], max_job_scale=scale,
                         cross_tor_fraction=cross)


def _baseline_row(sc: Scenario, t: float, F: frozenset) -> MetricsReport:
    spec = ARCHITECTURES[sc.architecture]
    G = sc.cluster.gpus
    Fg = node_faults_to_gpus(F, sc.cluster.R)
    wasted = baseline_wasted_gpus(spec, G, Fg, sc.job.t)
    return MetricsReport(t=t, faulty=len(Fg), wasted=wasted, waste_ratio=wasted / G,
                         max_job_scale=baseline_max_job_scale(spec, G, Fg, sc.job.t))


def scale_function(sc: Scenario):
    """Faulty node set -> largest supported job scale for the scenario's architecture."""
    if sc.architecture == INFHBD:
        topo = build_khop_topology(sc.cluster)
        return lambda F: len(orchestrate_dcn_free(topo, F, sc.job.m)) * sc.job.t
    spec = ARCHITECTURES[sc.architecture]
    return lambda F: baseline_max_job_scale(spec, sc.cluster.gpus,
                                            node_faults_to_gpus(F, sc.cluster.R), sc.job.t)


def run_scenario(sc: Scenario) -> Tuple[List[MetricsReport], Dict[str, object]]:
    """One row per piecewise-constant fault segment plus a JSON-ready summary."""
    timeline = scenario_timeline(sc)
    topo = build_khop_topology(sc.cluster)
    deploy = build_deployment(topo) if sc.mode == "fat-tree" else None
    rows = []
    cache: Dict[frozenset, MetricsReport] = {}
    for idx, (t0, _, F) in enumerate(timeline.segments()):
        if F not in cache:
            if sc.architecture == INFHBD:
                cache[F] = _infhbd_row(sc, t0, F, topo, deploy, sc.seed + idx)
            else:
                cache[F] = _baseline_row(sc, t0, F)
        rows.append(replace(cache[F], t=t0))
    waiting = fault_waiting_time(timeline, sc.job, topo, fixed_repair=True,
                                 scale_fn=scale_function(sc)) if timeline.horizon > 0 else 0.0
    extra = {
        "architecture": sc.architecture,
        "mode": sc.mode,
        "seed": sc.seed,
        "job": {"tp_size": sc.job.t, "scale": sc.job.s},
        "fault_waiting_seconds": waiting,
        "horizon": timeline.horizon,
        "trace_stats": timeline.stats(),
    }
    return rows, summarize(rows, timeline.horizon, extra)


def _sweep_point(args) -> Tuple[float, Dict[str, object]]:
    sc, ratio = args
    _, summary = run_scenario(sc)
    return ratio, summary


def sweep_fault_ratios(sc: Scenario, ratios: Sequence[float], workers: int = 1) -> List[Tuple[float, Dict[str, object]]]:
    """Run one synthetic scenario per fault ratio, each with its own derived seed."""
    seeds = np.random.SeedSequence(sc.seed).generate_state(len(ratios))
    jobs = [(replace(sc, trace=None, fault_ratio=r, seed=int(s)), r) for r, s in zip(ratios, seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


@dataclass(frozen=True)
class CrossTorTrial:
    fault_ratio: float
    seed: int
    optimized: float  # nan when no placement hosts the job
    greedy: float


def cross_tor_trial(cfg: ClusterConfig, tp: int, job_ratio: float, fault_ratio: float,
                    seed: int) -> CrossTorTrial:
    """Fault ``round(fault_ratio * n)`` random nodes, then place with the fat-tree
    orchestrator and the greedy baseline over the same deployed wiring."""
    rng = np.random.default_rng(seed)
    F = frozenset(rng.choice(cfg.n, size=round(fault_ratio * cfg.n), replace=False).tolist())
    job = JobSpec(t=tp, s=int(cfg.gpus * job_ratio) // tp * tp, r=cfg.R)
    deploy = build_deployment(cfg)
    topo = deploy.topology()
    opt = orchestrate_fat_tree(build_khop_topology(cfg), F, job, deploy=deploy)
    greedy = orchestrate_greedy_baseline(topo, F, job, seed=seed)
    frac = lambda s: cross_tor_fraction(s, topo, job) if s is not None else float("nan")
    return CrossTorTrial(fault_ratio, seed, frac(opt), frac(greedy))
