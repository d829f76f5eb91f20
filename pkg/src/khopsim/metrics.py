"""Fault-resilience and DCN-locality metrics over placements and timelines.

The cross-ToR measure is a modelling choice: non-TP traffic (CP/DP) is a set
of unit flows between same-rank GPUs of neighbouring TP groups, where
neighbours are consecutive groups in the job order inside a block of
``dp_size`` groups. With the fat-tree deployment the natural block is the
``p`` sub-lines (one node per ToR each), so ``dp_size`` defaults to ``p``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterable, List, Optional

from .config import JobSpec
from .faults import FaultTimeline
from .orchestration import PlacementScheme, orchestrate_dcn_free
from .topology import ClusterTopology


@dataclass
class MetricsReport:
    t: float
    faulty: int
    wasted: int
    waste_ratio: float
    max_job_scale: int
    cross_tor_fraction: float = float("nan")
    fault_waiting: float = 0.0

    def as_row(self) -> Dict[str, float]:
        return asdict(self)


def waste_counts(placement: PlacementScheme, topology: ClusterTopology,
                 F: Iterable[int]) -> Dict[str, int]:
    """GPU accounting: ``faulty + wasted + placed == total``."""
    R = topology.R
    F = set(F) & set(topology.nodes)
    placed_nodes = placement.nodes
    if placed_nodes & F:
        raise ValueError(f"placement uses faulty nodes {sorted(placed_nodes & F)}")
    total = topology.config.n * R
    faulty = len(F) * R
    placed = len(placed_nodes) * R
    return {"total": total, "faulty": faulty, "placed": placed,
            "wasted": total - faulty - placed}


def waste_ratio(placement: PlacementScheme, topology: ClusterTopology, F: Iterable[int]) -> float:
    c = waste_counts(placement, topology, F)
    return c["wasted"] / c["total"]


def fragmentation_waste(hbd_size: int, n_fault: int, tp_size: int) -> float:
    """Share of an HBD lost to ``(size - faults) mod tp``."""
    if tp_size < 1:
        raise ValueError("tp_size must be >= 1")
    if not 0 <= n_fault <= hbd_size:
        raise ValueError("n_fault must lie in [0, hbd_size]")
    return ((hbd_size - n_fault) % tp_size) / hbd_size


def max_job_scale(topology: ClusterTopology, F: Iterable[int], t: int) -> int:
    """Largest multiple of ``t`` GPUs the DCN-free orchestrator can place."""
    m = t // topology.R
    return len(orchestrate_dcn_free(topology, F, m)) * t


def fault_waiting_time(timeline: FaultTimeline, job: JobSpec, topology: ClusterTopology,
                       fixed_repair: bool = True,
                       scale_fn: Optional[Callable[[frozenset], int]] = None) -> float:
    """Seconds during which the cluster cannot host ``job.s`` GPUs.

    With ``fixed_repair`` every fault lasts the trace's mean duration.
    ``scale_fn`` maps a faulty set to the supported job scale (defaults to
    :func:`max_job_scale` on ``topology``); baselines plug in their own.
    """
    if timeline.horizon <= 0:
        raise ValueError("timeline horizon must be positive")
    if fixed_repair:
        timeline = timeline.with_fixed_repair()
    if scale_fn is None:
        scale_fn = lambda F: max_job_scale(topology, F, job.t)  # noqa: E731
    cache: Dict[frozenset, int] = {}
    blocked = 0.0
    for t0, t1, F in timeline.segments():
        if F not in cache:
            cache[F] = scale_fn(F)
        if cache[F] < job.s:
            blocked += t1 - t0
    return blocked


def job_groups(placement: PlacementScheme, job: JobSpec) -> List[tuple]:
    """The groups a job of ``job.s`` GPUs actually runs on (leading groups in job order)."""
    return placement.groups[:job.groups] if job.groups else list(placement.groups)


def cross_tor_flows(groups: List[tuple], topology: ClusterTopology,
                    dp_size: Optional[int] = None) -> tuple:
    """Return ``(cross, total)`` unit flows between same-rank GPUs of neighbouring groups."""
    if dp_size is None:
        dp_size = topology.config.p
    R = topology.R
    cross = total = 0
    for b in range(0, len(groups), max(dp_size, 1)):
        block = groups[b:b + dp_size]
        for g, h in zip(block, block[1:]):
            for u, v in zip(g, h):
                total += R
                if topology.tor_of(u) != topology.tor_of(v):
                    cross += R
    return cross, total


def cross_tor_fraction(placement: PlacementScheme, topology: ClusterTopology, job: JobSpec,
                       dp_size: Optional[int] = None) -> float:
    cross, total = cross_tor_flows(job_groups(placement, job), topology, dp_size)
    return cross / total if total else 0.0


def snapshot(t: float, topology: ClusterTopology, F: Iterable[int], job: JobSpec,
             placement: Optional[PlacementScheme] = None,
             dp_size: Optional[int] = None) -> MetricsReport:
    """Metrics for one faulty set; ``placement`` defaults to the DCN-free one."""
    F = frozenset(F)
    full = orchestrate_dcn_free(topology, F, job.m)
    if placement is None:
        placement = full
    c = waste_counts(full, topology, F)
    cross = cross_tor_fraction(placement, topology, job, dp_size) if len(placement) else float("nan")
    return MetricsReport(
        t=t,
        faulty=c["faulty"],
        wasted=c["wasted"],
        waste_ratio=c["wasted"] / c["total"],
        max_job_scale=len(full) * job.t,
        cross_tor_fraction=cross,
    )
