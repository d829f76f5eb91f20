"""Node-level fault timelines: CSV trace ingestion, synthesis, and 8->4 GPU conversion."""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, TextIO, Tuple

import numpy as np

TRACE_HEADER = ("node_id", "start", "end")


class TraceParseError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class FaultEvent:
    node_id: int
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"fault on node {self.node_id}: start {self.start} >= end {self.end}")

    @property
    def duration(self) -> float:
        return self.end - self.start


def _merge(events: Iterable[FaultEvent]) -> List[FaultEvent]:
    by_node: Dict[int, List[Tuple[float, float]]] = {}
    for ev in events:
        by_node.setdefault(ev.node_id, []).append((ev.start, ev.end))
    merged = []
    for node, spans in by_node.items():
        spans.sort()
        cur_s, cur_e = spans[0]
        for s, e in spans[1:]:
            if s <= cur_e:
                cur_e = max(cur_e, e)
            else:
                merged.append(FaultEvent(node, cur_s, cur_e))
                cur_s, cur_e = s, e
        merged.append(FaultEvent(node, cur_s, cur_e))
    merged.sort(key=lambda ev: (ev.start, ev.node_id))
    return merged


@dataclass(frozen=True)
class FaultTimeline:
    """Time-ordered, per-node merged fault intervals ``[start, end)``."""

    events: Tuple[FaultEvent, ...]
    horizon: float
    node_count: int
    metadata: Dict[str, str] = field(default_factory=dict, compare=False)

    @classmethod
    def from_events(cls, events: Iterable[FaultEvent], node_count: int,
                    horizon: Optional[float] = None, **metadata: str) -> "FaultTimeline":
        merged = _merge(events)
        for ev in merged:
            if not 0 <= ev.node_id < node_count:
                raise ValueError(f"node {ev.node_id} outside cluster of {node_count} nodes")
        if horizon is None:
            horizon = max((ev.end for ev in merged), default=0.0)
        return cls(tuple(merged), float(horizon), node_count, dict(metadata))

    def faulty_at(self, t: float) -> FrozenSet[int]:
        return frozenset(ev.node_id for ev in self.events if ev.start <= t < ev.end)

    def boundaries(self) -> List[float]:
        """Sorted distinct times where the faulty set may change, clipped to [0, horizon]."""
        pts = {0.0, self.horizon}
        for ev in self.events:
            for x in (ev.start, ev.end):
                if 0.0 <= x <= self.horizon:
                    pts.add(float(x))
        return sorted(pts)

    def segments(self) -> List[Tuple[float, float, FrozenSet[int]]]:
        """Piecewise-constant view: ``(t0, t1, faulty set)`` between consecutive boundaries.

        Sweeps starts and ends once, so cost is O(E log E) instead of one scan per boundary.
        """
        bounds = self.boundaries()
        starts = sorted(self.events, key=lambda ev: ev.start)
        ends = sorted(self.events, key=lambda ev: ev.end)
        active: Dict[int, int] = {}
        si = ei = 0
        out = []
        for t0, t1 in zip(bounds, bounds[1:]):
            while si < len(starts) and starts[si].start <= t0:
                active[starts[si].node_id] = active.get(starts[si].node_id, 0) + 1
                si += 1
            while ei < len(ends) and ends[ei].end <= t0:
                nid = ends[ei].node_id
                active[nid] -= 1
                if not active[nid]:
                    del active[nid]
                ei += 1
            out.append((t0, t1, frozenset(active)))
        return out

    @property
    def mean_duration(self) -> float:
        if not self.events:
            return 0.0
        return float(np.mean([ev.duration for ev in self.events]))

    def with_fixed_repair(self, duration: Optional[float] = None) -> "FaultTimeline":
        """Replace every event's end with ``start + duration`` (default: mean duration)."""
        if duration is None:
            duration = self.mean_duration
        if not self.events:
            return self
        evs = [FaultEvent(ev.node_id, ev.start, ev.start + duration) for ev in self.events]
        return FaultTimeline.from_events(evs, self.node_count, self.horizon, **self.metadata)

    def remap(self, n: int) -> "FaultTimeline":
        """Fold trace node ``i`` onto cluster node ``i mod n``."""
        evs = [FaultEvent(ev.node_id % n, ev.start, ev.end) for ev in self.events]
        meta = dict(self.metadata, node_mapping=f"trace node i -> cluster node i mod {n}")
        return FaultTimeline.from_events(evs, n, self.horizon, **meta)

    def fault_ratio_series(self) -> Tuple[np.ndarray, np.ndarray]:
        """Faulty-node ratio per segment and the segment durations."""
        segs = self.segments()
        ratios = np.array([len(f) / self.node_count for _, _, f in segs])
        weights = np.array([t1 - t0 for t0, t1, _ in segs])
        return ratios, weights

    def mean_fault_ratio(self) -> float:
        if self.horizon <= 0 or self.node_count == 0:
            return 0.0
        busy = sum(min(ev.end, self.horizon) - max(ev.start, 0.0) for ev in self.events)
        return busy / (self.node_count * self.horizon)

    def stats(self) -> Dict[str, float]:
        ratios, weights = self.fault_ratio_series()
        if not len(ratios) or weights.sum() == 0:
            return {"mean": 0.0, "p50": 0.0, "p99": 0.0, "events": 0}
        order = np.argsort(ratios)
        cdf = np.cumsum(weights[order]) / weights.sum()

        def q(level: float) -> float:
            return float(ratios[order][min(np.searchsorted(cdf, level), len(cdf) - 1)])

        return {
            "mean": self.mean_fault_ratio(),
            "p50": q(0.50),
            "p99": q(0.99),
            "events": len(self.events),
        }


def load_trace(source: TextIO | str, node_count: Optional[int] = None,
               horizon: Optional[float] = None) -> FaultTimeline:
    """Parse a ``node_id,start,end`` CSV stream (comment lines start with ``#``)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    events = []
    seen_header = False
    max_node = -1
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if not seen_header and tuple(cells) == TRACE_HEADER:
            seen_header = True
            continue
        seen_header = True
        if len(cells) != 3:
            raise TraceParseError(f"line {lineno}: expected 3 fields, got {len(cells)}")
        try:
            node, start, end = int(cells[0]), float(cells[1]), float(cells[2])
        except ValueError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from None
        if node < 0 or (node_count is not None and node >= node_count):
            raise TraceParseError(f"line {lineno}: unknown node {node}")
        if not start < end:
            raise TraceParseError(f"line {lineno}: end {end} is not after start {start}")
        events.append(FaultEvent(node, start, end))
        max_node = max(max_node, node)
    if node_count is None:
        node_count = max_node + 1
    return FaultTimeline.from_events(events, node_count, horizon)


def _fmt_time(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def dump_trace(timeline: FaultTimeline, out: TextIO) -> None:
    out.write(f"# nodes={timeline.node_count} horizon={_fmt_time(timeline.horizon)}\n")
    out.write(",".join(TRACE_HEADER) + "\n")
    for ev in sorted(timeline.events, key=lambda e: (e.start, e.node_id, e.end)):
        out.write(f"{ev.node_id},{_fmt_time(ev.start)},{_fmt_time(ev.end)}\n")


def read_trace_header(text: str) -> Dict[str, float]:
    """Pick ``nodes=`` / ``horizon=`` out of the comment line written by :func:`dump_trace`."""
    meta = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        for tok in line[1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                try:
                    meta[k] = float(v)
                except ValueError:
                    pass
    return meta


def node_fault_prob(p_gpu: float, R: int) -> float:
    """A node is down when any of its R i.i.d. GPUs is down."""
    return 1.0 - (1.0 - p_gpu) ** R


def gpu_fault_prob_from_node(p_node: float, R: int) -> float:
    if not 0.0 <= p_node < 1.0:
        raise ValueError(f"node fault probability must be in [0, 1), got {p_node}")
    return 1.0 - (1.0 - p_node) ** (1.0 / R)


def inheritance_probability(p_node8: float, r_from: int = 8, r_to: int = 4) -> float:
    """P(small node faulty | its big node faulty) by Bayes, with P(big | small) = 1."""
    if p_node8 <= 0.0:
        return 0.0
    p_gpu = gpu_fault_prob_from_node(p_node8, r_from)
    return node_fault_prob(p_gpu, r_to) / p_node8


@dataclass(frozen=True)
class FaultModelParams:
    p_gpu: float
    R: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_gpu <= 1.0:
            raise ValueError(f"p_gpu must be in [0, 1], got {self.p_gpu}")

    @classmethod
    def from_node_prob(cls, p_node: float, R: int) -> "FaultModelParams":
        if p_node >= 1.0:
            return cls(1.0, R)
        return cls(gpu_fault_prob_from_node(p_node, R), R)

    @property
    def node_prob(self) -> float:
        return node_fault_prob(self.p_gpu, self.R)


def synthesize_trace(params: FaultModelParams, n: int, steps: int, seed: int,
                     step_seconds: float = 1.0) -> FaultTimeline:
    """Each node is independently faulty in each step with probability ``params.node_prob``."""
    rng = np.random.default_rng(seed)
    mask = rng.random((steps, n)) < params.node_prob
    events = []
    for node in range(n):
        col = mask[:, node]
        if not col.any():
            continue
        # run-length encode the faulty steps of this node
        padded = np.concatenate(([False], col, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        for a, b in zip(edges[::2], edges[1::2]):
            events.append(FaultEvent(node, a * step_seconds, b * step_seconds))
    return FaultTimeline.from_events(
        events, n, steps * step_seconds,
        source=f"synthetic p_node={params.node_prob:.6g} seed={seed}",
    )


def normalize_trace_8to4(timeline: FaultTimeline, seed: int,
                         probability: Optional[float] = None) -> FaultTimeline:
    """Split each 8-GPU node ``i`` into 4-GPU nodes ``2i`` and ``2i+1``.

    Each child independently inherits every parent event with the Bayes
    probability derived from the trace's mean node-fault ratio, unless
    ``probability`` overrides it.
    """
    if probability is None:
        probability = inheritance_probability(timeline.mean_fault_ratio())
    rng = np.random.default_rng(seed)
    ordered = sorted(timeline.events, key=lambda e: (e.start, e.node_id))
    draws = rng.random((len(ordered), 2)) < probability
    events = []
    for ev, (left, right) in zip(ordered, draws):
        if left:
            events.append(FaultEvent(2 * ev.node_id, ev.start, ev.end))
        if right:
            events.append(FaultEvent(2 * ev.node_id + 1, ev.start, ev.end))
    meta = dict(timeline.metadata, inheritance_probability=f"{probability:.6f}")
    return FaultTimeline.from_events(events, 2 * timeline.node_count, timeline.horizon, **meta)
