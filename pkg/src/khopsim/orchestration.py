"""TP-group placement on a K-hop HBD.

Three orchestrators share one placement representation:

* ``orchestrate_dcn_free``: connected components of the healthy HBD graph,
  each sorted in HBD order and cut front to back into groups of ``m`` nodes.
* ``orchestrate_fat_tree``: binary search over the number of fat-tree
  constraints (sub-line confinement, then ToR rank alignment) on the
  deployed wiring, keeping the most constrained placement that still fits
  the job.
* ``orchestrate_greedy_baseline``: random seeds walked along the HBD line,
  the first shuffle that yields enough feasible groups wins.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from .config import JobSpec
from .topology import ClusterTopology, DeployedTopology, GpuRing, build_deployment, form_ring

log = logging.getLogger(__name__)

GREEDY_ATTEMPTS = 1000


class UnsatisfiableError(RuntimeError):
    """No placement satisfies the job scale."""


@dataclass
class PlacementScheme:
    groups: List[Tuple[int, ...]]
    rings: List[GpuRing] = field(default_factory=list, repr=False)
    constraint_level: Optional[int] = None
    # for fat-tree placements: which groups were cut from aligned domains
    aligned: List[bool] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def nodes(self) -> Set[int]:
        return {u for g in self.groups for u in g}

    def gpus(self, R: int) -> int:
        return sum(len(g) for g in self.groups) * R

    def to_dict(self) -> dict:
        return {
            "constraint_level": self.constraint_level,
            "groups": [
                {"nodes": list(g), "links": [list(e) for e in ring.activated_links]}
                for g, ring in zip(self.groups, self.rings)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict, topology: ClusterTopology) -> "PlacementScheme":
        groups = [tuple(g["nodes"]) for g in data["groups"]]
        return cls(groups, [form_ring(g, topology) for g in groups], data.get("constraint_level"))


def _sorted_in_hbd(positions: List[int], length: int, closed: bool) -> List[int]:
    positions.sort()
    if not closed or len(positions) < 2:
        return positions
    # a component of a ring may wrap past position 0: start right after the widest gap
    gaps = [(positions[(i + 1) % len(positions)] - positions[i]) % length
            for i in range(len(positions))]
    widest = max(range(len(gaps)), key=gaps.__getitem__)
    if gaps[widest] <= 1:
        return positions
    start = (widest + 1) % len(positions)
    return positions[start:] + positions[:start]


def healthy_components(seq: Sequence[int], hops: Sequence[int], closed: bool,
                       faulty: Set[int] | frozenset) -> List[List[int]]:
    """DFS connected components of the healthy part of a line/ring, as node lists in HBD order."""
    L = len(seq)
    healthy = [u not in faulty for u in seq]
    visited = [False] * L
    comps = []
    for start in range(L):
        if not healthy[start] or visited[start]:
            continue
        visited[start] = True
        stack = [start]
        comp = []
        while stack:
            i = stack.pop()
            comp.append(i)
            for h in hops:
                if closed and 2 * h > L:
                    continue
                for j in (i - h, i + h):
                    if closed:
                        j %= L
                    elif not 0 <= j < L:
                        continue
                    if healthy[j] and not visited[j]:
                        visited[j] = True
                        stack.append(j)
        comps.append([seq[i] for i in _sorted_in_hbd(comp, L, closed)])
    return comps


def _place_on_line(seq: Sequence[int], hops: Sequence[int], closed: bool,
                   faulty, m: int) -> List[Tuple[int, ...]]:
    groups = []
    for comp in healthy_components(seq, hops, closed, faulty):
        for k in range(0, len(comp) - m + 1, m):
            groups.append(tuple(comp[k:k + m]))
    return groups


def _with_rings(groups: List[Tuple[int, ...]], topology: ClusterTopology,
                **kwargs) -> PlacementScheme:
    # form_ring raises if a group is not wired consecutively; within a sorted
    # K-hop component this cannot happen, so any failure is a bug
    rings = [form_ring(g, topology) for g in groups]
    return PlacementScheme(groups, rings, **kwargs)


def orchestrate_dcn_free(topology: ClusterTopology, F: Iterable[int], m: int) -> PlacementScheme:
    if m < 1:
        raise ValueError(f"nodes per group must be >= 1, got {m}")
    groups = _place_on_line(topology.order, topology.hops, topology.closed, frozenset(F), m)
    return _with_rings(groups, topology)


def fat_tree_dimensions(deploy: DeployedTopology) -> Tuple[int, int, int]:
    """``(sub-line length l, n_domain, n_maxsubline)`` for the deployed cluster."""
    cfg = deploy.config
    l = cfg.d // cfg.p
    n_domain = cfg.n // cfg.d
    n_maxsubline = len(deploy.s_deploy) // l
    return l, n_domain, n_maxsubline


def expand_faults_by_tor(F: Iterable[int], n_align: int, d: int, p: int) -> Set[int]:
    """Any fault in one of the first ``n_align`` domains takes down its whole ToR."""
    F = set(F)
    out = set(F)
    limit = n_align * d
    for sid in F:
        if sid < limit:
            base = (sid // p) * p
            out.update(range(base, base + p))
    return out


def _fat_tree_groups(deploy: DeployedTopology, n_constraints: int, F: frozenset, m: int,
                     cache: Optional[dict] = None) -> List[Tuple[tuple, Tuple[int, ...], bool]]:
    """``(sort key, group, aligned)`` triples for one constraint level.

    A sub-line's groups depend only on whether its domain is aligned, so
    ``cache`` can carry them across the levels probed by a binary search.
    """
    cfg = deploy.config
    l, n_domain, n_maxsubline = fat_tree_dimensions(deploy)
    n_align = max(0, n_constraints - n_maxsubline)
    n_subline = min(n_maxsubline, n_constraints)
    F_aligned = frozenset(expand_faults_by_tor(F, n_align, cfg.d, cfg.p))
    hops = tuple(range(1, cfg.K + 1))
    cache = {} if cache is None else cache

    # the key puts the k-th group of every sub-line in a domain next to each
    # other so CP/DP neighbours share ToRs
    placed = []
    s_deploy = deploy.s_deploy
    for i in range(n_subline):
        sub = s_deploy[i * l:(i + 1) * l]
        domain = sub[0] // cfg.d
        subline = sub[0] % cfg.p
        in_aligned = domain < n_align
        groups = cache.get((i, in_aligned))
        if groups is None:
            groups = cache[(i, in_aligned)] = _place_on_line(sub, hops, False, F_aligned, m)
        for k, g in enumerate(groups):
            placed.append(((0, domain, k, subline), g, in_aligned))
    # everything not confined to a sub-line goes through one unconstrained pass
    residual = s_deploy[n_subline * l:] + deploy.residual
    for k, g in enumerate(_place_on_line(residual, hops, False, F_aligned, m)):
        placed.append(((1, 0, k, 0), g, False))
    placed.sort(key=lambda item: item[0])
    return placed


def _scheme_from_groups(deploy: DeployedTopology, placed, n_constraints: int) -> PlacementScheme:
    scheme = _with_rings([g for _, g, _ in placed], deploy.topology(),
                         constraint_level=n_constraints)
    scheme.aligned = [a for _, _, a in placed]
    return scheme


def placement_fat_tree(deploy: DeployedTopology, n_constraints: int, F: Iterable[int],
                       job: JobSpec) -> PlacementScheme:
    placed = _fat_tree_groups(deploy, n_constraints, frozenset(F), job.m)
    return _scheme_from_groups(deploy, placed, n_constraints)


def orchestrate_fat_tree(topology: ClusterTopology, F: Iterable[int], job: JobSpec,
                         deploy: Optional[DeployedTopology] = None,
                         check_monotonic: bool = False) -> Optional[PlacementScheme]:
    """Binary search for the largest constraint count whose placement fits the job.

    Probes only count groups; rings are formed once for the chosen level.
    Returns ``None`` when even the unconstrained placement is too small.
    """
    if deploy is None:
        deploy = build_deployment(topology)
    F = frozenset(F)
    R = deploy.config.R
    _, n_domain, n_maxsubline = fat_tree_dimensions(deploy)
    low, high = 0, n_domain + n_maxsubline
    best = None
    cache: dict = {}
    while low <= high:
        mid = (low + high) // 2
        placed = _fat_tree_groups(deploy, mid, F, job.m, cache)
        if len(placed) * job.m * R >= job.s:
            best = (mid, placed)
            low = mid + 1
        else:
            high = mid - 1
    if check_monotonic:
        check_constraint_monotonicity(deploy, F, job)
    if best is None:
        return None
    return _scheme_from_groups(deploy, best[1], best[0])


def check_constraint_monotonicity(deploy: DeployedTopology, F, job: JobSpec) -> List[int]:
    """Levels where satisfiability goes from False back to True; logs each as an error."""
    _, n_domain, n_maxsubline = fat_tree_dimensions(deploy)
    R = deploy.config.R
    F = frozenset(F)
    cache: dict = {}
    sat = [len(_fat_tree_groups(deploy, c, F, job.m, cache)) * job.m * R >= job.s
           for c in range(n_domain + n_maxsubline + 1)]
    bad = [c for c in range(1, len(sat)) if sat[c] and not sat[c - 1]]
    for c in bad:
        log.error("constraint satisfiability not monotone at n_constraints=%d", c)
    return bad


def orchestrate_greedy_baseline(topology: ClusterTopology, F: Iterable[int], job: JobSpec,
                                seed: int, attempts: int = GREEDY_ATTEMPTS) -> Optional[PlacementScheme]:
    """Randomized DCN-unaware placement.

    Each attempt cuts every healthy HBD segment into groups of ``m`` starting
    at a random offset (never lower than the segment's leftover, so capacity is
    not lost), then picks ``job.groups`` of the groups at random. The first
    attempt that yields enough groups wins. Ranks follow physical node id of
    each group's first node, the order a DCN-unaware scheduler would use.
    Pass the deployed topology to compare against the fat-tree orchestrator
    on the same wiring.
    """
    rng = random.Random(seed)
    F = frozenset(F)
    m, need = job.m, job.groups
    comps = healthy_components(topology.order, topology.hops, topology.closed, F)
    for _ in range(attempts):
        groups = []
        for comp in comps:
            off = rng.randint(0, len(comp) % m)
            for k in range(off, len(comp) - m + 1, m):
                groups.append(tuple(comp[k:k + m]))
        if len(groups) >= need:
            chosen = rng.sample(groups, need)
            chosen.sort(key=lambda g: g[0])
            return _with_rings(chosen, topology)
    return None
