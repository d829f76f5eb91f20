"""Reconfigurable K-hop ring topology.

Nodes are 0-based ids in physical DCN order. An HBD topology is a line (or
ring) ``order`` of node ids plus a set of hop distances: two nodes are wired
when their positions in ``order`` differ by one of the distances. The standard
K-hop ring uses distances ``1..K``; the AllToAll variant uses ``1, 2, 4, ...``.
ToR and aggregation-domain membership always follow the physical id.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .config import ClusterConfig, ConfigError

Edge = Tuple[int, int]


class InfeasibleRingError(ValueError):
    """Consecutive nodes of a requested ring are not wired together."""


def _edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class ClusterTopology:
    config: ClusterConfig
    order: Tuple[int, ...]
    hops: Tuple[int, ...]
    closed: bool = False

    @cached_property
    def pos(self) -> Dict[int, int]:
        return {node: i for i, node in enumerate(self.order)}

    @property
    def nodes(self) -> Tuple[int, ...]:
        return tuple(range(self.config.n))

    @property
    def R(self) -> int:
        return self.config.R

    @property
    def K(self) -> int:
        return self.config.K

    def tor_of(self, node: int) -> int:
        return node // self.config.p

    def domain_of(self, node: int) -> int:
        return node // self.config.d

    def neighbor_positions(self, i: int) -> List[int]:
        L = len(self.order)
        out = []
        for h in self.hops:
            if self.closed and 2 * h > L:
                # on a ring a hop past the half-way point is a shorter hop the other way
                continue
            for j in (i - h, i + h):
                if self.closed:
                    j %= L
                    if j != i and j not in out:
                        out.append(j)
                elif 0 <= j < L:
                    out.append(j)
        return out

    def neighbors(self, node: int) -> List[int]:
        return [self.order[j] for j in self.neighbor_positions(self.pos[node])]

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    @cached_property
    def edges(self) -> FrozenSet[Edge]:
        out = set()
        for i, u in enumerate(self.order):
            for j in self.neighbor_positions(i):
                out.add(_edge(u, self.order[j]))
        return frozenset(out)

    def connected(self, u: int, v: int) -> bool:
        pu, pv = self.pos.get(u), self.pos.get(v)
        if pu is None or pv is None:
            return False
        delta = abs(pu - pv)
        if self.closed:
            delta = min(delta, len(self.order) - delta)
        return delta in self.hops

    def edge_list_text(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in sorted(self.edges))


def build_khop_topology(config: ClusterConfig) -> ClusterTopology:
    """K-hop line/ring over the physical node order: node i wired to i±1..i±K."""
    return ClusterTopology(
        config=config,
        order=tuple(range(config.n)),
        hops=tuple(range(1, config.K + 1)),
        closed=config.ring_closed,
    )


def build_alltoall_topology(config: ClusterConfig) -> ClusterTopology:
    """Rewired variant with links at distances 1, 2, 4, ..., 2**(K-1)."""
    return ClusterTopology(
        config=config,
        order=tuple(range(config.n)),
        hops=tuple(2**k for k in range(config.K)),
        closed=config.ring_closed,
    )


@dataclass(frozen=True)
class DeployedTopology:
    """Fat-tree aware wiring: ``sublines`` parallel sub-lines joined end to end.

    Sub-line ``i`` holds the nodes with local index ``i`` under every ToR, so
    HBD neighbours sit under different ToRs. Nodes dropped by the floor
    division are kept in ``residual``.
    """

    config: ClusterConfig
    s_deploy: Tuple[int, ...]
    sublines: int
    subline_length: int
    residual: Tuple[int, ...] = ()

    @cached_property
    def e_deploy(self) -> FrozenSet[Edge]:
        K = self.config.K
        out = set()
        for i, u in enumerate(self.s_deploy):
            for j in range(i + 1, min(i + K, len(self.s_deploy) - 1) + 1):
                out.add(_edge(u, self.s_deploy[j]))
        return frozenset(out)

    def topology(self) -> ClusterTopology:
        """The HBD graph as wired; residual nodes hang off the tail of the line."""
        return ClusterTopology(
            config=self.config,
            order=self.s_deploy + self.residual,
            hops=tuple(range(1, self.config.K + 1)),
            closed=False,
        )


def build_deployment(topology: ClusterTopology | ClusterConfig) -> DeployedTopology:
    config = topology.config if isinstance(topology, ClusterTopology) else topology
    p, n = config.p, config.n
    if p > n:
        raise ConfigError(f"nodes_per_tor ({p}) exceeds nodes ({n})")
    l = n // p
    s_deploy = [i + j * p for i in range(p) for j in range(l)]
    residual = tuple(range(l * p, n))
    return DeployedTopology(config, tuple(s_deploy), p, l, residual)


@dataclass(frozen=True)
class GpuRing:
    member_nodes: Tuple[int, ...]
    gpu_order: Tuple[Tuple[int, int], ...]
    activated_links: Tuple[Edge, ...]
    loopback_nodes: Tuple[int, int]

    def __len__(self) -> int:
        return len(self.gpu_order)

    def successor(self, gpu: Tuple[int, int]) -> Tuple[int, int]:
        i = self.gpu_order.index(gpu)
        return self.gpu_order[(i + 1) % len(self.gpu_order)]


def form_ring(nodes: Sequence[int], topology: ClusterTopology) -> GpuRing:
    """Thread the GPUs of ``nodes`` into one cycle.

    The line of nodes is walked forward visiting each node's GPUs in local
    rank order; the two end nodes close the cycle through their loopback path.
    """
    nodes = tuple(nodes)
    if not nodes:
        raise InfeasibleRingError("empty node list")
    if len(set(nodes)) != len(nodes):
        raise InfeasibleRingError(f"duplicate nodes in {nodes}")
    links = []
    for u, v in zip(nodes, nodes[1:]):
        if not topology.connected(u, v):
            raise InfeasibleRingError(f"no link between node {u} and node {v}")
        links.append(_edge(u, v))
    R = topology.R
    gpu_order = tuple((node, r) for node in nodes for r in range(R))
    return GpuRing(nodes, gpu_order, tuple(links), (nodes[0], nodes[-1]))


def parse_edge_list(lines: Iterable[str]) -> FrozenSet[Edge]:
    out = set()
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            u, v = map(int, line.split())
            out.add(_edge(u, v))
    return frozenset(out)
