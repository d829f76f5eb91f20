"""TP/EP traffic loads and the binary-exchange AllToAll schedule.

Data blocks are ``(origin, block index)`` sentinels; a block carries ``m`` units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .config import ClusterConfig
from .topology import ClusterTopology, build_alltoall_topology

RECONFIG_LATENCY = 70e-6  # seconds; fast-switch reconfiguration midpoint
RADIX_LIMIT = {4: 64, 8: 2048}


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficParams:
    b: int
    s: int
    h: int
    k: int = 1
    n: int = 1

    def __post_init__(self) -> None:
        if min(self.b, self.s, self.h, self.k, self.n) < 1:
            raise ValueError("traffic parameters must all be >= 1")


def tp_allreduce_load(params: TrafficParams) -> float:
    n = params.n
    return 2.0 * params.b * params.s * params.h * (n - 1) / n


def ep_alltoall_load(params: TrafficParams) -> float:
    if params.k > params.n:
        raise ValueError(f"top-k {params.k} exceeds EP size {params.n}")
    return tp_allreduce_load(params) * params.k / params.n


def _log2(p: int) -> int:
    if p < 2 or p & (p - 1):
        raise ScheduleError(f"group size must be a power of two >= 2, got {p}")
    return p.bit_length() - 1


@dataclass(frozen=True)
class Transfer:
    sender: int
    receiver: int
    origins: Tuple[int, ...]
    blocks: Tuple[int, int]  # half-open block-index range

    def units(self, m: int) -> int:
        return len(self.origins) * (self.blocks[1] - self.blocks[0]) * m


@dataclass
class ExchangeState:
    node: int
    msg: Dict[int, Set[int]] = field(default_factory=dict)  # origin -> block indices held
    commset: Set[int] = field(default_factory=set)
    sent_units: List[int] = field(default_factory=list)

    @classmethod
    def initial(cls, i: int, p: int) -> "ExchangeState":
        return cls(i, {i: set(range(p))}, {i})


def binary_exchange_schedule(p: int, m: int = 1) -> List[List[Transfer]]:
    """Rounds of pairwise exchanges; in round k node i pairs with ``i ^ 2**(log2 p - k)``.

    Each node tracks the block-index window it still holds (identical for every
    origin in its Commset) and sends the slice ``[r & w, (r & w) + w)`` of that
    window to its partner, ``w = 2**(log2 p - k)``.
    """
    L = _log2(p)
    if m < 1:
        raise ScheduleError("block size must be >= 1")
    commset = [frozenset({i}) for i in range(p)]
    window = [(0, p)] * p
    rounds = []
    for k in range(1, L + 1):
        w = 1 << (L - k)
        transfers = []
        for i in range(p):
            r = i ^ w
            lo = window[i][0] + (r & w)
            transfers.append(Transfer(i, r, tuple(sorted(commset[i])), (lo, lo + w)))
        # the kept half is the one the partner did not ask for
        for i in range(p):
            lo = window[i][0] + (i & w)
            window[i] = (lo, lo + w)
        commset = [commset[i] | commset[i ^ w] for i in range(p)]
        rounds.append(transfers)
    return rounds


def simulate_exchange(schedule: List[List[Transfer]], p: int, m: int = 1) -> List[ExchangeState]:
    """Replay ``schedule`` on sentinel data; senders must hold what they send."""
    states = [ExchangeState.initial(i, p) for i in range(p)]
    for transfers in schedule:
        moved = []
        for t in transfers:
            src = states[t.sender]
            if set(t.origins) != src.commset:
                raise ScheduleError(f"node {t.sender} sends origins {t.origins}, holds {sorted(src.commset)}")
            blocks = set(range(*t.blocks))
            for o in t.origins:
                if not blocks <= src.msg.get(o, set()):
                    raise ScheduleError(f"node {t.sender} lacks blocks {t.blocks} of origin {o}")
            moved.append((t, blocks, set(src.commset)))
        sent = [0] * p
        for t, blocks, origins in moved:
            for o in origins:
                states[t.sender].msg[o] -= blocks
                states[t.receiver].msg.setdefault(o, set()).update(blocks)
            sent[t.sender] += t.units(m)
        for t, _, origins in moved:
            states[t.receiver].commset |= origins
        for i, st in enumerate(states):
            st.sent_units.append(sent[i])
    return states


def final_blocks(state: ExchangeState) -> Set[Tuple[int, int]]:
    return {(o, b) for o, bs in state.msg.items() for b in bs}


def exchange_cost(p: int, m: float, t_s: float, t_w: float, reconfig: float = 0.0) -> float:
    L = _log2(p)
    return (t_s + reconfig) * L + 0.5 * t_w * m * p * L


def ring_alltoall_cost(p: int, m: float, t_s: float, t_w: float) -> float:
    return t_s * (p - 1) + t_w * m * p * (p - 1) / 2


def check_radix_constraint(tp_size: int, ep_size: int, R: int) -> bool:
    if R not in RADIX_LIMIT:
        raise ValueError(f"radix constraint defined for R in {sorted(RADIX_LIMIT)}, got {R}")
    return tp_size * ep_size <= RADIX_LIMIT[R]


def schedule_topology(p: int, R: int = 4) -> ClusterTopology:
    """Power-of-two rewired line over ``p`` nodes with ``K = log2 p``."""
    L = _log2(p)
    return build_alltoall_topology(ClusterConfig(n=p, R=max(R, L), K=L))


def infeasible_pairs(schedule: List[List[Transfer]], topology: ClusterTopology) -> List[Tuple[int, int]]:
    return [(t.sender, t.receiver) for rnd in schedule for t in rnd
            if not topology.connected(t.sender, t.receiver)]


def round_table(schedule: List[List[Transfer]], m: int) -> List[Dict[str, object]]:
    rows = []
    for k, rnd in enumerate(schedule, start=1):
        for t in rnd:
            rows.append({"round": k, "sender": t.sender, "receiver": t.receiver,
                         "blocks": f"[{t.blocks[0]},{t.blocks[1]})",
                         "origins": len(t.origins), "units": t.units(m)})
    return rows
