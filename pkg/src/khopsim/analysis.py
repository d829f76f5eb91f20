"""Closed-form waste bound for K-hop lines and its Monte Carlo check."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import ClusterConfig
from .faults import node_fault_prob
from .orchestration import orchestrate_dcn_free
from .topology import build_khop_topology

# default node fault rates (P99) for the R x K bound grid
BOUND_GRID_PS = {4: 0.0367, 8: 0.0722}
BOUND_GRID_K = (2, 3, 4)


@dataclass(frozen=True)
class BoundParams:
    P_s: float
    K: int
    R: int
    N_t: int = 32
    N_s: int = 2000

    def __post_init__(self) -> None:
        if not 0.0 <= self.P_s <= 1.0:
            raise ValueError(f"P_s must be in [0, 1], got {self.P_s}")
        if self.N_t < self.R or self.N_t % self.R:
            raise ValueError(f"N_t={self.N_t} must be a positive multiple of R={self.R}")
        if self.K < 1 or self.N_s < 1:
            raise ValueError("K and N_s must be >= 1")

    @property
    def m(self) -> int:
        return self.N_t // self.R


def ps_from_gpu_prob(p_gpu: float, R: int) -> float:
    """Node fault rate for R i.i.d. GPUs failing with ``p_gpu``."""
    return node_fault_prob(p_gpu, R)


def breakpoint_expectation(params: BoundParams) -> float:
    """Expected breakpoints contributed by one middle node of the line."""
    P, K = params.P_s, params.K
    return 2.0 * (P**K + P**(2 * K))


def line_breakpoint_expectation(params: BoundParams) -> float:
    return params.N_s * breakpoint_expectation(params)


def waste_ratio_bound(params: BoundParams) -> float:
    return 2.0 * (params.N_t - params.R) * params.P_s**params.K


@dataclass
class MonteCarloResult:
    mean: float
    ci: float
    excess_mean: float
    excess_ci: float
    trials: int

    @property
    def upper(self) -> float:
        return self.mean + self.ci

    @property
    def excess_upper(self) -> float:
        return self.excess_mean + self.excess_ci


def _mean_ci(xs: np.ndarray) -> tuple:
    if len(xs) < 2:
        return float(xs.mean()), 0.0
    return float(xs.mean()), float(1.96 * xs.std(ddof=1) / math.sqrt(len(xs)))


def monte_carlo_waste(params: BoundParams, trials: int, seed: int) -> MonteCarloResult:
    """Sample i.i.d. node faults on an ``N_s``-node K-hop line and place with the DCN-free orchestrator.

    ``mean`` is the plain waste ratio. ``excess_mean`` subtracts the waste an
    unbroken line would still have (healthy nodes mod m), i.e. the part caused
    by breakpoints, which is what the closed-form bound covers.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = ClusterConfig(n=params.N_s, R=params.R, K=params.K)
    topo = build_khop_topology(cfg)
    rng = np.random.default_rng(seed)
    m = params.m
    total = np.empty(trials)
    excess = np.empty(trials)
    for i in range(trials):
        F = np.flatnonzero(rng.random(params.N_s) < params.P_s)
        healthy = params.N_s - len(F)
        placed = len(orchestrate_dcn_free(topo, F.tolist(), m)) * m
        total[i] = (healthy - placed) / params.N_s
        excess[i] = ((healthy // m) * m - placed) / params.N_s
    mean, ci = _mean_ci(total)
    emean, eci = _mean_ci(excess)
    return MonteCarloResult(mean, ci, emean, eci, trials)


def bound_grid(ps: Optional[Dict[int, float]] = None, Ks: Sequence[int] = BOUND_GRID_K,
                N_t: int = 32) -> List[Dict[str, float]]:
    """Bound values for R in {4, 8} and each K."""
    ps = dict(BOUND_GRID_PS if ps is None else ps)
    rows = []
    for R in sorted(ps):
        for K in Ks:
            b = BoundParams(P_s=ps[R], K=K, R=R, N_t=N_t)
            rows.append({"R": R, "K": K, "P_s": b.P_s, "N_t": N_t, "bound": waste_ratio_bound(b)})
    return rows


def with_ps(params: BoundParams, P_s: float) -> BoundParams:
    return replace(params, P_s=P_s)
