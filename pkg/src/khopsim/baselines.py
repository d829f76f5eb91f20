"""Waste models for the comparison HBD architectures.

All functions take a GPU-level fault set (GPU ids ``0..cluster_gpus-1``);
HBD unit ``u`` owns GPUs ``u*hbd_size .. (u+1)*hbd_size-1``. Use
:func:`node_faults_to_gpus` to lift a node-level fault set.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, Set

KINDS = ("big_switch", "nvl", "tpu_cube", "sip_ring")


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    hbd_size: int = 0
    reserved_fraction: float = 0.0
    name: str = ""
    # tpu_cube only: "fragment" lets small TP groups use a cube's healthy
    # part, "void" drops any cube holding a fault
    cube_policy: str = "fragment"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("nvl", "tpu_cube") and self.hbd_size < 1:
            raise ValueError(f"{self.kind} needs hbd_size >= 1")
        if not 0.0 <= self.reserved_fraction < 1.0:
            raise ValueError("reserved_fraction must be in [0, 1)")
        if self.cube_policy not in ("fragment", "void"):
            raise ValueError(f"unknown cube_policy {self.cube_policy!r}")

    @property
    def reserved(self) -> int:
        return round(self.hbd_size * self.reserved_fraction)

    @property
    def label(self) -> str:
        return self.name or self.kind


BIG_SWITCH = BaselineSpec("big_switch", name="Big-Switch")
NVL36 = BaselineSpec("nvl", 36, 1 / 9, name="NVL-36")
NVL72 = BaselineSpec("nvl", 72, 1 / 9, name="NVL-72")
NVL576 = BaselineSpec("nvl", 576, 0.0, name="NVL-576")
TPUV4 = BaselineSpec("tpu_cube", 64, name="TPUv4")
SIP_RING = BaselineSpec("sip_ring", name="SiP-Ring")

ARCHITECTURES: Dict[str, BaselineSpec] = {
    "big-switch": BIG_SWITCH,
    "nvl-36": NVL36,
    "nvl-72": NVL72,
    "nvl-576": NVL576,
    "tpuv4": TPUV4,
    "sip-ring": SIP_RING,
}


def node_faults_to_gpus(F_nodes: Iterable[int], R: int) -> Set[int]:
    return {u * R + r for u in F_nodes for r in range(R)}


def _per_unit(faulty: Iterable[int], unit: int) -> Counter:
    return Counter(g // unit for g in faulty)


def _nvl_wasted(h: int, reserved: int, f: int, tp: int) -> int:
    # reserved slots absorb the first faults and stay out of the job either way,
    # so the whole reserve counts as overhead; only faults beyond it are "faulty"
    down = max(f, reserved)
    placed = ((h - down) // tp) * tp
    return h - placed - max(0, f - reserved)


def baseline_wasted_gpus(spec: BaselineSpec, cluster_gpus: int, F: Iterable[int],
                         tp_size: int) -> int:
    F = {g for g in F if 0 <= g < cluster_gpus}
    if spec.kind == "big_switch":
        return (cluster_gpus - len(F)) % tp_size

    if spec.kind == "sip_ring":
        rings = cluster_gpus // tp_size
        tail = cluster_gpus - rings * tp_size
        per_ring = _per_unit((g for g in F if g < rings * tp_size), tp_size)
        broken_healthy = sum(tp_size - f for f in per_ring.values())
        tail_healthy = tail - sum(1 for g in F if g >= rings * tp_size)
        return broken_healthy + tail_healthy

    h = spec.hbd_size
    if cluster_gpus % h:
        raise ValueError(f"{cluster_gpus} GPUs do not split into units of {h}")
    units = cluster_gpus // h
    per_unit = _per_unit(F, h)

    if spec.kind == "nvl":
        return sum(_nvl_wasted(h, spec.reserved, per_unit.get(u, 0), tp_size)
                   for u in range(units))

    # tpu_cube: groups no larger than a cube fragment inside each cube under
    # "fragment"; otherwise groups tile whole healthy cubes only
    if tp_size <= h and spec.cube_policy == "fragment":
        return sum((h - per_unit.get(u, 0)) % tp_size for u in range(units))
    healthy_cubes = units - len(per_unit)
    if tp_size <= h:
        placed = healthy_cubes * (h // tp_size) * tp_size
    else:
        placed = (healthy_cubes * h // tp_size) * tp_size
    return cluster_gpus - len(F) - placed


def baseline_waste(spec: BaselineSpec, cluster_gpus: int, F: Iterable[int], tp_size: int) -> float:
    """Fraction of the cluster's GPUs left idle by ``spec`` under fault set ``F``."""
    return baseline_wasted_gpus(spec, cluster_gpus, F, tp_size) / cluster_gpus


def baseline_max_job_scale(spec: BaselineSpec, cluster_gpus: int, F: Iterable[int],
                           tp_size: int) -> int:
    F = {g for g in F if 0 <= g < cluster_gpus}
    wasted = baseline_wasted_gpus(spec, cluster_gpus, F, tp_size)
    reserved_faulty = 0
    if spec.kind == "nvl":
        # faulty GPUs sitting in reserved slots are already inside ``wasted``
        per_unit = _per_unit(F, spec.hbd_size)
        reserved_faulty = sum(min(f, spec.reserved) for f in per_unit.values())
    return cluster_gpus - len(F) - wasted + reserved_faulty
