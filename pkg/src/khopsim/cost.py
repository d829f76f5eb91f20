"""Interconnect cost/power per GPU and the fault-aware aggregate cost.

Bills of materials live in a CSV (bundled copy at ``data/bom.csv``); each row
is one component of one architecture and repeats the architecture's GPU count
and per-GPU bandwidth.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO

BOM_COLUMNS = ("architecture", "component", "quantity", "unit_cost", "unit_bandwidth",
               "unit_power", "gpu_count", "gpu_bandwidth")


@dataclass(frozen=True)
class ComponentEntry:
    name: str
    quantity: float
    unit_cost: float
    unit_bandwidth: float
    unit_power: float

    def __post_init__(self) -> None:
        for k in ("quantity", "unit_cost", "unit_bandwidth", "unit_power"):
            if getattr(self, k) < 0:
                raise ValueError(f"{self.name}: {k} must be non-negative")


@dataclass
class ArchitectureBOM:
    name: str
    gpu_count: int
    per_gpu_bandwidth: float
    components: List[ComponentEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.gpu_count < 1:
            raise ValueError(f"{self.name}: gpu_count must be >= 1")

    @property
    def total_cost(self) -> float:
        return sum(c.quantity * c.unit_cost for c in self.components)

    @property
    def total_power(self) -> float:
        return sum(c.quantity * c.unit_power for c in self.components)


@dataclass(frozen=True)
class PerGpuFigures:
    cost: float
    power: float
    cost_per_gbps: float
    power_per_gbps: float


def read_boms(source: TextIO | str) -> Dict[str, ArchitectureBOM]:
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = csv.DictReader(line for line in source if line.strip() and not line.startswith("#"))
    missing = set(BOM_COLUMNS) - set(rows.fieldnames or ())
    if missing:
        raise ValueError(f"BOM file lacks columns {sorted(missing)}")
    boms: Dict[str, ArchitectureBOM] = {}
    for row in rows:
        name = row["architecture"].strip()
        gpus, bw = int(row["gpu_count"]), float(row["gpu_bandwidth"])
        bom = boms.setdefault(name, ArchitectureBOM(name, gpus, bw))
        if (bom.gpu_count, bom.per_gpu_bandwidth) != (gpus, bw):
            raise ValueError(f"{name}: inconsistent gpu_count/gpu_bandwidth across rows")
        bom.components.append(ComponentEntry(
            row["component"].strip(), float(row["quantity"]), float(row["unit_cost"]),
            float(row["unit_bandwidth"]), float(row["unit_power"]),
        ))
    return boms


def load_boms(path: Optional[Path | str] = None) -> Dict[str, ArchitectureBOM]:
    """Read a BOM file; ``None`` loads the bundled one."""
    if path is None:
        text = resources.files("khopsim").joinpath("data/bom.csv").read_text()
    else:
        text = Path(path).read_text()
    return read_boms(text)


def per_gpu_cost_power(bom: ArchitectureBOM) -> PerGpuFigures:
    if bom.gpu_count <= 0:
        raise ValueError("gpu_count must be positive")
    cost = bom.total_cost / bom.gpu_count
    power = bom.total_power / bom.gpu_count
    bw = bom.per_gpu_bandwidth
    return PerGpuFigures(cost, power, cost / bw, power / bw)


def aggregate_cost(gpu_unit_cost: float, wasted: float, faulty: float, interconnect: float) -> float:
    return gpu_unit_cost * (wasted + faulty) + interconnect


def crossover(xs: Sequence[float], a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """First x where ``a - b`` turns from <= 0 to > 0, linearly interpolated."""
    prev = None
    for x, ya, yb in zip(xs, a, b):
        diff = ya - yb
        if prev is not None and prev[1] <= 0 < diff:
            x0, d0 = prev
            return x0 + (x - x0) * (-d0) / (diff - d0) if diff != d0 else x
        prev = (x, diff)
    return None
