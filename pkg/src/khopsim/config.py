"""Cluster and job configuration objects plus the key-value config loader."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml


class ConfigError(ValueError):
    """Raised when a cluster or job configuration violates its invariants."""


@dataclass(frozen=True)
class ClusterConfig:
    n: int
    R: int = 4
    K: int = 2
    p: int = 1
    d: Optional[int] = None
    ring_closed: bool = False

    def __post_init__(self) -> None:
        if self.d is None:
            object.__setattr__(self, "d", (self.n // self.p) * self.p if self.p >= 1 else self.n)
        if self.n < 1:
            raise ConfigError(f"nodes must be >= 1, got {self.n}")
        if self.R < 1:
            raise ConfigError(f"gpus_per_node must be >= 1, got {self.R}")
        if not 1 <= self.K <= self.R:
            raise ConfigError(f"k must satisfy 1 <= k <= gpus_per_node ({self.R}), got {self.K}")
        if self.ring_closed and self.n < 2 * self.K + 1:
            raise ConfigError(
                f"a closed ring needs nodes >= 2k+1 = {2 * self.K + 1}, got {self.n}"
            )
        if self.p < 1:
            raise ConfigError(f"nodes_per_tor must be >= 1, got {self.p}")
        if self.p > self.n:
            raise ConfigError(f"nodes_per_tor ({self.p}) exceeds nodes ({self.n})")
        if self.d < self.p or self.d % self.p:
            raise ConfigError(
                f"nodes_per_domain ({self.d}) must be a positive multiple of nodes_per_tor ({self.p})"
            )
        if self.d > self.n:
            raise ConfigError(f"nodes_per_domain ({self.d}) exceeds nodes ({self.n})")

    @property
    def gpus(self) -> int:
        return self.n * self.R


@dataclass(frozen=True)
class JobSpec:
    """A single training job: TP size ``t``, job scale ``s`` GPUs, ``r`` GPUs per node."""

    t: int
    s: int
    r: int

    def __post_init__(self) -> None:
        if self.t < 1 or self.r < 1 or self.s < 0:
            raise ConfigError(f"invalid job t={self.t} s={self.s} r={self.r}")
        if self.t % self.r:
            raise ConfigError(f"tp size {self.t} is not a multiple of gpus_per_node {self.r}")
        if self.s % self.t:
            raise ConfigError(f"job scale {self.s} is not a multiple of tp size {self.t}")

    @property
    def m(self) -> int:
        """Nodes per TP group."""
        return self.t // self.r

    @property
    def groups(self) -> int:
        return self.s // self.t


_KEYMAP = {
    "nodes": "n",
    "gpus_per_node": "R",
    "k": "K",
    "nodes_per_tor": "p",
    "nodes_per_domain": "d",
    "ring_closed": "ring_closed",
}


def cluster_from_mapping(raw: Mapping[str, Any]) -> ClusterConfig:
    unknown = set(raw) - set(_KEYMAP)
    if unknown:
        raise ConfigError(f"unknown cluster keys: {sorted(unknown)}")
    if "nodes" not in raw:
        raise ConfigError("missing required key: nodes")
    kwargs = {}
    for key, attr in _KEYMAP.items():
        if key in raw and raw[key] is not None:
            value = raw[key]
            kwargs[attr] = bool(value) if attr == "ring_closed" else int(value)
    return ClusterConfig(**kwargs)


def cluster_to_mapping(cfg: ClusterConfig) -> dict:
    inverse = {v: k for k, v in _KEYMAP.items()}
    return {inverse[f.name]: getattr(cfg, f.name) for f in fields(cfg)}


def read_mapping(path: str | Path) -> dict:
    """Read a YAML or JSON key-value file into a dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_cluster_config(path: str | Path) -> ClusterConfig:
    data = read_mapping(path)
    # either a "cluster:" section or a flat file mixing cluster keys with scenario keys
    if "cluster" in data:
        return cluster_from_mapping(data["cluster"])
    return cluster_from_mapping({k: v for k, v in data.items() if k in _KEYMAP})
