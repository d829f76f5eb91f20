"""Simulator for reconfigurable K-hop ring GPU interconnects."""

from .config import ClusterConfig, ConfigError, JobSpec, load_cluster_config
from .topology import (ClusterTopology, DeployedTopology, GpuRing, InfeasibleRingError,
                       build_alltoall_topology, build_deployment, build_khop_topology, form_ring)
from .orchestration import (PlacementScheme, orchestrate_dcn_free, orchestrate_fat_tree,
                            orchestrate_greedy_baseline)

__version__ = "0.1.0"
