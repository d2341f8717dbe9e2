"""Robust clustering of ad-hoc cognitive radio networks.

Distributed schemes (ROSS with and without size control, in best-response
and one-shot variants), the SOC baseline, a centralized exact optimizer,
and the experiment harness around them.
"""

from .model import (
    ChannelSet,
    Cluster,
    Clustering,
    ConnectivityVector,
    Topology,
    ValidationReport,
    cluster_cc,
    common_channels,
    connectivity_vector,
    validate_clustering,
)
from .scenario import (
    PrimaryUser,
    ScenarioConfig,
    ScenarioState,
    add_pu_batch,
    derive_availability,
    fig1_fixture,
    generate,
)

__all__ = [
    "ChannelSet",
    "Cluster",
    "Clustering",
    "ConnectivityVector",
    "Topology",
    "ValidationReport",
    "cluster_cc",
    "common_channels",
    "connectivity_vector",
    "validate_clustering",
    "PrimaryUser",
    "ScenarioConfig",
    "ScenarioState",
    "add_pu_batch",
    "derive_availability",
    "fig1_fixture",
    "generate",
]

__version__ = "0.1.0"
