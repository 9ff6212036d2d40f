"""Multihop quantum teleportation over noisy cluster-state links."""

__version__ = "0.1.0"

from .channels import NoiseKind, amplitude_kraus, phase_kraus
from .network import (
    Topology,
    discover_route,
    parse_topology,
    simulate_multihop,
    total_fidelity,
    total_success_prob,
    two_hop_success_prob,
)
from .states import BellKind, ClusterParams, InputParams, make_bell, make_cluster
from .swap import correction_table, swap_chain
from .teleport import PovmParams, hop_success_prob, povm_set

__all__ = [
    "BellKind",
    "ClusterParams",
    "InputParams",
    "NoiseKind",
    "PovmParams",
    "Topology",
    "amplitude_kraus",
    "correction_table",
    "discover_route",
    "hop_success_prob",
    "make_bell",
    "make_cluster",
    "parse_topology",
    "phase_kraus",
    "povm_set",
    "simulate_multihop",
    "swap_chain",
    "total_fidelity",
    "total_success_prob",
    "two_hop_success_prob",
]
