"""Intensive valuations of projector families at finite dimension.

Powers (projectors) and their commutation graph, intensive states evaluated
by the trace rule, the binary-valuation obstruction on Kochen-Specker sets,
experimental arrangements over tensor factorizations, and minimal
informationally complete power sets ("quantum individuals").
"""

from .arrangements import (
    ExperimentalArrangement,
    arrangement_knowledge,
    arrangement_potentia,
    build_arrangement,
    derive_subarrangement,
    power_effect,
    rebase,
)
from .contextuality import (
    BinaryValuation,
    KsInstance,
    flat_enumeration,
    intensive_certificate,
    search_binary_valuation,
    verify_instance,
)
from .errors import QLabError
from .formats import bundled_instance
from .graph import PowerGraph, build_power_graph, enumerate_contexts, export_graph
from .individuals import (
    QuantumIndividual,
    atomist_contrast,
    completeness_rank,
    derive_potentia,
    find_minimal_individual,
    reconstruct,
)
from .linalg import (
    DEFAULT_TOL,
    Power,
    commutes,
    conjugate,
    make_projector,
    orthogonal,
    partial_trace,
    tensor,
)
from .valuation import GivTable, IntensiveState, make_giv, potentia, random_state, validate_isa

__version__ = "0.1.0"

__all__ = [
    "arrangement_knowledge",
    "arrangement_potentia",
    "atomist_contrast",
    "BinaryValuation",
    "build_arrangement",
    "build_power_graph",
    "bundled_instance",
    "commutes",
    "completeness_rank",
    "conjugate",
    "DEFAULT_TOL",
    "derive_potentia",
    "derive_subarrangement",
    "enumerate_contexts",
    "ExperimentalArrangement",
    "export_graph",
    "find_minimal_individual",
    "flat_enumeration",
    "GivTable",
    "intensive_certificate",
    "IntensiveState",
    "KsInstance",
    "make_giv",
    "make_projector",
    "orthogonal",
    "partial_trace",
    "potentia",
    "Power",
    "power_effect",
    "PowerGraph",
    "QLabError",
    "QuantumIndividual",
    "random_state",
    "rebase",
    "reconstruct",
    "search_binary_valuation",
    "tensor",
    "validate_isa",
    "verify_instance",
]

