"""Synthesis, mapping and braid-level simulation of multi-level
magic-state distillation factories on a surface-code tile grid."""

from .protocol import (
    Circuit,
    FactoryConfig,
    ErrorModel,
    Gate,
    GateKind,
    QubitRef,
    ReusePolicy,
    Role,
    build_factory,
    build_module,
    build_error_model,
    code_distance,
    round_area,
    round_error,
    success_probability,
)
from .interaction import InteractionGraph, communities, critical_path, from_circuit, layers
from .layout import (
    GridMapping,
    MetricReport,
    crossing_count,
    edge_length,
    edge_spacing,
    linear_mapping,
    random_mapping,
)
from .meshsim import SimPolicy, SimReport, route, simulate

__all__ = [
    "Circuit",
    "FactoryConfig",
    "ErrorModel",
    "Gate",
    "GateKind",
    "QubitRef",
    "ReusePolicy",
    "Role",
    "build_factory",
    "build_module",
    "build_error_model",
    "code_distance",
    "round_area",
    "round_error",
    "success_probability",
    "InteractionGraph",
    "communities",
    "critical_path",
    "from_circuit",
    "layers",
    "GridMapping",
    "MetricReport",
    "crossing_count",
    "edge_length",
    "edge_spacing",
    "linear_mapping",
    "random_mapping",
    "SimPolicy",
    "SimReport",
    "route",
    "simulate",
]

__version__ = "0.1.0"
