"""Optimal transport on the line between discretized Lebesgue measure and atoms."""

from .balanced import BalancedResult, DiscreteMeasure, solve_balanced
from .costs import CostSpec, segment_cost, single_atom_cost
from .diagnostics import (
    BoundaryDiagnostics,
    EventStudy,
    MonotonicityReport,
    boundary_diagnostics,
    edge_monotonicity_check,
    event_a_n_study,
)
from .semicoupling import (
    DEFAULT_DELTA,
    DiscretizedSupply,
    SemicouplingPlan,
    adaptive_padding,
    default_padding,
    solve_semicoupling,
)
from .solver import TransportError, solve_units

__all__ = [
    "BalancedResult",
    "BoundaryDiagnostics",
    "CostSpec",
    "DEFAULT_DELTA",
    "DiscreteMeasure",
    "DiscretizedSupply",
    "MonotonicityReport",
    "SemicouplingPlan",
    "TransportError",
    "adaptive_padding",
    "boundary_diagnostics",
    "default_padding",
    "edge_monotonicity_check",
    "event_a_n_study",
    "EventStudy",
    "segment_cost",
    "single_atom_cost",
    "solve_balanced",
    "solve_semicoupling",
    "solve_units",
]
